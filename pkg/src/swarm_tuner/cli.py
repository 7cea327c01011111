"""Command line entry point: map, run, compare, serve, tune.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 protocol or
transport error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .scenario import REFERENCE_SCENARIO, ScenarioError, load_scenario, ugv_positions
from .swarm.params import PARAM_NAMES, PRESETS, HyperParamError, HyperParams

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_PROTOCOL = 0, 1, 2, 3

class UsageError(ValueError):
    pass


def _load(args):
    from .radio_map import RadioMap, generate_synthetic_map

    sc = load_scenario(args.scenario)
    if getattr(args, "map", None):
        rmap = RadioMap.load(args.map)
        if (rmap.n_ugv, rmap.n_slots) != (sc.N, sc.T) or rmap.grid != sc.grid:
            raise UsageError(f"map {args.map} does not match scenario {args.scenario}")
    else:
        rmap = generate_synthetic_map(sc, args.map_seed)
    return sc, rmap


def _hyper_from_args(args) -> HyperParams:
    vals = PRESETS[args.preset].to_dict() if args.preset else {}
    for k in PARAM_NAMES:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    missing = [k for k in PARAM_NAMES if k not in vals]
    if missing:
        raise UsageError(f"missing hyper-parameters {', '.join(missing)} "
                         "(give --preset or all eight values)")
    return HyperParams.from_dict(vals)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _count(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be ≥ 0, got {v}")
    return v


def _parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise UsageError("empty seed list")
    return seeds


# -- commands ------------------------------------------------------------------

def cmd_map(args) -> int:
    from .plotting import plot_map_slice
    from .radio_map import generate_synthetic_map

    sc = load_scenario(args.scenario)
    rmap = generate_synthetic_map(sc, args.map_seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rmap.save(out)
    print(f"map\t{out}\tN={rmap.n_ugv}\tT={rmap.n_slots}\tdims={'x'.join(map(str, sc.grid.dims))}")
    if args.plot:
        png = plot_map_slice(rmap, 1, 1, 1, out.with_suffix(".png"))
        print(f"figure\t{png}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .experiments import trajectory_rows, write_trajectory_tsv
    from .plotting import plot_convergence, plot_trajectories
    from .swarm.optimizer import SwarmOptions, run_ws_pso_cm

    hyper = _hyper_from_args(args)
    sc, rmap = _load(args)
    opts = SwarmOptions(init=args.init)
    res = run_ws_pso_cm(sc, rmap, hyper, p_iter=args.p_iter, seed=args.seed, options=opts)
    out = _outdir(args.out)
    rec = res.to_record()
    rec["map_seed"] = args.map_seed
    rec["scenario"] = sc.name
    _dump(rec, out / "result.json")
    write_trajectory_tsv(trajectory_rows(res, sc, rmap), out / "trajectory.tsv")
    plot_trajectories(res.g_best, sc, ugv_positions(sc), out / "trajectory.png")
    plot_convergence(res.history, out / "convergence.png")
    b = res.breakdown
    print("min_sum_rate\tf_value\ts_value\ta_value\tc_value\tevaluations")
    print(f"{b.t_value:.6f}\t{b.f_value:.6f}\t{b.s_value:.6f}\t{b.a_value:.6f}\t"
          f"{b.c_value:.6f}\t{res.evaluations}")
    return EXIT_OK


def cmd_compare(args) -> int:
    from .experiments import compare, gain_rows, resolve_config, write_compare_tsv
    from .plotting import plot_compare

    if len(args.config) < 2:
        raise UsageError("need ≥ 2 configs")
    try:
        configs = [resolve_config(c) for c in args.config]
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None
    labels = [c[0] for c in configs]
    if len(set(labels)) != len(labels):
        raise UsageError("config labels must be unique (use label=preset)")
    seeds = _parse_seeds(args.seeds)
    sc, rmap = _load(args)
    summaries = compare(configs, sc, rmap, seeds, p_iter=args.p_iter)
    out = _outdir(args.out)
    write_compare_tsv(summaries, seeds, out / "compare.tsv")
    plot_compare(summaries, out / "compare.png")
    print("config\tmean\tmin\tmax")
    for s in summaries:
        print(f"{s.label}\t{s.mean:.6f}\t{s.min:.6f}\t{s.max:.6f}")
    print("gain_pct\t" + "\t".join(labels))
    for row in gain_rows(summaries):
        print(row[0] + "\t" + "\t".join(f"{v:.2f}" for v in row[1:]))
    return EXIT_OK


def _make_server(args):
    from .server.runlog import RunLog
    from .server.server import ToolServer, default_log_path

    sc, rmap = _load(args)
    log_path = default_log_path(getattr(args, "log", None))
    rate = args.rate_limit if args.rate_limit and args.rate_limit > 0 else None
    return ToolServer(sc, rmap, map_seed=args.map_seed, run_log=RunLog(log_path),
                      rate_limit=rate)


def cmd_serve(args) -> int:
    from .server.server import serve_stdio, serve_tcp

    server = _make_server(args)
    if args.transport == "stdio":
        serve_stdio(server)
    else:
        try:
            serve_tcp(server, args.host, args.port)
        except KeyboardInterrupt:
            pass
    return EXIT_OK


def _make_advisor(args, profile):
    from .agent.advisors import (ChatCompletionsSource, HeuristicAdvisor, HillClimbAdvisor,
                                 LLMAdvisor, RandomAdvisor, ReplaySource)

    if args.advisor == "heuristic":
        return HeuristicAdvisor()
    if args.advisor == "random":
        return RandomAdvisor(profile.bounds, seed=args.seed)
    if args.advisor == "hillclimb":
        return HillClimbAdvisor(profile.bounds, args.step, seed=args.seed,
                                patience=args.patience if args.patience is not None else 3)
    if args.replay:
        return LLMAdvisor(ReplaySource(args.replay))
    if not args.endpoint or not args.model:
        raise UsageError("--advisor llm needs --replay DIR or --endpoint and --model")
    return LLMAdvisor(ChatCompletionsSource(args.endpoint, args.model, args.api_key_env,
                                            timeout=args.timeout))


def _make_client(args):
    from .server.client import LoopbackTransport, StdioTransport, TcpTransport, ToolClient

    if args.connect:
        host, _, port = args.connect.rpartition(":")
        if not host or not port.isdigit():
            raise UsageError(f"--connect expects HOST:PORT, got {args.connect!r}")
        transport = TcpTransport(host, int(port))
    elif args.spawn:
        argv = [sys.executable, "-m", "swarm_tuner", "serve", "--transport", "stdio",
                "--scenario", str(args.scenario), "--map-seed", str(args.map_seed),
                "--rate-limit", str(args.rate_limit)]
        if args.map:
            argv += ["--map", str(args.map)]
        transport = StdioTransport(argv)
    else:
        transport = LoopbackTransport(_make_server(args))
    client = ToolClient(transport)
    client.initialize()
    return client


def cmd_tune(args) -> int:
    from .agent.loop import tune, write_report
    from .agent.profile import AgentProfile
    from .plotting import plot_tuning

    profile = AgentProfile()
    advisor = _make_advisor(args, profile)
    # the LLM decides when to stop unless a patience is given explicitly
    patience = args.patience if args.patience is not None else (
        None if args.advisor == "llm" else 3)
    client = _make_client(args)
    try:
        result = tune(client, profile, advisor, max_iters=args.max_iters, patience=patience,
                      p_iter=args.p_iter, seed=args.seed,
                      on_record=lambda r: print(f"iteration\t{r.iteration}\t"
                                                f"{r.min_sum_rate:.6f}", flush=True))
    finally:
        client.close()
    out = _outdir(args.out)
    report = result.to_report()
    report["map_seed"] = args.map_seed
    _dump(report, out / "session.json")
    if len(result.memory):
        plot_tuning(list(result.memory), out / "tuning.png")
    print(f"stop_reason\t{result.stop_reason}")
    if result.best is None:
        print("best\tnone")
        return EXIT_OK
    b = result.best
    print("best_iteration\tmin_sum_rate\t" + "\t".join(PARAM_NAMES))
    print(f"{b.iteration}\t{b.min_sum_rate:.6f}\t"
          + "\t".join(f"{getattr(b.proposal, k):g}" for k in PARAM_NAMES))
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_problem(p, with_map_file=True):
    p.add_argument("--scenario", default=str(REFERENCE_SCENARIO),
                   help="scenario TOML (default: packaged reference scenario)")
    p.add_argument("--map-seed", type=int, default=1, help="synthetic radio map seed")
    if with_map_file:
        p.add_argument("--map", help="load a saved .rmap instead of generating one")


def _add_hyper(p):
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--p-num", dest="p_num", type=int)
    for k in PARAM_NAMES[1:]:
        p.add_argument(f"--{k}", type=float)


def _add_server_opts(p, rate_limit=10.0):
    p.add_argument("--log", help="run log file (default: $SWARM_TUNER_LOG, else in-memory)")
    p.add_argument("--rate-limit", type=float, default=rate_limit,
                   help=f"tools/call per minute, 0 disables (default {rate_limit:g})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarm-tuner", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="generate and save a synthetic radio map")
    _add_problem(p, with_map_file=False)
    p.add_argument("--out", required=True, help="output .rmap file")
    p.add_argument("--plot", action="store_true", help="also render one gain slice")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("run", help="one optimizer run")
    _add_problem(p)
    _add_hyper(p)
    p.add_argument("--p-iter", type=_count, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("warm", "random"), default="warm")
    p.add_argument("--out", default="out/run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare configs over a seed list")
    _add_problem(p)
    p.add_argument("--config", action="append", default=[],
                   help="preset name, JSON file, or label=preset|file (repeat)")
    p.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 1,5,7")
    p.add_argument("--p-iter", type=_count, default=50)
    p.add_argument("--out", default="out/compare")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="run the JSON-RPC tool server")
    _add_problem(p)
    _add_server_opts(p)
    p.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("tune", help="run a tuning session")
    _add_problem(p)
    # applies to the in-process or spawned server only
    _add_server_opts(p, rate_limit=0.0)
    p.add_argument("--advisor", choices=("llm", "random", "hillclimb", "heuristic"),
                   default="hillclimb")
    p.add_argument("--replay", help="directory of canned LLM replies")
    p.add_argument("--endpoint", help="chat-completions URL")
    p.add_argument("--model")
    p.add_argument("--api-key-env", default="SWARM_TUNER_API_KEY",
                   help="environment variable holding the API key")
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--max-iters", type=_count, default=12)
    p.add_argument("--patience", type=int, default=None,
                   help="stop after this many non-improving runs (default 3; off for llm)")
    p.add_argument("--step", type=float, default=0.1, help="hill-climb step, fraction of range")
    p.add_argument("--p-iter", type=_count, default=50)
    p.add_argument("--seed", type=int, default=0, help="optimizer and advisor seed")
    conn = p.add_mutually_exclusive_group()
    conn.add_argument("--connect", metavar="HOST:PORT", help="use a running TCP server")
    conn.add_argument("--spawn", action="store_true", help="spawn a stdio server process")
    p.add_argument("--out", default="out/tune")
    p.set_defaults(func=cmd_tune)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    from .agent.advisors import AdvisorError
    from .server.client import TransportError
    from .server.rpc import RpcError

    try:
        return args.func(args)
    except (UsageError, ScenarioError, HyperParamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RpcError, TransportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except AdvisorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.raw:
            print(f"--- raw reply ---\n{exc.raw}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
