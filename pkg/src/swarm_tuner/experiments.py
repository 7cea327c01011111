"""Seeded comparison runs and their tabular reports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .link_layer import greedy_schedule_and_power, rate_tensor, link_gains
from .radio_map import RadioMap
from .scenario import Scenario
from .swarm.optimizer import OptimizationResult, run_ws_pso_cm
from .swarm.params import PRESETS, HyperParams


def relative_gain(a: float, b: float) -> float:
    """Gain of ``a`` over ``b`` in percent."""
    return (a - b) / b * 100.0


def resolve_config(spec: str) -> tuple[str, HyperParams]:
    """``spec`` is a preset name, a JSON file, or ``label=preset|file``.

    JSON files may hold a bare hyper-parameter object, a run result
    (``hyper`` key) or a tuning session report (``best.hyper``).
    """
    label, _, target = spec.partition("=") if "=" in spec else ("", "", spec)
    if target in PRESETS:
        return label or target, PRESETS[target]
    path = Path(target)
    if not path.is_file():
        raise ValueError(f"config {spec!r}: not a preset ({', '.join(PRESETS)}) or a file")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(obj.get("best"), dict):
        obj = obj["best"]
    if isinstance(obj.get("hyper"), dict):
        obj = obj["hyper"]
    return label or path.stem, HyperParams.from_dict(obj)


@dataclass
class ConfigSummary:
    label: str
    hyper: HyperParams
    values: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def min(self) -> float:
        return float(np.min(self.values))

    @property
    def max(self) -> float:
        return float(np.max(self.values))


def compare(configs: list[tuple[str, HyperParams]], scenario: Scenario, rmap: RadioMap,
            seeds, p_iter: int = 50, progress=None) -> list[ConfigSummary]:
    if len(configs) < 2:
        raise ValueError("need ≥ 2 configs")
    out = []
    for label, hyper in configs:
        vals = []
        for s in seeds:
            res = run_ws_pso_cm(scenario, rmap, hyper, p_iter=p_iter, seed=int(s))
            vals.append(res.breakdown.t_value)
            if progress is not None:
                progress(label, s, res)
        out.append(ConfigSummary(label, hyper, vals))
    return out


def summary_rows(summaries: list[ConfigSummary]) -> list[list]:
    return [[s.label, len(s.values), s.mean, s.min, s.max] + s.hyper.as_vector()
            for s in summaries]


def gain_rows(summaries: list[ConfigSummary]) -> list[list]:
    """Mean min sum-rate gain (%) of each config (row) over each other (column)."""
    return [[a.label] + [relative_gain(a.mean, b.mean) for b in summaries] for a in summaries]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def write_compare_tsv(summaries: list[ConfigSummary], seeds, path: str | Path):
    from .swarm.params import PARAM_NAMES

    lines = ["# seeds\t" + ",".join(str(int(s)) for s in seeds),
             "\t".join(["config", "runs", "mean", "min", "max"] + list(PARAM_NAMES))]
    lines += ["\t".join(_fmt(v) for v in row) for row in summary_rows(summaries)]
    lines += ["", "\t".join(["gain_pct"] + [s.label for s in summaries])]
    lines += ["\t".join(_fmt(v) for v in row) for row in gain_rows(summaries)]
    lines += ["", "\t".join(["config"] + [f"seed_{int(s)}" for s in seeds])]
    lines += ["\t".join([s.label] + [_fmt(float(v)) for v in s.values]) for s in summaries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def trajectory_rows(result: OptimizationResult, scenario: Scenario, rmap: RadioMap) -> list:
    """One row per (m, t): m, t, x, y, z, scheduled UGV (0 if none), rate; 1-based."""
    traj = result.g_best
    sched, power = greedy_schedule_and_power(traj, scenario, rmap)
    rates = rate_tensor(link_gains(traj, rmap), sched, power, scenario.n0)
    rows = []
    for m in range(scenario.M):
        for t in range(scenario.T):
            hits = np.flatnonzero(sched[m, :, t])
            n = int(hits[0]) + 1 if hits.size else 0
            r = float(rates[m, n - 1, t]) if n else 0.0
            x, y, z = (float(v) for v in traj[m, t])
            rows.append([m + 1, t + 1, x, y, z, n, r])
    return rows


def write_trajectory_tsv(rows: list, path: str | Path):
    lines = ["m\tt\tx\ty\tz\tn\trate"]
    lines += ["\t".join([str(r[0]), str(r[1])] + [f"{v:.6f}" for v in r[2:5]]
                        + [str(r[5]), f"{r[6]:.6f}"]) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
