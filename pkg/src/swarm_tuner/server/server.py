"""Line-delimited JSON-RPC tool server (stdio or TCP).

The server exposes three tools: ``run_ws_pso_cm``, ``get_scenario`` and
``get_history``.  At most one optimizer run is in flight; a second
``run_ws_pso_cm`` call while one is running is answered with ``BUSY``.
``tools/call`` is additionally throttled by a token bucket.
"""

from __future__ import annotations

import datetime as _dt
import logging
import os
import socketserver
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, BinaryIO, Callable

from .. import __version__
from ..radio_map import RadioMap
from ..scenario import Scenario, scenario_to_dict
from ..swarm.optimizer import DEFAULT_P_ITER, run_ws_pso_cm
from ..swarm.params import HyperParams
from . import rpc
from .rpc import RpcError
from .runlog import RunLog
from .tools import (HISTORY_SCHEMA, RUN_SCHEMA, SCENARIO_SCHEMA, ToolDescriptor,
                    published_tools, validate_arguments)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "2024-11-05"
SERVER_NAME = "swarm-tuner"
LOG_ENV = "SWARM_TUNER_LOG"
DEFAULT_RATE_PER_MIN = 10.0


class TokenBucket:
    """``capacity`` tokens, refilled continuously at ``rate`` tokens per second."""

    def __init__(self, capacity: float, rate: float, clock: Callable[[], float] = time.monotonic):
        self.capacity = float(capacity)
        self.rate = float(rate)
        self.clock = clock
        self.tokens = float(capacity)
        self.stamp = clock()
        self._lock = threading.Lock()

    def take(self) -> float:
        """Consume a token; returns 0 on success, else seconds until one is available."""
        with self._lock:
            now = self.clock()
            self.tokens = min(self.capacity, self.tokens + (now - self.stamp) * self.rate)
            self.stamp = now
            if self.tokens >= 1.0:
                self.tokens -= 1.0
                return 0.0
            return (1.0 - self.tokens) / self.rate


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="milliseconds")


class ToolServer:
    def __init__(self, scenario: Scenario, rmap: RadioMap, map_seed: int | None = None,
                 run_log: RunLog | None = None, rate_limit: float | None = DEFAULT_RATE_PER_MIN,
                 clock: Callable[[], float] = time.monotonic,
                 now: Callable[[], str] = _utc_now,
                 runner: Callable[..., Any] = run_ws_pso_cm):
        self.scenario = scenario
        self.rmap = rmap
        self.map_seed = map_seed
        self.run_log = run_log if run_log is not None else RunLog()
        self.bucket = (TokenBucket(rate_limit, rate_limit / 60.0, clock)
                       if rate_limit else None)
        self.now = now
        self.runner = runner
        self._run_slot = threading.Lock()
        self.tools = {t.name: t for t in (
            ToolDescriptor(
                "run_ws_pso_cm",
                "Run the warm-started particle swarm optimizer (with crossover and "
                "mutation) on the loaded scenario and radio map with the given "
                "hyper-parameters. Returns the min sum-rate and penalty breakdown of "
                "the best trajectory and appends a run record.",
                RUN_SCHEMA, self._tool_run, long_running=True),
            ToolDescriptor(
                "get_scenario",
                "Describe the loaded scenario: fleet sizes, horizon, physical limits, "
                "buildings and UGV paths.",
                SCENARIO_SCHEMA, self._tool_scenario),
            ToolDescriptor(
                "get_history",
                "Return recent optimizer run records, newest first.",
                HISTORY_SCHEMA, self._tool_history),
        )}

    # -- tools ---------------------------------------------------------------

    def _tool_run(self, args: dict) -> dict:
        hyper = HyperParams.from_dict(args)
        p_iter = int(args.get("p_iter", DEFAULT_P_ITER))
        seed = int(args.get("seed", 0))
        t0 = time.perf_counter()
        result = self.runner(self.scenario, self.rmap, hyper, p_iter=p_iter, seed=seed)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        b = result.breakdown
        metrics = {"min_sum_rate": b.t_value, "f_value": b.f_value, "s_value": b.s_value,
                   "a_value": b.a_value, "c_value": b.c_value, "wall_ms": round(wall_ms, 3)}
        rec = self.run_log.append(hyper, p_iter, seed, metrics, self.now())
        return {"run_id": rec.run_id, "metrics": metrics, "hyper": hyper.to_dict(),
                "p_iter": p_iter, "seed": seed, "evaluations": result.evaluations,
                "collisions": result.collisions}

    def _tool_scenario(self, args: dict) -> dict:
        sc = self.scenario
        return {"scenario": scenario_to_dict(sc), "map_seed": self.map_seed,
                "derived": {"v_max_mps": sc.v_max, "theta_max_rad": sc.theta_max,
                            "p_max_w": sc.p_max, "n0_w": sc.n0}}

    def _tool_history(self, args: dict) -> dict:
        limit = int(args.get("limit", 20))
        return {"records": [r.to_dict() for r in self.run_log.recent(limit)]}

    # -- dispatch ------------------------------------------------------------

    def dispatch(self, msg: Any):
        """Answer ``msg``.

        Returns a response dict, ``None`` (notification), or a zero-argument
        callable producing the response when the request must run on the
        optimizer worker.  For callables the run slot is already held and is
        released by the callable.
        """
        req_id = msg.get("id") if isinstance(msg, dict) else None
        try:
            req_id, method, params, notification = rpc.check_request(msg)
        except RpcError as err:
            if not isinstance(req_id, (str, int, float)) or isinstance(req_id, bool):
                req_id = None
            return rpc.error_response(req_id, err)
        try:
            out = self._route(method, params)
        except RpcError as err:
            return None if notification else rpc.error_response(req_id, err)
        except Exception as exc:  # defensive: never let a handler kill the server
            log.exception("internal error in %s", method)
            err = RpcError(rpc.INTERNAL_ERROR, f"Internal error: {exc}")
            return None if notification else rpc.error_response(req_id, err)
        if callable(out):
            def deferred():
                try:
                    res = rpc.result_response(req_id, out())
                except RpcError as err:
                    res = rpc.error_response(req_id, err)
                return None if notification else res
            return deferred
        return None if notification else rpc.result_response(req_id, out)

    def _route(self, method: str, params):
        if method == "initialize":
            return {"protocolVersion": PROTOCOL_VERSION,
                    "serverInfo": {"name": SERVER_NAME, "version": __version__},
                    "capabilities": {"tools": {"listChanged": False}}}
        if method == "notifications/initialized":
            return {}
        if method == "ping":
            return {}
        if method == "tools/list":
            return {"tools": published_tools(list(self.tools.values()))}
        if method == "tools/call":
            return self._call(params)
        raise RpcError(rpc.METHOD_NOT_FOUND, f"Method not found: {method}")

    def _call(self, params):
        if not isinstance(params, dict) or not isinstance(params.get("name"), str):
            raise RpcError(rpc.INVALID_PARAMS, 'Invalid params: "name" (string) is required')
        tool = self.tools.get(params["name"])
        if tool is None:
            raise RpcError(rpc.INVALID_PARAMS, f"Invalid params: unknown tool {params['name']!r}")
        args = validate_arguments(tool, params.get("arguments"))
        if self.bucket is not None:
            wait = self.bucket.take()
            if wait > 0:
                raise RpcError(rpc.RATE_LIMITED, "rate limited",
                               {"retry_after": round(wait, 3)})

        def execute():
            try:
                payload = tool.handler(args)
            except RpcError:
                raise
            except Exception as exc:
                log.exception("tool %s failed", tool.name)
                raise RpcError(rpc.TOOL_FAILURE, f"tool {tool.name} failed: {exc}") from None
            try:
                text = rpc.encode(payload)
            except ValueError:
                raise RpcError(rpc.TOOL_FAILURE,
                               f"tool {tool.name} failed: non-finite result") from None
            return {"content": [{"type": "text", "text": text}],
                    "structuredContent": payload, "isError": False}

        if not tool.long_running:
            return execute()
        if not self._run_slot.acquire(blocking=False):
            raise RpcError(rpc.BUSY, "busy: an optimizer run is already in progress")

        def run_and_release():
            try:
                return execute()
            finally:
                self._run_slot.release()
        return run_and_release

    def handle(self, msg: Any):
        """Synchronous dispatch: runs deferred work inline."""
        out = self.dispatch(msg)
        return out() if callable(out) else out

    def handle_line(self, line: bytes | str) -> str | None:
        text = line.decode("utf-8", "replace") if isinstance(line, bytes) else line
        if not text.strip():
            return None
        try:
            msg = rpc.decode_line(line)
        except RpcError as err:
            return rpc.encode(rpc.error_response(None, err))
        out = self.handle(msg)
        return None if out is None else rpc.encode(out)


def serve_stream(server: ToolServer, infile: BinaryIO, outfile: BinaryIO):
    """Serve one line-delimited byte stream until EOF.

    The calling thread reads and dispatches; optimizer runs execute on a
    single worker thread so ``tools/list`` or ``get_history`` are answered
    while a run is in flight.
    """
    write_lock = threading.Lock()

    def send(msg):
        if msg is None:
            return
        try:
            data = (rpc.encode(msg) + "\n").encode("ascii")
        except ValueError as exc:
            err = RpcError(rpc.INTERNAL_ERROR, f"Internal error: {exc}")
            data = (rpc.encode(rpc.error_response(msg.get("id"), err)) + "\n").encode("ascii")
        with write_lock:
            try:
                outfile.write(data)
                outfile.flush()
            except (BrokenPipeError, ValueError, OSError):
                pass

    with ThreadPoolExecutor(max_workers=1, thread_name_prefix="optimizer") as worker:
        for raw in iter(infile.readline, b""):
            if not raw.strip():
                continue
            try:
                msg = rpc.decode_line(raw.rstrip(b"\r\n"))
            except RpcError as err:
                send(rpc.error_response(None, err))
                continue
            out = server.dispatch(msg)
            if callable(out):
                worker.submit(_guarded, out, send, msg)
            else:
                send(out)


def _guarded(job, send, msg):
    """Run a deferred request; any escape still yields an answer."""
    try:
        out = job()
    except Exception as exc:
        log.exception("deferred request failed")
        err = RpcError(rpc.INTERNAL_ERROR, f"Internal error: {exc}")
        out = rpc.error_response(msg.get("id"), err) if "id" in msg else None
    send(out)


def serve_stdio(server: ToolServer):
    serve_stream(server, sys.stdin.buffer, sys.stdout.buffer)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        serve_stream(self.server.tool_server, self.rfile, self.wfile)


class TcpToolServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], tool_server: ToolServer):
        self.tool_server = tool_server
        super().__init__(address, _Handler)


def serve_tcp(server: ToolServer, host: str = "127.0.0.1", port: int = 8765):
    with TcpToolServer((host, port), server) as tcp:
        log.info("listening on %s:%d", *tcp.server_address[:2])
        tcp.serve_forever()


def default_log_path(flag: str | None) -> str | None:
    return flag or os.environ.get(LOG_ENV) or None
