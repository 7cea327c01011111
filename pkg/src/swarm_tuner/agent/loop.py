"""Propose / run / observe loop driving the tool server."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..swarm.params import HyperParams
from .memory import Memory, TuningRecord
from .profile import AgentProfile

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1
RUN_TOOL = "run_ws_pso_cm"


@dataclass
class TuningResult:
    best: TuningRecord | None
    memory: Memory
    stop_reason: str
    advisor: str = ""
    p_iter: int = 50
    seed: int = 0
    bounds: dict = field(default_factory=dict)
    clamped: list = field(default_factory=list)

    def to_report(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "advisor": self.advisor,
            "p_iter": self.p_iter,
            "seed": self.seed,
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "stop_reason": self.stop_reason,
            "iterations": len(self.memory),
            "best_iteration": self.best.iteration if self.best else None,
            "best": self.best.to_dict() if self.best else None,
            "clamped_iterations": list(self.clamped),
            "records": [r.to_dict() for r in self.memory],
        }


def write_report(result: TuningResult, path: str | Path):
    Path(path).write_text(json.dumps(result.to_report(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def tune(client, profile: AgentProfile, advisor, max_iters: int = 12,
         patience: int | None = 3, p_iter: int = 50, seed: int = 0,
         on_record=None) -> TuningResult:
    """Run the loop until the advisor stops, ``max_iters`` runs, or ``patience``.

    ``patience=None`` disables the loop-side stall rule (the advisor decides).
    Every executed proposal is first clamped into ``profile.bounds``.
    """
    if max_iters < 1:
        raise ValueError("max_iters: must be ≥ 1")
    memory = Memory()
    clamped = []
    reason = "max_iters"
    while len(memory) < max_iters:
        prop = advisor.propose(profile, memory)
        if prop.terminate:
            reason = "terminate"
            break
        hyper = profile.clamp(prop.params)
        try:
            raw = HyperParams.from_dict(prop.params)
        except ValueError:
            raw = None
        if raw != hyper:
            clamped.append(len(memory) + 1)
        args = dict(hyper.to_dict(), p_iter=p_iter, seed=seed)
        out = client.call_tool(RUN_TOOL, args)
        rec = memory.write(hyper, out["metrics"], prop.rationale, int(out["run_id"]),
                           p_iter, seed)
        log.info("iteration %d: min_sum_rate=%.6g", rec.iteration, rec.min_sum_rate)
        if on_record is not None:
            on_record(rec)
        if patience is not None and memory.stale_count() >= patience:
            reason = "patience"
            break
    return TuningResult(memory.best(), memory, reason, getattr(advisor, "name", ""),
                        p_iter, seed, dict(profile.bounds), clamped)
