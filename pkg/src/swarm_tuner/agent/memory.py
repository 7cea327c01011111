"""Session memory: the ordered list of executed proposals and their outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..swarm.params import PARAM_NAMES, HyperParams

# wall-clock metrics are dropped so session reports are reproducible
TIMING_KEYS = ("wall_ms",)


@dataclass(frozen=True)
class TuningRecord:
    iteration: int
    proposal: HyperParams
    metrics: dict
    rationale: str
    run_id: int
    p_iter: int = 50
    seed: int = 0

    @property
    def min_sum_rate(self) -> float:
        return float(self.metrics["min_sum_rate"])

    def to_dict(self, include_timing: bool = False) -> dict:
        metrics = {k: v for k, v in self.metrics.items()
                   if include_timing or k not in TIMING_KEYS}
        return {"iteration": self.iteration, "run_id": self.run_id,
                "hyper": self.proposal.to_dict(), "p_iter": self.p_iter, "seed": self.seed,
                "metrics": metrics, "rationale": self.rationale}

    @classmethod
    def from_dict(cls, d: dict) -> "TuningRecord":
        return cls(int(d["iteration"]), HyperParams.from_dict(d["hyper"]), dict(d["metrics"]),
                   str(d.get("rationale", "")), int(d["run_id"]), int(d.get("p_iter", 50)),
                   int(d.get("seed", 0)))


@dataclass
class Memory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def write(self, proposal: HyperParams, metrics: dict, rationale: str, run_id: int,
              p_iter: int = 50, seed: int = 0) -> TuningRecord:
        rec = TuningRecord(len(self.records) + 1, proposal, dict(metrics), rationale, run_id,
                           p_iter, seed)
        self.records.append(rec)
        return rec

    def best(self) -> TuningRecord | None:
        """Highest min_sum_rate; earliest wins ties."""
        best = None
        for rec in self.records:
            if best is None or rec.min_sum_rate > best.min_sum_rate:
                best = rec
        return best

    def stale_count(self) -> int:
        """Records since the best one, i.e. consecutive non-improving iterations."""
        best = self.best()
        return 0 if best is None else len(self.records) - best.iteration

    def table(self) -> str:
        """Plain-text table of every iteration, one row per run."""
        head = ["iter"] + list(PARAM_NAMES) + ["min_sum_rate", "F", "S", "A", "C"]
        rows = [" | ".join(head)]
        for r in self.records:
            h = r.proposal
            cells = [str(r.iteration), str(h.p_num)] + [f"{getattr(h, k):g}" for k in PARAM_NAMES[1:]]
            m = r.metrics
            cells += [f"{m['min_sum_rate']:.4f}", f"{m['f_value']:.4f}", f"{m['s_value']:.4g}",
                      f"{m['a_value']:.4g}", f"{m['c_value']:.4g}"]
            rows.append(" | ".join(cells))
        return "\n".join(rows)
