"""Append-only run log: one JSON record per line."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from ..swarm.params import HyperParams

LOG_SCHEMA_VERSION = 1
METRIC_KEYS = ("min_sum_rate", "f_value", "s_value", "a_value", "c_value", "wall_ms")


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    hyper: HyperParams
    p_iter: int
    seed: int
    metrics: dict
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "schema": LOG_SCHEMA_VERSION,
            "run_id": self.run_id,
            "hyper": self.hyper.to_dict(),
            "p_iter": self.p_iter,
            "seed": self.seed,
            "metrics": dict(self.metrics),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        if d.get("schema") != LOG_SCHEMA_VERSION:
            raise ValueError(f"unsupported run record schema {d.get('schema')!r}")
        return cls(int(d["run_id"]), HyperParams.from_dict(d["hyper"]), int(d["p_iter"]),
                   int(d["seed"]), dict(d["metrics"]), str(d["timestamp"]))


class RunLog:
    """Run history, optionally mirrored to a JSONL file.

    Existing records in ``path`` are replayed on open so ids keep increasing
    across server restarts.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._records: list[RunRecord] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._records = replay(self.path)

    @property
    def next_id(self) -> int:
        return self._records[-1].run_id + 1 if self._records else 1

    def append(self, hyper: HyperParams, p_iter: int, seed: int, metrics: dict,
               timestamp: str) -> RunRecord:
        with self._lock:
            rec = RunRecord(self.next_id, hyper, p_iter, seed, dict(metrics), timestamp)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
                    fh.flush()
            self._records.append(rec)
            return rec

    def recent(self, limit: int = 20) -> list[RunRecord]:
        with self._lock:
            return list(reversed(self._records[-limit:])) if limit > 0 else []

    def __len__(self):
        return len(self._records)


def replay(path: str | Path) -> list[RunRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = RunRecord.from_dict(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad run record: {exc}") from None
            if records and rec.run_id <= records[-1].run_id:
                raise ValueError(f"{path}:{lineno}: run ids must increase")
            records.append(rec)
    return records
