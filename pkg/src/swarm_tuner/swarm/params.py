"""Hyper-parameters of the optimizer and the reported reference settings."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

PARAM_NAMES = ("p_num", "omega", "c1", "c2", "k1", "k2", "k3", "k4")


class HyperParamError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class HyperParams:
    p_num: int
    omega: float
    c1: float
    c2: float
    k1: float
    k2: float
    k3: float
    k4: float

    def __post_init__(self):
        if isinstance(self.p_num, bool) or not float(self.p_num).is_integer():
            raise HyperParamError("p_num", f"must be an integer, got {self.p_num!r}")
        object.__setattr__(self, "p_num", int(self.p_num))
        if self.p_num < 2:
            raise HyperParamError("p_num", f"must satisfy p_num ≥ 2, got {self.p_num}")
        for f in fields(self)[1:]:
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise HyperParamError(f.name, f"must be a number, got {v!r}")
            v = float(v)
            if not math.isfinite(v) or v < 0:
                raise HyperParamError(f.name, f"must be finite and ≥ 0, got {v}")
            object.__setattr__(self, f.name, v)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        missing = [k for k in PARAM_NAMES if k not in d]
        if missing:
            raise HyperParamError(missing[0], "missing")
        return cls(**{k: d[k] for k in PARAM_NAMES})

    def as_vector(self) -> list[float]:
        return [float(getattr(self, k)) for k in PARAM_NAMES]


# human-heuristic setting
BASELINE1 = HyperParams(p_num=100, omega=0.5, c1=2, c2=2, k1=2, k2=0.5, k3=5, k4=5)
# one uniform random draw
BASELINE2 = HyperParams(p_num=58, omega=0.8765, c1=5.4321, c2=9.8765,
                        k1=3.7284, k2=8.1235, k3=1.9823, k4=6.5432)

PRESETS = {"baseline1": BASELINE1, "baseline2": BASELINE2}

# proposals of the six agent iterations, in order
REPLAY_ROWS = (
    HyperParams(p_num=46, k1=0.12, k2=0.65, k3=0.15, k4=0.06, omega=0.68, c1=1.55, c2=1.45),
    HyperParams(p_num=50, k1=0.1, k2=0.7, k3=0.1, k4=0.1, omega=0.729, c1=1.494, c2=1.494),
    HyperParams(p_num=40, k1=0.1, k2=0.7, k3=0.1, k4=0.05, omega=0.7, c1=1.5, c2=1.5),
    HyperParams(p_num=50, k1=0.15, k2=0.6, k3=0.3, k4=0.1, omega=0.6, c1=1.8, c2=1.8),
    HyperParams(p_num=40, k1=0.15, k2=0.6, k3=0.2, k4=0.05, omega=0.65, c1=1.6, c2=1.4),
    HyperParams(p_num=40, k1=0.12, k2=0.63, k3=0.2, k4=0.02, omega=0.68, c1=1.7, c2=1.3),
)
