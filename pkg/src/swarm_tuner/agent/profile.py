"""Agent profile: mission, background, output format and search bounds."""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from importlib import resources

from ..swarm.params import PARAM_NAMES, HyperParams

# spans both presets and every logged agent proposal
DEFAULT_BOUNDS = {
    "p_num": (10.0, 200.0),
    "omega": (0.0, 1.5),
    "c1": (0.0, 10.0),
    "c2": (0.0, 10.0),
    "k1": (0.0, 10.0),
    "k2": (0.0, 10.0),
    "k3": (0.0, 10.0),
    "k4": (0.0, 10.0),
}

MISSION = (
    "Tune the eight hyper-parameters of a warm-started particle swarm optimizer with "
    "crossover and mutation. The optimizer plans 3D trajectories for a team of UAVs "
    "that receive uplink data from ground vehicles over a radio map. Maximize the "
    "min sum-rate (bps/Hz) of the best trajectory returned by the run_ws_pso_cm tool."
)

BACKGROUND = """\
Particle swarm optimization moves P_num particles through the search space. Each
particle keeps a velocity v and its personal best pBest; the swarm shares a global
best gBest. Velocity update: v <- omega*v + c1*r1*(pBest - q) + c2*r2*(gBest - q),
with r1, r2 uniform in [0, 1]. Large omega favours exploration, small omega favours
exploitation; c1 pulls towards a particle's own memory, c2 towards the swarm.
Common stable settings are near omega = 0.729, c1 = c2 = 1.494.

Here a particle is the full set of UAV waypoints over T slots. The swarm starts
around a heuristic trajectory (each UAV follows the centroid of the ground vehicles
it serves), so the initial gBest is already feasible. After each velocity step,
pairs of particles swap the tails of their trajectories at a random cut slot
(crossover) and every particle except gBest has each coordinate perturbed with small
probability (mutation).

Fitness F = k1*T - k2*S - k3*A - k4*C, where T is the min over ground vehicles of
their total achieved rate, S penalizes steps faster than the UAV speed limit, A
penalizes turns sharper than the maximum turning angle and C penalizes waypoints
inside buildings. Only the ratios between k1 and k2..k4 matter for the search; too
small penalty weights admit infeasible trajectories, too large ones freeze the swarm
at the warm start. More particles cost proportionally more run time."""


@dataclass
class AgentProfile:
    mission: str = MISSION
    background: str = BACKGROUND
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    output_keys: tuple = PARAM_NAMES + ("terminate",)

    def __post_init__(self):
        self.validate()

    def validate(self) -> "AgentProfile":
        if not self.bounds:
            raise ValueError("bounds: must not be empty")
        missing = [k for k in PARAM_NAMES if k not in self.bounds]
        if missing:
            raise ValueError(f"bounds: missing {', '.join(missing)}")
        for k, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValueError(f"bounds.{k}: need lower < upper, got [{lo}, {hi}]")
        if not set(PARAM_NAMES) <= set(self.output_keys):
            raise ValueError("output_keys: must cover all eight hyper-parameters")
        return self

    def clamp(self, hyper) -> HyperParams:
        """Project a proposal (HyperParams or mapping) into the bounds.

        p_num is rounded to an integer.
        """
        raw = hyper.to_dict() if isinstance(hyper, HyperParams) else hyper
        vals = {}
        for k in PARAM_NAMES:
            lo, hi = self.bounds[k]
            v = min(max(float(raw[k]), lo), hi)
            if k == "p_num":
                v = int(round(v))
                if math.ceil(lo) <= math.floor(hi):
                    v = min(max(v, math.ceil(lo)), math.floor(hi))
                v = max(2, v)
            vals[k] = v
        return HyperParams(**vals)

    def contains(self, hyper: HyperParams) -> bool:
        return all(self.bounds[k][0] <= getattr(hyper, k) <= self.bounds[k][1]
                   for k in PARAM_NAMES)

    def render(self) -> str:
        template = string.Template(
            resources.files(__package__).joinpath("prompts/profile.md").read_text("utf-8"))
        bounds = "\n".join(f"- {k}: [{lo:g}, {hi:g}]" + (" (integer)" if k == "p_num" else "")
                           for k, (lo, hi) in self.bounds.items())
        keys = "\n".join(f"- `{k}`" for k in self.output_keys)
        return template.substitute(mission=self.mission, background=self.background,
                                   bounds=bounds, output_keys=keys)
