"""Penalized fitness ``F = k1*T - k2*S - k3*A - k4*C`` (maximized)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import link_layer
from ..radio_map import RadioMap
from ..scenario import Scenario
from .params import HyperParams
from .penalties import angle_penalty, building_penalty, collision_penalty, speed_penalty


@dataclass(frozen=True)
class FitnessBreakdown:
    t_value: float
    s_value: float
    a_value: float
    c_value: float
    f_value: float
    d_value: float = 0.0  # collision term, weight 0 unless enabled

    def to_dict(self) -> dict:
        return asdict(self)


def combine(hyper: HyperParams, t, s, a, c, d=0.0, collision_weight: float = 0.0):
    f = hyper.k1 * t - hyper.k2 * s - hyper.k3 * a - hyper.k4 * c
    if collision_weight:
        f = f - collision_weight * d
    return f


def fitness(traj, scenario: Scenario, rmap: RadioMap, hyper: HyperParams,
            collision_weight: float = 0.0) -> FitnessBreakdown:
    """Reference single-trajectory fitness through the scalar link layer."""
    traj = np.asarray(traj, dtype=float)
    sched, power = link_layer.greedy_schedule_and_power(traj, scenario, rmap)
    t = link_layer.min_sum_rate(traj, sched, power, scenario, rmap)
    s = speed_penalty(traj, scenario)
    a = angle_penalty(traj, scenario)
    c = building_penalty(traj, scenario)
    d = collision_penalty(traj, scenario) if collision_weight else 0.0
    return FitnessBreakdown(t, s, a, c, float(combine(hyper, t, s, a, c, d, collision_weight)), d)


class SwarmEvaluator:
    """Batched fitness over stacked trajectories ``(P, M, T, 3)``."""

    def __init__(self, scenario: Scenario, rmap: RadioMap, hyper: HyperParams,
                 collision_weight: float = 0.0):
        self.scenario = scenario
        self.rmap = rmap
        self.hyper = hyper
        self.collision_weight = collision_weight
        self.count = 0

    def parts(self, trajs: np.ndarray) -> dict[str, np.ndarray]:
        sc = self.scenario
        gains = link_layer.batch_link_gains(trajs, self.rmap)
        t = link_layer.batch_min_sum_rate(gains, sc.p_max, sc.n0, sc.r_min)
        s = np.atleast_1d(speed_penalty(trajs, sc))
        a = np.atleast_1d(angle_penalty(trajs, sc))
        c = np.atleast_1d(building_penalty(trajs, sc))
        if self.collision_weight:
            d = np.atleast_1d(collision_penalty(trajs, sc))
        else:
            d = np.zeros_like(t)
        f = combine(self.hyper, t, s, a, c, d, self.collision_weight)
        self.count += len(trajs)
        return {"t": t, "s": s, "a": a, "c": c, "d": d, "f": f}

    def __call__(self, trajs: np.ndarray) -> np.ndarray:
        return self.parts(trajs)["f"]

    def breakdown(self, traj: np.ndarray) -> FitnessBreakdown:
        p = self.parts(np.asarray(traj, dtype=float)[None])
        return FitnessBreakdown(*(float(p[k][0]) for k in ("t", "s", "a", "c", "f", "d")))
