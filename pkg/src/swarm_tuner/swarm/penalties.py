"""Constraint-violation measures on UAV trajectories.

All functions accept ``traj`` of shape ``(..., M, T, 3)`` and reduce over the
last three axes, so a single trajectory gives a float and a stacked swarm
gives one value per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenario import Scenario


def _reduce(x: np.ndarray):
    out = x.sum(axis=(-2, -1))
    return float(out) if out.ndim == 0 else out


def step_speeds(traj: np.ndarray, tau: float) -> np.ndarray:
    """``|l[t] - l[t-1]| / tau`` for t = 2..T, shape ``(..., M, T-1)``."""
    return np.linalg.norm(np.diff(traj, axis=-2), axis=-1) / tau


# relative overshoot treated as round-off rather than a violation
SPEED_TOLERANCE = 1e-9


def speed_penalty(traj, scenario: Scenario):
    v = step_speeds(np.asarray(traj, dtype=float), scenario.tau)
    vmax = scenario.v_max
    excess = (v - vmax) / vmax
    return _reduce(np.where(excess > SPEED_TOLERANCE, excess, 0.0))


def turning_angles(traj: np.ndarray) -> np.ndarray:
    """Angle between consecutive displacements at t = 2..T-1, ``(..., M, T-2)``.

    A zero-length displacement yields angle 0.
    """
    d = np.diff(traj, axis=-2)
    a, b = d[..., :-1, :], d[..., 1:, :]
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    dot = (a * b).sum(axis=-1)
    denom = na * nb
    safe = denom > 0
    cos = np.divide(dot, denom, out=np.ones_like(dot), where=safe)
    return np.where(safe, np.arccos(np.clip(cos, -1.0, 1.0)), 0.0)


def angle_penalty(traj, scenario: Scenario):
    theta = turning_angles(np.asarray(traj, dtype=float))
    tmax = scenario.theta_max
    return _reduce(np.maximum(0.0, (theta - tmax) / tmax))


def building_intrusion(traj: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Relative depth below the roof, per waypoint ``(..., M, T)``.

    For a waypoint over building ``b`` below its top this is
    ``(height - H) / height``; the deepest intrusion counts when footprints
    overlap.  Zero elsewhere.
    """
    traj = np.asarray(traj, dtype=float)
    out = np.zeros(traj.shape[:-1])
    for b in scenario.buildings:
        if b.height <= 0:
            continue
        inside = b.contains_xy(traj[..., :2])
        depth = (b.height - traj[..., 2]) / b.height
        out = np.maximum(out, np.where(inside, depth, 0.0))
    return out


def building_penalty(traj, scenario: Scenario):
    # slot T is excluded from the sum
    delta = building_intrusion(traj, scenario)[..., :-1]
    return _reduce(np.maximum(0.0, delta))


def pairwise_uav_distances(traj: np.ndarray) -> np.ndarray:
    """Distances for every pair m < m', ``(..., n_pairs, T)``."""
    traj = np.asarray(traj, dtype=float)
    M = traj.shape[-3]
    iu, ju = np.triu_indices(M, k=1)
    return np.linalg.norm(traj[..., iu, :, :] - traj[..., ju, :, :], axis=-1)


def collision_penalty(traj, scenario: Scenario):
    """Optional term: sum of ``(d_min - d) / d_min`` over too-close pairs."""
    d = pairwise_uav_distances(traj)
    return _reduce(np.maximum(0.0, (scenario.d_min - d) / scenario.d_min))


@dataclass(frozen=True)
class CollisionReport:
    violations: int
    min_distance: float  # inf when M = 1

    def to_dict(self) -> dict:
        return {"violations": self.violations,
                "min_distance": None if np.isinf(self.min_distance) else self.min_distance}


def collision_report(traj, scenario: Scenario) -> CollisionReport:
    d = pairwise_uav_distances(traj)
    if d.size == 0:
        return CollisionReport(0, float("inf"))
    return CollisionReport(int((d < scenario.d_min).sum()), float(d.min()))
