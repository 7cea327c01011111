"""Particle state and the per-particle update / genetic operators."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .params import HyperParams

P_MUTATION = 0.05
SIGMA_HORIZONTAL = 5.0
SIGMA_VERTICAL = 2.0


@dataclass
class Particle:
    position: np.ndarray  # (M, T, 3)
    velocity: np.ndarray  # (M, T, 3)
    p_best: np.ndarray
    p_best_fitness: float

    def copy(self) -> "Particle":
        return Particle(self.position.copy(), self.velocity.copy(),
                        self.p_best.copy(), self.p_best_fitness)


def update_velocity(particle: Particle, g_best: np.ndarray, hyper: HyperParams,
                    rng, per_coordinate: bool = False) -> np.ndarray:
    """``w*v + c1*r1*(pBest - q) + c2*r2*(gBest - q)``.

    By default ``r1`` and ``r2`` are single draws shared by every coordinate
    of the particle; ``per_coordinate=True`` draws them elementwise.
    """
    q = particle.position
    if per_coordinate:
        r1 = rng.random(q.shape)
        r2 = rng.random(q.shape)
    else:
        r1 = rng.random()
        r2 = rng.random()
    return (hyper.omega * particle.velocity
            + hyper.c1 * r1 * (particle.p_best - q)
            + hyper.c2 * r2 * (g_best - q))


def confine(position: np.ndarray, lower, upper, velocity=None, boundary: str = "clamp"):
    """Bring waypoints back into the box; returns ``(position, velocity)``.

    ``reflect`` mirrors overshoot back inside and flips the offending velocity
    component; anything still outside after one reflection is clamped.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if boundary == "clamp":
        return np.clip(position, lower, upper), velocity
    if boundary != "reflect":
        raise ValueError(f"unknown boundary mode {boundary!r}")
    pos = position.copy()
    below, above = pos < lower, pos > upper
    pos = np.where(below, 2 * lower - pos, pos)
    pos = np.where(above, 2 * upper - pos, pos)
    if velocity is not None:
        velocity = np.where(below | above, -velocity, velocity)
    return np.clip(pos, lower, upper), velocity


def update_position(particle: Particle, lower, upper, boundary: str = "clamp") -> np.ndarray:
    """``q + v`` confined to the flight box.  May flip velocity under ``reflect``."""
    pos, vel = confine(particle.position + particle.velocity, lower, upper,
                       particle.velocity, boundary)
    if vel is not None:
        particle.velocity = vel
    return pos


def crossover(parent_a: Particle, parent_b: Particle, rng, cut: int | None = None):
    """Single-point crossover on the time axis.

    The cut slot ``t*`` (1-based) is drawn uniformly from ``2..T-1`` unless
    given; the children exchange every UAV's waypoints and velocities for
    slots ``>= t*``.  Each child keeps its own slot's personal best.
    """
    T = parent_a.position.shape[1]
    if cut is None:
        if T < 3:
            return parent_a.copy(), parent_b.copy()
        cut = int(rng.integers(2, T))
    k = cut - 1
    a, b = parent_a.copy(), parent_b.copy()
    a.position[:, k:] = parent_b.position[:, k:]
    b.position[:, k:] = parent_a.position[:, k:]
    a.velocity[:, k:] = parent_b.velocity[:, k:]
    b.velocity[:, k:] = parent_a.velocity[:, k:]
    return a, b


def mutate(particle: Particle, rng, lower, upper, p_m: float = P_MUTATION,
           sigma_h: float = SIGMA_HORIZONTAL, sigma_v: float = SIGMA_VERTICAL) -> Particle:
    """Gaussian waypoint jitter with per-waypoint probability ``p_m``.

    Random draws do not depend on ``p_m``, so the generator advances the same
    way whatever the rate.
    """
    M, T, _ = particle.position.shape
    hit = rng.random((M, T)) < p_m
    noise = rng.standard_normal((M, T, 3)) * np.array([sigma_h, sigma_h, sigma_v])
    pos = np.where(hit[..., None], particle.position + noise, particle.position)
    pos = np.clip(pos, lower, upper)
    return replace(particle, position=pos, velocity=particle.velocity.copy(),
                   p_best=particle.p_best.copy())
