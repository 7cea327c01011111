"""Warm-started particle swarm with crossover and mutation."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..radio_map import RadioMap
from ..scenario import Scenario, ugv_positions
from .fitness import FitnessBreakdown, SwarmEvaluator
from .operators import (P_MUTATION, SIGMA_HORIZONTAL, SIGMA_VERTICAL, Particle, crossover,
                        mutate, update_position, update_velocity)
from .params import HyperParams
from .penalties import collision_report

RESULT_SCHEMA_VERSION = 1
DEFAULT_P_ITER = 50


@dataclass(frozen=True)
class SwarmOptions:
    init: str = "warm"  # or "random"
    per_coordinate_random: bool = False
    boundary: str = "clamp"  # or "reflect"
    jitter_h: float = 10.0
    jitter_v: float = 5.0
    p_mutation: float = P_MUTATION
    sigma_h: float = SIGMA_HORIZONTAL
    sigma_v: float = SIGMA_VERTICAL
    collision_weight: float = 0.0

    def __post_init__(self):
        if self.init not in ("warm", "random"):
            raise ValueError(f"init must be 'warm' or 'random', got {self.init!r}")
        if self.boundary not in ("clamp", "reflect"):
            raise ValueError(f"boundary must be 'clamp' or 'reflect', got {self.boundary!r}")


def uav_assignments(n_uav: int, n_ugv: int) -> list[list[int]]:
    """Round-robin: UAV m (0-based) tracks UGVs ``(m + j*M) mod N``."""
    k = math.ceil(n_ugv / n_uav)
    return [[(m + j * n_uav) % n_ugv for j in range(k)] for m in range(n_uav)]


def warm_start(scenario: Scenario, rmap: RadioMap | None = None) -> np.ndarray:
    """Deterministic geometric initial trajectory set ``(M, T, 3)``.

    Each UAV chases the centroid of its assigned UGVs at mid altitude, moving
    at most ``v_max * tau`` per slot.  ``rmap`` is accepted for interface
    symmetry; the geometry alone decides the path.
    """
    sc = scenario
    ugv = ugv_positions(sc)  # (N, T, 3)
    z = 0.5 * (sc.h_min + sc.h_max)
    step = sc.v_max * sc.tau
    traj = np.empty((sc.n_uav, sc.n_slots, 3))
    for m, group in enumerate(uav_assignments(sc.n_uav, sc.n_ugv)):
        target = ugv[group, :, :2].mean(axis=0)
        cur = target[0].copy()
        traj[m, 0, :2] = cur
        for t in range(1, sc.n_slots):
            move = target[t] - cur
            dist = float(np.linalg.norm(move))
            if dist > step:
                move *= step / dist
            cur = cur + move
            traj[m, t, :2] = cur
        traj[m, :, 2] = z
    return np.clip(traj, sc.box_lower, sc.box_upper)


def random_start(scenario: Scenario, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` trajectory sets with every waypoint uniform in the flight box."""
    sc = scenario
    return rng.uniform(sc.box_lower, sc.box_upper, size=(count, sc.n_uav, sc.n_slots, 3))


@dataclass
class SwarmState:
    particles: list[Particle]
    g_best: np.ndarray
    g_best_fitness: float
    g_best_index: int
    iter: int
    rng: np.random.Generator

    def select_g_best(self):
        fits = [p.p_best_fitness for p in self.particles]
        i = int(np.argmax(fits))
        self.g_best_index = i
        self.g_best = self.particles[i].p_best.copy()
        self.g_best_fitness = float(fits[i])


def _refresh_p_best(particles: list[Particle], fit: np.ndarray):
    for p, f in zip(particles, fit):
        if f > p.p_best_fitness:
            p.p_best = p.position.copy()
            p.p_best_fitness = float(f)


def init_swarm(warm: np.ndarray, hyper: HyperParams, seed, evaluator: SwarmEvaluator,
               options: SwarmOptions = SwarmOptions()) -> SwarmState:
    """Particle 1 is ``warm`` verbatim; the rest are jittered copies.

    With ``options.init == "random"`` every particle is drawn uniformly from
    the flight box instead and ``warm`` is ignored.
    """
    sc = evaluator.scenario
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    P = hyper.p_num
    if options.init == "random":
        positions = random_start(sc, rng, P)
    else:
        warm = np.asarray(warm, dtype=float)
        scale = np.array([options.jitter_h, options.jitter_h, options.jitter_v])
        jitter = rng.uniform(-1.0, 1.0, size=(P - 1,) + warm.shape) * scale
        rest = np.clip(warm[None] + jitter, sc.box_lower, sc.box_upper)
        positions = np.concatenate([warm[None].copy(), rest])
    fit = evaluator(positions)
    particles = [Particle(positions[i].copy(), np.zeros_like(positions[i]),
                          positions[i].copy(), float(fit[i])) for i in range(P)]
    state = SwarmState(particles, particles[0].p_best.copy(), -np.inf, 0, 0, rng)
    state.select_g_best()
    return state


def swarm_step(state: SwarmState, hyper: HyperParams, evaluator: SwarmEvaluator,
               options: SwarmOptions = SwarmOptions()):
    """One iteration: velocity/position update, pBest/gBest, crossover, mutation."""
    sc = evaluator.scenario
    lo, hi = sc.box_lower, sc.box_upper
    rng = state.rng
    parts = state.particles
    for p in parts:
        p.velocity = update_velocity(p, state.g_best, hyper, rng, options.per_coordinate_random)
        p.position = update_position(p, lo, hi, options.boundary)
    _refresh_p_best(parts, evaluator(np.stack([p.position for p in parts])))
    state.select_g_best()

    order = rng.permutation(len(parts))
    for i in range(len(parts) // 2):
        a, b = int(order[2 * i]), int(order[2 * i + 1])
        parts[a], parts[b] = crossover(parts[a], parts[b], rng)
    for i, p in enumerate(parts):
        if i != state.g_best_index:
            parts[i] = mutate(p, rng, lo, hi, options.p_mutation, options.sigma_h,
                              options.sigma_v)
    _refresh_p_best(parts, evaluator(np.stack([p.position for p in parts])))
    state.select_g_best()
    state.iter += 1


@dataclass
class OptimizationResult:
    g_best: np.ndarray
    breakdown: FitnessBreakdown
    history: list[float]
    evaluations: int
    wall_time: float
    hyper: HyperParams
    p_iter: int
    seed: int | None
    collisions: dict = field(default_factory=dict)

    def to_record(self, include_timing: bool = False) -> dict:
        rec = {
            "schema": RESULT_SCHEMA_VERSION,
            "hyper": self.hyper.to_dict(),
            "p_iter": self.p_iter,
            "seed": self.seed,
            "fitness": self.breakdown.to_dict(),
            "history": list(self.history),
            "evaluations": self.evaluations,
            "collisions": self.collisions,
            "g_best": self.g_best.tolist(),
        }
        if include_timing:
            rec["wall_time_s"] = self.wall_time
        return rec


def run_ws_pso_cm(scenario: Scenario, rmap: RadioMap, hyper: HyperParams,
                  p_iter: int = DEFAULT_P_ITER, seed: int | None = 0,
                  options: SwarmOptions = SwarmOptions(), callback=None) -> OptimizationResult:
    """Run the optimizer for ``p_iter`` iterations from a seeded swarm.

    ``history[0]`` is the initial gBest fitness and ``history[i]`` the value
    after iteration ``i``.  ``callback(state)`` is called after each
    iteration if given.
    """
    if not isinstance(hyper, HyperParams):
        hyper = HyperParams.from_dict(dict(hyper))
    if int(p_iter) != p_iter or p_iter < 0:
        raise ValueError(f"p_iter must be a non-negative integer, got {p_iter}")
    start = time.perf_counter()
    evaluator = SwarmEvaluator(scenario, rmap, hyper, options.collision_weight)
    warm = warm_start(scenario, rmap)
    state = init_swarm(warm, hyper, seed, evaluator, options)
    history = [state.g_best_fitness]
    for _ in range(int(p_iter)):
        swarm_step(state, hyper, evaluator, options)
        history.append(state.g_best_fitness)
        if callback is not None:
            callback(state)
    n_evals = evaluator.count
    breakdown = evaluator.breakdown(state.g_best)
    return OptimizationResult(
        g_best=state.g_best,
        breakdown=breakdown,
        history=history,
        evaluations=n_evals,
        wall_time=time.perf_counter() - start,
        hyper=hyper,
        p_iter=int(p_iter),
        seed=seed,
        collisions=collision_report(state.g_best, scenario).to_dict(),
    )
