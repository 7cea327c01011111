import numpy as np
import pytest

from swarm_tuner.swarm.fitness import SwarmEvaluator, fitness
from swarm_tuner.swarm.optimizer import (SwarmOptions, init_swarm, run_ws_pso_cm,
                                         uav_assignments, warm_start)
from swarm_tuner.swarm.params import BASELINE1, HyperParams

from conftest import make_scenario, table_map

SMALL = HyperParams(p_num=10, omega=0.6, c1=1.5, c2=1.5, k1=2, k2=0.5, k3=5, k4=5)


def test_assignment_round_robin():
    assert uav_assignments(4, 8) == [[0, 4], [1, 5], [2, 6], [3, 7]]
    assert uav_assignments(3, 4) == [[0, 3], [1, 0], [2, 1]]


def test_warm_start_hovers_over_static_ugv():
    sc = make_scenario(M=1, N=1, T=5, h_min=60.0, h_max=100.0,
                       ugvs=[{"speed_kmh": 10.0, "waypoints": [[50.0, 50.0, 0.0]]}])
    w = warm_start(sc)
    assert np.array_equal(w, np.tile([50.0, 50.0, 80.0], (1, 5, 1)))


def test_warm_start_respects_speed_limit(ref_scenario):
    w = warm_start(ref_scenario)
    step = np.linalg.norm(np.diff(w, axis=1), axis=-1)
    assert (step <= ref_scenario.v_max * ref_scenario.tau + 1e-9).all()
    assert np.array_equal(w, warm_start(ref_scenario))


def test_warm_start_beats_random_trajectories(ref_scenario, ref_map):
    sc = ref_scenario
    ev = SwarmEvaluator(sc, ref_map, BASELINE1)
    rng = np.random.default_rng(123)
    rand = rng.uniform(sc.box_lower, sc.box_upper, size=(100, sc.M, sc.T, 3))
    assert ev(warm_start(sc)[None])[0] > ev(rand).mean()


def test_init_swarm(ref_scenario, ref_map):
    warm = warm_start(ref_scenario)
    ev = SwarmEvaluator(ref_scenario, ref_map, SMALL)
    st = init_swarm(warm, SMALL, 3, ev)
    assert np.array_equal(st.particles[0].position, warm)
    assert st.g_best_fitness == max(p.p_best_fitness for p in st.particles)
    for p in st.particles[1:]:
        d = np.abs(p.position - warm)
        assert (d[..., :2] <= 10 + 1e-9).all() and (d[..., 2] <= 5 + 1e-9).all()
        assert (p.velocity == 0).all()
    two = HyperParams(2, 0.5, 1, 1, 1, 1, 1, 1)
    a = init_swarm(warm, two, 9, SwarmEvaluator(ref_scenario, ref_map, two))
    b = init_swarm(warm, two, 9, SwarmEvaluator(ref_scenario, ref_map, two))
    assert all(np.array_equal(x.position, y.position) for x, y in zip(a.particles, b.particles))
    assert a.g_best_fitness == b.g_best_fitness


def test_random_init_ignores_warm(ref_scenario, ref_map):
    ev = SwarmEvaluator(ref_scenario, ref_map, SMALL)
    st = init_swarm(warm_start(ref_scenario), SMALL, 3, ev, SwarmOptions(init="random"))
    assert not np.array_equal(st.particles[0].position, warm_start(ref_scenario))


def test_p_iter_zero_is_initial_best(ref_scenario, ref_map):
    res = run_ws_pso_cm(ref_scenario, ref_map, SMALL, p_iter=0, seed=4)
    assert len(res.history) == 1
    assert res.evaluations == SMALL.p_num
    ev = SwarmEvaluator(ref_scenario, ref_map, SMALL)
    st = init_swarm(warm_start(ref_scenario), SMALL, 4, ev)
    assert res.history[0] == st.g_best_fitness
    assert np.array_equal(res.g_best, st.g_best)


def test_run_monotone_deterministic_and_consistent(ref_scenario, ref_map):
    a = run_ws_pso_cm(ref_scenario, ref_map, SMALL, p_iter=8, seed=11)
    b = run_ws_pso_cm(ref_scenario, ref_map, SMALL, p_iter=8, seed=11)
    assert len(a.history) == 9
    assert all(y >= x for x, y in zip(a.history, a.history[1:]))
    assert a.history == b.history and np.array_equal(a.g_best, b.g_best)
    assert a.to_record() == b.to_record()
    assert a.evaluations == SMALL.p_num * (1 + 2 * 8)
    ref = fitness(a.g_best, ref_scenario, ref_map, SMALL)
    assert a.breakdown.f_value == pytest.approx(ref.f_value, rel=1e-12)
    assert a.breakdown.f_value == pytest.approx(a.history[-1], rel=1e-12)
    assert ((a.g_best >= ref_scenario.box_lower) & (a.g_best <= ref_scenario.box_upper)).all()


def test_invalid_inputs_fail_before_evaluating(ref_scenario, ref_map):
    with pytest.raises(ValueError):
        run_ws_pso_cm(ref_scenario, ref_map, dict(SMALL.to_dict(), p_num=1))
    with pytest.raises(ValueError):
        run_ws_pso_cm(ref_scenario, ref_map, SMALL, p_iter=-1)


def test_tiny_instance_runs():
    sc = make_scenario(M=2, N=2, T=2)
    rmap = table_map(sc, [[1e-9, 2e-9], [3e-9, 1e-9]])
    res = run_ws_pso_cm(sc, rmap, HyperParams(4, 0.5, 1, 1, 1, 1, 1, 1), p_iter=3, seed=0)
    assert len(res.history) == 4
    assert res.collisions["violations"] >= 0
