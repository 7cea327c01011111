import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarm_tuner.radio_map import (BLOCKAGE_FACTOR, PATH_LOSS_EXPONENT, REFERENCE_GAIN,
                                   Building, RadioMap, VoxelGrid, generate_synthetic_map,
                                   index_of, open_space_gain, path_gain, segment_hits_box)

from conftest import make_scenario

GRID = VoxelGrid(0.0, 0.0, 60.0, 5.0, (48, 80, 12))


@pytest.mark.parametrize("pos, idx", [
    ((12.3, 7.0, 63.0), (3, 2, 1)),
    ((0.0, 0.0, 60.0), (1, 1, 1)),
    ((239.9, 399.9, 119.9), (48, 80, 12)),
    ((240.0, 400.0, 120.0), (48, 80, 12)),  # closed upper faces
])
def test_index_of_examples(pos, idx):
    assert index_of(GRID, pos) == idx


@pytest.mark.parametrize("pos, axis", [((-0.1, 5, 70), "x"), ((5, 400.01, 70), "y"),
                                       ((5, 5, 59.0), "z"), ((5, 5, float("nan")), "z")])
def test_index_of_out_of_bounds_names_axis(pos, axis):
    with pytest.raises(ValueError, match=f"axis {axis}"):
        index_of(GRID, pos)


coord = st.tuples(st.floats(0, 240), st.floats(0, 400), st.floats(60, 120))


@given(coord)
def test_index_piecewise_constant(p):
    idx = index_of(GRID, p)
    assert all(1 <= i <= d for i, d in zip(idx, GRID.dims))
    assert index_of(GRID, GRID.center_of(idx)) == idx


@given(coord, st.integers(0, 2), st.floats(0, 50))
def test_index_monotone_per_axis(p, axis, step):
    q = list(p)
    q[axis] = min(q[axis] + step, GRID.upper[axis])
    assert index_of(GRID, q)[axis] >= index_of(GRID, p)[axis]


def test_vectorized_indices_match_scalar():
    rng = np.random.default_rng(0)
    pts = rng.uniform(GRID.lower, GRID.upper, size=(200, 3))
    got = GRID.indices(pts)
    assert [tuple(r) for r in got] == [index_of(GRID, p) for p in pts]


def test_open_space_ratio_two_d_vs_d():
    for d in (3.0, 17.0, 120.0):
        ratio = open_space_gain(2 * d) / open_space_gain(d)
        assert ratio == pytest.approx(2.0 ** -PATH_LOSS_EXPONENT, rel=1e-12)
    assert 2.0 ** -2.7 == pytest.approx(0.15389, abs=1e-5)


def _one_ugv(buildings=(), dims=(20, 20, 10), delta=1.0, x=0.5, y=0.5):
    return make_scenario(M=1, N=1, T=2, dims=dims, delta=delta, h_min=0.0, buildings=buildings,
                         ugvs=[{"speed_kmh": 3.6, "waypoints": [[x, y, 0.0]]}])


def test_voxel_holding_ugv_gets_reference_gain():
    sc = _one_ugv()
    rmap = generate_synthetic_map(sc, 3, shadowing_db=0.0)
    # centre (0.5, 0.5, 0.5) is closer than the 1 m reference distance
    assert path_gain(rmap, 1, 1, (1, 1, 1)) == REFERENCE_GAIN


def test_gain_non_increasing_along_unobstructed_ray():
    sc = _one_ugv()
    rmap = generate_synthetic_map(sc, 3, shadowing_db=0.0)
    for j, k in [(1, 1), (1, 5), (3, 10)]:
        g = [rmap.gain(1, 1, (i, j, k)) for i in range(1, 21)]
        assert all(b <= a for a, b in zip(g, g[1:]))


def _sampled_hit(src, dst, b: Building, samples=4001):
    """Ray sampling: (hit, clearance) where clearance is the distance margin."""
    s = np.linspace(0.0, 1.0, samples)[:, None]
    p = src + s * (dst - src)
    lo = np.array([b.x0, b.y0, 0.0])
    hi = np.array([b.x1, b.y1, b.height])
    inside_depth = np.min(np.minimum(p - lo, hi - p), axis=1)  # >0 strictly inside
    outside = np.linalg.norm(np.maximum(0, np.maximum(lo - p, p - hi)), axis=1)
    return inside_depth.max(), outside.min()


def test_blockage_matches_ray_sampling_oracle(ref_scenario):
    sc = ref_scenario
    rmap = generate_synthetic_map(sc, 5, shadowing_db=0.0)
    rng = np.random.default_rng(11)
    centers = sc.grid.centers()
    from swarm_tuner.scenario import ugv_position
    checked = blocked = 0
    for _ in range(300):
        n, t = int(rng.integers(1, sc.N + 1)), int(rng.integers(1, sc.T + 1))
        idx = tuple(int(rng.integers(1, d + 1)) for d in sc.grid.dims)
        src = ugv_position(sc, n, t)
        dst = centers[idx[0] - 1, idx[1] - 1, idx[2] - 1]
        hits, ambiguous = 0, False
        for b in sc.buildings:
            depth, clearance = _sampled_hit(src, dst, b)
            if depth > 0.05:
                hits += 1
            elif clearance < 0.05:
                ambiguous = True
        if ambiguous:
            continue
        expected = open_space_gain(np.linalg.norm(dst - src)) * BLOCKAGE_FACTOR ** hits
        assert rmap.gain(n, t, idx) == pytest.approx(expected, rel=1e-12)
        checked += 1
        blocked += hits > 0
    assert checked > 250 and blocked > 20


def test_segment_hits_box_cases():
    b = Building(10, 20, 10, 20, 30)
    src = np.array([0.0, 15.0, 0.0])
    ends = np.array([[30.0, 15.0, 5.0],    # through the block
                     [30.0, 15.0, 100.0],  # climbs over it
                     [5.0, 15.0, 5.0],     # stops short
                     [30.0, 40.0, 5.0]])   # passes beside
    assert segment_hits_box(src, ends, b).tolist() == [True, False, False, False]


def test_map_deterministic_and_seed_sensitive(ref_scenario):
    a = generate_synthetic_map(ref_scenario, 42)
    b = generate_synthetic_map(ref_scenario, 42)
    c = generate_synthetic_map(ref_scenario, 43)
    for n, t in [(1, 1), (4, 17), (8, 30)]:
        assert np.array_equal(a.slice(n, t), b.slice(n, t))
    assert not np.array_equal(a.slice(2, 3), c.slice(2, 3))


def test_gains_positive_finite_at_most_one(ref_map):
    g = ref_map.tensor()
    assert np.isfinite(g).all() and (g > 0).all() and (g <= 1).all()


def test_invalid_queries(ref_map):
    with pytest.raises(ValueError):
        ref_map.gain(0, 1, (1, 1, 1))
    with pytest.raises(ValueError):
        ref_map.gain(1, 31, (1, 1, 1))
    with pytest.raises(ValueError):
        ref_map.gain(1, 1, (49, 1, 1))


def test_binary_roundtrip(tmp_path):
    sc = make_scenario(N=2, T=3, dims=(4, 5, 3))
    rmap = generate_synthetic_map(sc, 9)
    path = tmp_path / "m.rmap"
    rmap.save(path)
    raw = path.read_bytes()
    assert raw[:4] == b"RMAP"
    head = struct.unpack_from("<I4d3I2I", raw, 4)
    assert head == (1, 0.0, 0.0, 60.0, 10.0, 4, 5, 3, 2, 3)
    assert len(raw) == 4 + struct.calcsize("<I4d3I2I") + 8 * 2 * 3 * 4 * 5 * 3
    back = RadioMap.load(path)
    assert back.grid == rmap.grid
    assert np.array_equal(back.tensor(), rmap.tensor())
    # first slice is (n=1, t=1) in row-major x, y, z order
    first = np.frombuffer(raw, "<f8", count=60, offset=4 + struct.calcsize("<I4d3I2I"))
    assert np.array_equal(first.reshape(4, 5, 3), rmap.slice(1, 1))


def test_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.rmap"
    p.write_bytes(b"NOPE" + bytes(100))
    with pytest.raises(ValueError, match="magic"):
        RadioMap.load(p)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63))
def test_any_seed_gives_valid_map(seed):
    sc = make_scenario(N=1, T=2, dims=(3, 3, 2))
    g = generate_synthetic_map(sc, seed).tensor()
    assert np.isfinite(g).all() and (g > 0).all() and (g <= 1).all()
