import numpy as np
import pytest

from swarm_tuner.radio_map import RadioMap, generate_synthetic_map
from swarm_tuner.scenario import reference_scenario, scenario_from_dict

MAP_SEED = 1


def make_scenario(M=1, N=2, T=2, dims=(10, 10, 4), delta=10.0, h_min=60.0, h_max=None,
                  buildings=(), ugvs=None, **over):
    """Small valid scenario for oracle tests (file units, like the TOML)."""
    if h_max is None:
        h_max = h_min + delta * dims[2]
    if ugvs is None:
        ugvs = [{"speed_kmh": 36.0, "waypoints": [[5.0 + 10 * n, 5.0, 0.0]]} for n in range(N)]
    tree = {
        "fleet": {"uavs": M, "ugvs": N},
        "time": {"slots": T, "tau": over.pop("tau", 1.0)},
        "limits": {"v_max_kmh": over.pop("v_max_kmh", 36.0),
                   "theta_max_deg": over.pop("theta_max_deg", 90.0),
                   "h_min": h_min, "h_max": h_max, "d_min": over.pop("d_min", 10.0),
                   "r_min": over.pop("r_min", 0.0)},
        "radio": {"p_max_dbm": over.pop("p_max_dbm", 20.0), "n0_dbm": over.pop("n0_dbm", -100.0)},
        "grid": {"x_min": 0.0, "y_min": 0.0, "delta": delta, "dims": list(dims)},
        "buildings": [dict(b) for b in buildings],
        "ugvs": ugvs,
    }
    assert not over, over
    return scenario_from_dict(tree)


def table_map(sc, gains):
    """Map whose gain depends only on (n, t): ``gains[n-1][t-1]`` everywhere."""
    g = np.asarray(gains, dtype=float)
    return RadioMap(sc.grid, sc.N, sc.T, lambda n, t: np.full(sc.grid.dims, g[n - 1, t - 1]))


@pytest.fixture(scope="session")
def ref_scenario():
    return reference_scenario()


@pytest.fixture(scope="session")
def ref_map(ref_scenario):
    rmap = generate_synthetic_map(ref_scenario, MAP_SEED)
    rmap.tensor()
    return rmap


# one PASS/FAIL line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
