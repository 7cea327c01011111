"""Static problem description loaded from a TOML scenario file.

File units: lengths in meters, speeds in km/h, powers in dBm, angles in
degrees.  The :class:`Scenario` keeps those file values verbatim (so a dump
and reload is exact) and exposes SI quantities as properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
import tomli_w

from .radio_map import Building, VoxelGrid


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def kmh_to_mps(v: float) -> float:
    return v / 3.6


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class UGVPath:
    waypoints: tuple[tuple[float, float, float], ...]
    speed_kmh: float

    @property
    def speed(self) -> float:
        """Speed in m/s."""
        return kmh_to_mps(self.speed_kmh)


@dataclass(frozen=True)
class Scenario:
    n_uav: int
    n_ugv: int
    n_slots: int
    tau: float
    v_max_kmh: float
    theta_max_deg: float
    h_min: float
    h_max: float
    d_min: float
    r_min: float
    p_max_dbm: float
    n0_dbm: float
    grid: VoxelGrid
    buildings: tuple[Building, ...] = ()
    ugv_paths: tuple[UGVPath, ...] = ()
    name: str = field(default="", compare=False)

    # single-letter aliases
    @property
    def M(self) -> int:
        return self.n_uav

    @property
    def N(self) -> int:
        return self.n_ugv

    @property
    def T(self) -> int:
        return self.n_slots

    @property
    def v_max(self) -> float:
        return kmh_to_mps(self.v_max_kmh)

    @property
    def theta_max(self) -> float:
        return math.radians(self.theta_max_deg)

    @property
    def p_max(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def n0(self) -> float:
        return dbm_to_watts(self.n0_dbm)

    @property
    def box_lower(self) -> np.ndarray:
        return np.array([self.grid.x_min, self.grid.y_min, self.h_min])

    @property
    def box_upper(self) -> np.ndarray:
        return np.array([self.grid.x_max, self.grid.y_max, self.h_max])

    def validate(self) -> "Scenario":
        def need(ok, name, msg):
            if not ok:
                raise ScenarioError(name, msg)

        need(self.n_uav >= 1, "n_uav", f"must be >= 1, got {self.n_uav}")
        need(self.n_ugv >= 1, "n_ugv", f"must be >= 1, got {self.n_ugv}")
        need(self.n_slots >= 2, "n_slots", f"must be >= 2, got {self.n_slots}")
        need(self.tau > 0, "tau", f"must be > 0, got {self.tau}")
        need(self.v_max_kmh > 0, "v_max", f"must be > 0, got {self.v_max_kmh}")
        need(0 < self.theta_max_deg <= 180, "theta_max",
             f"must be in (0, 180] degrees, got {self.theta_max_deg}")
        need(self.h_max > self.h_min, "h_max",
             f"must exceed h_min={self.h_min}, got {self.h_max}")
        need(self.grid.h_min == self.h_min, "grid.h_min",
             f"must equal h_min={self.h_min}, got {self.grid.h_min}")
        need(self.h_max <= self.grid.h_top, "h_max",
             f"must not exceed grid top {self.grid.h_top}, got {self.h_max}")
        need(self.d_min > 0, "d_min", f"must be > 0, got {self.d_min}")
        need(self.r_min >= 0, "r_min", f"must be >= 0, got {self.r_min}")
        need(math.isfinite(self.p_max_dbm), "p_max", "must be finite")
        need(math.isfinite(self.n0_dbm), "n0", "must be finite")
        need(len(self.ugv_paths) == self.n_ugv, "ugvs",
             f"expected {self.n_ugv} paths, got {len(self.ugv_paths)}")
        g = self.grid
        for i, b in enumerate(self.buildings, 1):
            need(g.x_min <= b.x0 and b.x1 <= g.x_max and g.y_min <= b.y0 and b.y1 <= g.y_max,
                 f"buildings[{i}]", "footprint outside grid extents")
        for i, p in enumerate(self.ugv_paths, 1):
            need(p.speed_kmh > 0, f"ugvs[{i}].speed_kmh", f"must be > 0, got {p.speed_kmh}")
            need(len(p.waypoints) >= 1, f"ugvs[{i}].waypoints", "need at least one waypoint")
            for w in p.waypoints:
                need(w[2] == 0.0, f"ugvs[{i}].waypoints", f"z must be 0, got {w[2]}")
                need(g.x_min <= w[0] <= g.x_max and g.y_min <= w[1] <= g.y_max,
                     f"ugvs[{i}].waypoints", f"waypoint {w[:2]} outside grid extents")
        return self


def _get(tree: dict, path: str):
    node = tree
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ScenarioError(path, "missing")
        node = node[part]
    return node


def scenario_from_dict(tree: dict, name: str = "") -> Scenario:
    def num(path, kind=float):
        v = _get(tree, path)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(path, f"expected a number, got {v!r}")
        if kind is int:
            if isinstance(v, float) and not v.is_integer():
                raise ScenarioError(path, f"expected an integer, got {v!r}")
            return int(v)
        return float(v)

    dims = _get(tree, "grid.dims")
    if not (isinstance(dims, list) and len(dims) == 3):
        raise ScenarioError("grid.dims", "expected a list of three integers")
    h_min = num("limits.h_min")
    try:
        grid = VoxelGrid(num("grid.x_min"), num("grid.y_min"), h_min,
                         num("grid.delta"), tuple(int(d) for d in dims))
    except ValueError as exc:
        raise ScenarioError("grid", str(exc)) from None

    buildings = []
    for i, b in enumerate(tree.get("buildings", []), 1):
        try:
            (x0, x1), (y0, y1) = b["x"], b["y"]
            buildings.append(Building(float(x0), float(x1), float(y0), float(y1),
                                      float(b["height"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"buildings[{i}]", str(exc)) from None

    paths = []
    for i, u in enumerate(tree.get("ugvs", []), 1):
        try:
            pts = []
            for w in u["waypoints"]:
                if len(w) not in (2, 3):
                    raise ValueError(f"waypoint {w!r} must have 2 or 3 coordinates")
                pts.append((float(w[0]), float(w[1]), float(w[2]) if len(w) == 3 else 0.0))
            paths.append(UGVPath(tuple(pts), float(u["speed_kmh"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"ugvs[{i}]", str(exc)) from None

    sc = Scenario(
        n_uav=num("fleet.uavs", int),
        n_ugv=num("fleet.ugvs", int),
        n_slots=num("time.slots", int),
        tau=num("time.tau"),
        v_max_kmh=num("limits.v_max_kmh"),
        theta_max_deg=num("limits.theta_max_deg"),
        h_min=h_min,
        h_max=num("limits.h_max"),
        d_min=num("limits.d_min"),
        r_min=num("limits.r_min"),
        p_max_dbm=num("radio.p_max_dbm"),
        n0_dbm=num("radio.n0_dbm"),
        grid=grid,
        buildings=tuple(buildings),
        ugv_paths=tuple(paths),
        name=str(tree.get("name", name)),
    )
    return sc.validate()


def scenario_to_dict(sc: Scenario) -> dict:
    g = sc.grid
    tree = {
        "name": sc.name,
        "fleet": {"uavs": sc.n_uav, "ugvs": sc.n_ugv},
        "time": {"slots": sc.n_slots, "tau": sc.tau},
        "limits": {
            "v_max_kmh": sc.v_max_kmh, "theta_max_deg": sc.theta_max_deg,
            "h_min": sc.h_min, "h_max": sc.h_max, "d_min": sc.d_min, "r_min": sc.r_min,
        },
        "radio": {"p_max_dbm": sc.p_max_dbm, "n0_dbm": sc.n0_dbm},
        "grid": {"x_min": g.x_min, "y_min": g.y_min, "delta": g.delta, "dims": list(g.dims)},
        "buildings": [
            {"x": [b.x0, b.x1], "y": [b.y0, b.y1], "height": b.height} for b in sc.buildings
        ],
        "ugvs": [
            {"speed_kmh": p.speed_kmh, "waypoints": [list(w) for w in p.waypoints]}
            for p in sc.ugv_paths
        ],
    }
    if not sc.name:
        del tree["name"]
    return tree


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        tree = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(str(path), f"parse error: {exc}") from None
    return scenario_from_dict(tree, name=path.stem)


REFERENCE_SCENARIO = Path(__file__).with_name("data") / "hitsz_like.toml"


def reference_scenario() -> Scenario:
    """The packaged 240 x 400 x 60 m reference setting (M = 4, N = 8, T = 30)."""
    return load_scenario(REFERENCE_SCENARIO)


def dumps_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))


def loads_scenario(text: str) -> Scenario:
    return scenario_from_dict(tomllib.loads(text))


def ugv_position(sc: Scenario, n: int, t: int) -> np.ndarray:
    """Position of UGV ``n`` at slot ``t`` (both 1-based).

    Constant-speed motion along the waypoint polyline starting at slot 1,
    clamped at the final waypoint.
    """
    if not 1 <= n <= sc.n_ugv:
        raise IndexError(f"UGV id {n} out of range 1..{sc.n_ugv}")
    if not 1 <= t <= sc.n_slots:
        raise IndexError(f"slot {t} out of range 1..{sc.n_slots}")
    path = sc.ugv_paths[n - 1]
    pts = np.asarray(path.waypoints, dtype=float)
    travel = (t - 1) * path.speed * sc.tau
    for a, b in zip(pts[:-1], pts[1:]):
        seg = float(np.linalg.norm(b - a))
        if travel <= seg:
            if seg == 0.0:
                return a.copy()
            return a + (b - a) * (travel / seg)
        travel -= seg
    return pts[-1].copy()


def ugv_positions(sc: Scenario) -> np.ndarray:
    """All UGV positions as ``(N, T, 3)``."""
    return np.array([[ugv_position(sc, n, t) for t in range(1, sc.n_slots + 1)]
                     for n in range(1, sc.n_ugv + 1)])
