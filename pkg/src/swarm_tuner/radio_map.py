"""Voxelized path-gain maps.

A :class:`RadioMap` stores, for every UGV ``n`` and slot ``t``, the linear
power gain from that UGV to the centre of every voxel of a
:class:`VoxelGrid`.  Gains come from a log-distance model with per-building
blockage and spatially smoothed log-normal shadowing; slices are computed on
first use and memoized.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

if TYPE_CHECKING:
    from .scenario import Scenario

# log-distance model constants
PATH_LOSS_EXPONENT = 2.7
REFERENCE_GAIN = 1e-4
REFERENCE_DISTANCE = 1.0
BLOCKAGE_FACTOR = 1e-2
SHADOWING_DB = 4.0
SHADOWING_CORRELATION_VOXELS = 2.0

_MAGIC = b"RMAP"
_FORMAT_VERSION = 1
_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class VoxelGrid:
    x_min: float
    y_min: float
    h_min: float
    delta: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if len(self.dims) != 3 or any(int(d) < 1 for d in self.dims):
            raise ValueError(f"dims must be three integers >= 1, got {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.h_min], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.delta * np.array(self.dims, dtype=float)

    @property
    def x_max(self) -> float:
        return float(self.upper[0])

    @property
    def y_max(self) -> float:
        return float(self.upper[1])

    @property
    def h_top(self) -> float:
        return float(self.upper[2])

    def centers(self) -> np.ndarray:
        """Voxel centres as an array of shape ``(X, Y, Z, 3)``."""
        axes = [
            lo + self.delta * (np.arange(n) + 0.5)
            for lo, n in zip(self.lower, self.dims)
        ]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1)

    def center_of(self, index: Sequence[int]) -> np.ndarray:
        idx = np.asarray(index, dtype=float)
        return self.lower + self.delta * (idx - 0.5)

    def indices(self, positions: np.ndarray) -> np.ndarray:
        """Vectorized 1-based voxel indices for ``positions[..., 3]``.

        The closed bounding box is accepted: a point on an upper face maps to
        the last cell along that axis.
        """
        pos = np.asarray(positions, dtype=float)
        lo, hi = self.lower, self.upper
        bad = (pos < lo) | (pos > hi) | ~np.isfinite(pos)
        if bad.any():
            axis = int(np.argwhere(bad)[0][-1])
            value = pos[..., axis][bad[..., axis]].flat[0]
            raise ValueError(
                f"position out of grid bounds on axis {_AXES[axis]}: {value} "
                f"not in [{lo[axis]}, {hi[axis]}]"
            )
        idx = np.floor((pos - lo) / self.delta).astype(np.int64) + 1
        return np.minimum(idx, np.array(self.dims))


def index_of(grid: VoxelGrid, position: Sequence[float]) -> tuple[int, int, int]:
    """Map a position in meters to its 1-based voxel index ``(x, y, z)``."""
    pos = np.asarray(position, dtype=float)
    if pos.shape != (3,):
        raise ValueError(f"position must have 3 coordinates, got shape {pos.shape}")
    x, y, z = grid.indices(pos)
    return int(x), int(y), int(z)


@dataclass(frozen=True)
class Building:
    """Axis-aligned block ``[x0, x1] x [y0, y1] x [0, height]``."""

    x0: float
    x1: float
    y0: float
    y1: float
    height: float

    def __post_init__(self):
        if self.height < 0:
            raise ValueError(f"building height must be >= 0, got {self.height}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("building footprint must have x0 < x1 and y0 < y1")

    def contains_xy(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return (
            (xy[..., 0] >= self.x0)
            & (xy[..., 0] <= self.x1)
            & (xy[..., 1] >= self.y0)
            & (xy[..., 1] <= self.y1)
        )


def segment_hits_box(start: np.ndarray, ends: np.ndarray, building: Building) -> np.ndarray:
    """Slab test: does the segment ``start -> ends[i]`` pass through the box?

    Axis-parallel segments give infinite slab parameters; a parallel segment
    lying exactly on a slab plane (``0 * inf``) counts as inside that slab.
    """
    start = np.asarray(start, dtype=float)
    ends = np.asarray(ends, dtype=float)
    shape = ends.shape[:-1]
    ends = ends.reshape(-1, 3)
    lo = (building.x0, building.y0, 0.0)
    hi = (building.x1, building.y1, building.height)
    t_enter = np.zeros(len(ends))
    t_exit = np.ones(len(ends))
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(3):
            inv = 1.0 / (ends[..., k] - start[k])
            t0 = (lo[k] - start[k]) * inv
            t1 = (hi[k] - start[k]) * inv
            if start[k] == lo[k]:
                t0[np.isnan(t0)] = -np.inf
            if start[k] == hi[k]:
                t1[np.isnan(t1)] = np.inf
            np.fmax(t_enter, np.fmin(t0, t1), out=t_enter)
            np.fmin(t_exit, np.fmax(t0, t1), out=t_exit)
    return (t_enter < t_exit).reshape(shape)


def open_space_gain(distance: np.ndarray) -> np.ndarray:
    d = np.maximum(np.asarray(distance, dtype=float), REFERENCE_DISTANCE)
    return REFERENCE_GAIN * (d / REFERENCE_DISTANCE) ** (-PATH_LOSS_EXPONENT)


class RadioMap:
    """Per-UGV, per-slot gain tensor over a voxel grid.

    ``slice_fn(n, t)`` (1-based) must return an ``(X, Y, Z)`` array; results
    are cached so every slice is computed at most once.
    """

    def __init__(
        self,
        grid: VoxelGrid,
        n_ugv: int,
        n_slots: int,
        slice_fn: Callable[[int, int], np.ndarray],
    ):
        self.grid = grid
        self.n_ugv = n_ugv
        self.n_slots = n_slots
        self._slice_fn = slice_fn
        self._slices: dict[tuple[int, int], np.ndarray] = {}
        self._tensor: np.ndarray | None = None

    def _check(self, n: int, t: int):
        if not 1 <= n <= self.n_ugv:
            raise ValueError(f"UGV id {n} out of range 1..{self.n_ugv}")
        if not 1 <= t <= self.n_slots:
            raise ValueError(f"slot {t} out of range 1..{self.n_slots}")

    def slice(self, n: int, t: int) -> np.ndarray:
        self._check(n, t)
        key = (n, t)
        s = self._slices.get(key)
        if s is None:
            s = np.ascontiguousarray(self._slice_fn(n, t), dtype=np.float64)
            if s.shape != self.grid.dims:
                raise ValueError(f"slice shape {s.shape} != grid dims {self.grid.dims}")
            s.setflags(write=False)
            self._slices[key] = s
        return s

    def tensor(self) -> np.ndarray:
        """All slices stacked as ``(N, T, X, Y, Z)``; built once."""
        if self._tensor is None:
            out = np.empty((self.n_ugv, self.n_slots) + self.grid.dims)
            for n in range(1, self.n_ugv + 1):
                for t in range(1, self.n_slots + 1):
                    out[n - 1, t - 1] = self.slice(n, t)
            out.setflags(write=False)
            self._tensor = out
        return self._tensor

    def gain(self, n: int, t: int, index: Sequence[int]) -> float:
        self._check(n, t)
        idx = tuple(int(i) for i in index)
        if len(idx) != 3 or any(not 1 <= i <= d for i, d in zip(idx, self.grid.dims)):
            raise ValueError(f"voxel index {idx} out of range for dims {self.grid.dims}")
        return float(self.slice(n, t)[idx[0] - 1, idx[1] - 1, idx[2] - 1])

    # -- binary snapshot ----------------------------------------------------

    def save(self, path: str | Path):
        g = self.grid
        header = _MAGIC + struct.pack(
            "<I4d3I2I", _FORMAT_VERSION, g.x_min, g.y_min, g.h_min, g.delta, *g.dims,
            self.n_ugv, self.n_slots,
        )
        with open(path, "wb") as fh:
            fh.write(header)
            for n in range(1, self.n_ugv + 1):
                for t in range(1, self.n_slots + 1):
                    fh.write(self.slice(n, t).astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path: str | Path) -> "RadioMap":
        raw = Path(path).read_bytes()
        if raw[:4] != _MAGIC:
            raise ValueError(f"{path}: not a radio map file (bad magic)")
        head = struct.Struct("<I4d3I2I")
        version, x_min, y_min, h_min, delta, X, Y, Z, n_ugv, n_slots = head.unpack_from(raw, 4)
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported radio map version {version}")
        grid = VoxelGrid(x_min, y_min, h_min, delta, (X, Y, Z))
        body = np.frombuffer(raw, dtype="<f8", offset=4 + head.size)
        expected = n_ugv * n_slots * X * Y * Z
        if body.size != expected:
            raise ValueError(f"{path}: expected {expected} gains, found {body.size}")
        data = body.reshape(n_ugv, n_slots, X, Y, Z).astype(np.float64)
        return cls(grid, n_ugv, n_slots, lambda n, t: data[n - 1, t - 1])


def shadowing_field(grid: VoxelGrid, rng: np.random.Generator, sigma_db: float) -> np.ndarray:
    """Gaussian-smoothed normal field in dB, rescaled to std ``sigma_db``."""
    raw = rng.standard_normal(grid.dims)
    smooth = gaussian_filter(raw, SHADOWING_CORRELATION_VOXELS, mode="reflect")
    std = smooth.std()
    if std > 0:
        smooth = smooth / std
    return sigma_db * smooth


def generate_synthetic_map(
    scenario: "Scenario",
    seed: int,
    shadowing_db: float = SHADOWING_DB,
) -> RadioMap:
    """Synthetic radio map for ``scenario``.

    Identical ``(scenario, seed)`` pairs give bitwise-identical gains.  With
    ``shadowing_db=0`` the map is the bare log-distance model with blockage.
    """
    from .scenario import ugv_position

    grid = scenario.grid
    centers = grid.centers()
    seeds = np.random.SeedSequence(int(seed) & (2**64 - 1)).spawn(scenario.n_ugv)
    # one field per transmitter, shared across slots
    shadow_lin = []
    for ss in seeds:
        if shadowing_db > 0:
            field = shadowing_field(grid, np.random.default_rng(ss), shadowing_db)
            shadow_lin.append(10.0 ** (field / 10.0))
        else:
            shadow_lin.append(None)

    def compute(n: int, t: int) -> np.ndarray:
        src = ugv_position(scenario, n, t)
        dist = np.linalg.norm(centers - src, axis=-1)
        gain = open_space_gain(dist)
        for b in scenario.buildings:
            gain = np.where(segment_hits_box(src, centers, b), gain * BLOCKAGE_FACTOR, gain)
        if shadow_lin[n - 1] is not None:
            gain = gain * shadow_lin[n - 1]
        return np.clip(gain, np.finfo(float).tiny, 1.0)

    return RadioMap(grid, scenario.n_ugv, scenario.n_slots, compute)


def path_gain(rmap: RadioMap, n: int, t: int, index: Sequence[int]) -> float:
    return rmap.gain(n, t, index)
