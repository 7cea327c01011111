"""Figures written next to the tabular outputs (Agg backend, no GUI)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402
import numpy as np  # noqa: E402

# no version/date chunks, so reruns give identical bytes
PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=PNG_META)
    plt.close(fig)
    return Path(path)


def plot_trajectories(traj, scenario, ugv_xyz, path, title="UAV trajectories (top view)"):
    """Top view: buildings, UGV paths (dashed) and UAV waypoints colored by altitude."""
    traj = np.asarray(traj)
    fig, ax = plt.subplots(figsize=(5, 7))
    for b in scenario.buildings:
        ax.add_patch(Rectangle((b.x0, b.y0), b.x1 - b.x0, b.y1 - b.y0,
                               color="0.75", zorder=0))
        ax.text((b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2, f"{b.height:g} m",
                ha="center", va="center", fontsize=6)
    for n in range(ugv_xyz.shape[0]):
        ax.plot(ugv_xyz[n, :, 0], ugv_xyz[n, :, 1], "--", color="k", lw=0.7)
    sc = None
    for m in range(traj.shape[0]):
        ax.plot(traj[m, :, 0], traj[m, :, 1], "-", lw=1, color=f"C{m}", label=f"UAV {m + 1}")
        sc = ax.scatter(traj[m, :, 0], traj[m, :, 1], c=traj[m, :, 2], s=10, cmap="viridis",
                        vmin=scenario.h_min, vmax=scenario.h_max, zorder=3)
    if sc is not None:
        fig.colorbar(sc, ax=ax, label="altitude [m]")
    lo, hi = scenario.box_lower, scenario.box_upper
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title)
    ax.legend(fontsize=7, loc="upper right")
    return _save(fig, path)


def plot_convergence(history, path, title="gBest fitness"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(np.arange(len(history)), history, "-o", ms=2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("fitness F")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_tuning(records, path, title="min sum-rate over tuning iterations"):
    it = [r.iteration for r in records]
    vals = [r.min_sum_rate for r in records]
    best = np.maximum.accumulate(vals) if vals else []
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(it, vals, "o-", label="proposal")
    ax.step(it, best, where="post", label="best so far")
    ax.set_xlabel("iteration")
    ax.set_ylabel("min sum-rate [bps/Hz]")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_compare(summaries, path, title="min sum-rate by configuration"):
    labels = [s.label for s in summaries]
    means = np.array([s.mean for s in summaries])
    err = np.array([[s.mean - s.min for s in summaries], [s.max - s.mean for s in summaries]])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(labels, means, yerr=err, capsize=4, color=[f"C{i}" for i in range(len(labels))])
    ax.set_ylabel("min sum-rate [bps/Hz]")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_map_slice(rmap, n, t, z_index, path):
    g = rmap.slice(n, t)[:, :, z_index - 1]
    grid = rmap.grid
    fig, ax = plt.subplots(figsize=(4.5, 6))
    im = ax.imshow(10 * np.log10(g.T), origin="lower", cmap="magma",
                   extent=(grid.x_min, grid.x_max, grid.y_min, grid.y_max))
    fig.colorbar(im, ax=ax, label="gain [dB]")
    ax.set_title(f"UGV {n}, slot {t}, layer {z_index}")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    return _save(fig, path)
