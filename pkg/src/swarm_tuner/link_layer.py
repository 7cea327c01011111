"""SINR, rates, greedy scheduling and the min-sum-rate objective.

Array conventions (0-based storage, 1-based ids in the public signatures):

* trajectory ``traj``: ``(M, T, 3)`` UAV positions in meters
* schedule ``sched``: ``(M, N, T)`` 0/1 association ``a(m, n, t)``
* power ``power``: ``(N, T)`` UGV transmit power in watts
* link gains ``gains``: ``(T, M, N)`` with ``gains[t, m, n] = h_{n,t}(omega_m)``

The scalar functions (``sinr``, ``rate``, ``greedy_schedule_and_power``,
``min_sum_rate``) are straightforward loops.  :func:`batch_min_sum_rate` is the
vectorized path the optimizer uses; the test-suite checks both agree.
"""

from __future__ import annotations

import numpy as np

from .radio_map import RadioMap
from .scenario import Scenario


def slot_gains(traj: np.ndarray, rmap: RadioMap, t: int) -> np.ndarray:
    """``(M, N)`` gains at slot ``t`` (1-based)."""
    idx = rmap.grid.indices(np.asarray(traj, dtype=float)[:, t - 1]) - 1
    out = np.empty((idx.shape[0], rmap.n_ugv))
    for n in range(rmap.n_ugv):
        out[:, n] = rmap.slice(n + 1, t)[idx[:, 0], idx[:, 1], idx[:, 2]]
    return out


def link_gains(traj: np.ndarray, rmap: RadioMap) -> np.ndarray:
    """Gain of every (UAV, UGV) pair per slot, shape ``(T, M, N)``."""
    T = np.asarray(traj).shape[1]
    return np.stack([slot_gains(traj, rmap, t) for t in range(1, T + 1)])


def batch_link_gains(trajs: np.ndarray, rmap: RadioMap) -> np.ndarray:
    """Vectorized :func:`link_gains` for ``(P, M, T, 3)`` -> ``(P, T, M, N)``."""
    tensor = rmap.tensor()
    idx = rmap.grid.indices(trajs) - 1  # (P, M, T, 3)
    P, M, T, _ = idx.shape
    t_idx = np.arange(T)[None, None, :, None]
    n_idx = np.arange(rmap.n_ugv)[None, None, None, :]
    g = tensor[n_idx, t_idx, idx[..., 0, None], idx[..., 1, None], idx[..., 2, None]]
    return g.transpose(0, 2, 1, 3)


def _check_link(sched, m, n, t):
    if sched[m - 1, n - 1, t - 1] != 1:
        raise ValueError(f"link (m={m}, n={n}, t={t}) is not scheduled; SINR undefined")


def sinr_from_gains(gains_t: np.ndarray, sched_t: np.ndarray, power_t: np.ndarray,
                    n0: float, m: int, n: int) -> float:
    """SINR of link ``(m, n)`` (0-based) within one slot.

    ``gains_t`` is ``(M, N)``, ``sched_t`` is ``(M, N)`` and ``power_t`` is
    ``(N,)``.  UGV ``p != n`` interferes iff it is scheduled to some UAV.
    """
    signal = gains_t[m, n] * power_t[n]
    interference = 0.0
    for p in range(gains_t.shape[1]):
        if p == n:
            continue
        active = sched_t[:, p].sum()
        interference += active * gains_t[m, p] * power_t[p]
    return float(signal / (interference + n0))


def sinr(m: int, n: int, t: int, traj, sched, power, rmap: RadioMap, n0: float) -> float:
    """SINR of the scheduled link UGV ``n`` -> UAV ``m`` at slot ``t`` (1-based)."""
    sched = np.asarray(sched)
    _check_link(sched, m, n, t)
    g = slot_gains(traj, rmap, t)
    return sinr_from_gains(g, sched[:, :, t - 1], np.asarray(power)[:, t - 1], n0, m - 1, n - 1)


def rate(m: int, n: int, t: int, traj, sched, power, rmap: RadioMap, n0: float) -> float:
    """``log2(1 + a * SINR)`` in bps/Hz; exactly 0 for an unscheduled link."""
    if np.asarray(sched)[m - 1, n - 1, t - 1] == 0:
        return 0.0
    return float(np.log2(1.0 + sinr(m, n, t, traj, sched, power, rmap, n0)))


def greedy_match(gains_t: np.ndarray) -> np.ndarray:
    """Greedy max-gain bipartite matching on an ``(M, N)`` gain matrix.

    Repeatedly takes the unmatched pair with the largest gain; ties go to the
    lowest ``m`` and then the lowest ``n``.
    """
    M, N = gains_t.shape
    a = np.zeros((M, N), dtype=np.int8)
    used_m, used_n = set(), set()
    order = sorted(((-gains_t[m, n], m, n) for m in range(M) for n in range(N)))
    for _, m, n in order:
        if m in used_m or n in used_n:
            continue
        a[m, n] = 1
        used_m.add(m)
        used_n.add(n)
        if len(used_m) == M or len(used_n) == N:
            break
    return a


def slot_rates(gains_t, sched_t, power_t, n0) -> np.ndarray:
    """Rate of every link in one slot, ``(M, N)``; zero where unscheduled."""
    M, N = gains_t.shape
    r = np.zeros((M, N))
    for m in range(M):
        for n in range(N):
            if sched_t[m, n]:
                r[m, n] = np.log2(1.0 + sinr_from_gains(gains_t, sched_t, power_t, n0, m, n))
    return r


def schedule_slot(gains_t, p_max, n0, r_min):
    """Schedule and power for one slot: full power, greedy matching, QoS filter."""
    N = gains_t.shape[1]
    power_t = np.full(N, p_max)
    sched_t = greedy_match(gains_t)
    r = slot_rates(gains_t, sched_t, power_t, n0)
    sched_t = np.where((sched_t == 1) & (r < r_min), 0, sched_t).astype(np.int8)
    return sched_t, power_t


def greedy_schedule_and_power(traj, scenario: Scenario, rmap: RadioMap):
    """Per-slot schedule ``(M, N, T)`` and power plan ``(N, T)`` for ``traj``."""
    gains = link_gains(traj, rmap)
    T, M, N = gains.shape
    sched = np.zeros((M, N, T), dtype=np.int8)
    power = np.zeros((N, T))
    for t in range(T):
        sched[:, :, t], power[:, t] = schedule_slot(
            gains[t], scenario.p_max, scenario.n0, scenario.r_min)
    return sched, power


def rate_tensor(gains: np.ndarray, sched: np.ndarray, power: np.ndarray, n0: float) -> np.ndarray:
    """Rates ``(M, N, T)`` for given gains ``(T, M, N)``, schedule and power."""
    T = gains.shape[0]
    return np.stack([slot_rates(gains[t], sched[:, :, t], power[:, t], n0)
                     for t in range(T)], axis=-1)


def per_ugv_sum_rate(traj, sched, power, scenario: Scenario, rmap: RadioMap) -> np.ndarray:
    r = rate_tensor(link_gains(traj, rmap), np.asarray(sched), np.asarray(power), scenario.n0)
    return r.sum(axis=(0, 2))


def min_sum_rate(traj, sched, power, scenario: Scenario, rmap: RadioMap) -> float:
    """Smallest per-UGV total rate over the horizon, in bps/Hz."""
    return float(per_ugv_sum_rate(traj, sched, power, scenario, rmap).min())


def check_schedule(sched: np.ndarray) -> bool:
    """Each UAV serves at most one UGV and vice versa, in every slot."""
    sched = np.asarray(sched)
    return bool(np.isin(sched, (0, 1)).all()
                and (sched.sum(axis=1) <= 1).all()
                and (sched.sum(axis=0) <= 1).all())


# -- vectorized path ---------------------------------------------------------

def batch_greedy_match(gains: np.ndarray) -> np.ndarray:
    """Greedy matching over leading batch dims; ``(..., M, N)`` -> 0/1."""
    M, N = gains.shape[-2:]
    flat = gains.reshape(-1, M * N).copy()
    a = np.zeros_like(flat, dtype=np.int8)
    rows = np.arange(flat.shape[0])
    for _ in range(min(M, N)):
        # argmax returns the first maximum: lowest m, then lowest n
        k = np.argmax(flat, axis=1)
        ok = flat[rows, k] > -np.inf
        a[rows[ok], k[ok]] = 1
        m, n = np.divmod(k, N)
        grid = flat.reshape(-1, M, N)
        grid[rows[ok], m[ok], :] = -np.inf
        grid[rows[ok], :, n[ok]] = -np.inf
    return a.reshape(gains.shape)


def batch_rates(gains: np.ndarray, sched: np.ndarray, power: np.ndarray, n0: float) -> np.ndarray:
    """Rates for batched slot matrices.

    ``gains``/``sched`` are ``(..., M, N)``, ``power`` is ``(..., N)``.
    """
    active = sched.sum(axis=-2)  # (..., N) number of UAVs each UGV serves
    rx = gains * power[..., None, :]  # received power at UAV m from UGV n
    N = gains.shape[-1]
    others = 1.0 - np.eye(N)
    interference = (rx * active[..., None, :]) @ others
    sinr_v = rx / (interference + n0)
    return np.where(sched == 1, np.log2(1.0 + sinr_v), 0.0)


def batch_min_sum_rate(gains: np.ndarray, p_max: float, n0: float, r_min: float,
                       return_detail: bool = False):
    """Min-sum-rate of every candidate in ``gains`` of shape ``(P, T, M, N)``."""
    power = np.full(gains.shape[:-2] + gains.shape[-1:], p_max)
    sched = batch_greedy_match(gains)
    r = batch_rates(gains, sched, power, n0)
    sched = np.where(r < r_min, 0, sched).astype(np.int8)
    r = batch_rates(gains, sched, power, n0)
    per_ugv = r.sum(axis=(1, 2))  # (P, N)
    t_value = per_ugv.min(axis=-1)
    if return_detail:
        return t_value, sched, r
    return t_value
