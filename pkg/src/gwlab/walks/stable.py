"""Lamplighter chain over the segment I_m = {0..m-1} driven by the Cauchy-like
base kernel zeta_m(x, x') proportional to 1/(1 + |x - x'|^2)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng as R
from ..errors import InvalidParameter


def conductance_rowsums(m: int) -> np.ndarray:
    """sum_{x'} c_{x,x'} = 1 + H(x) + H(m-1-x) with H(j) = sum_{d=1}^j 1/(1+d^2)."""
    d = np.arange(1, m, dtype=float)
    H = np.r_[0.0, np.cumsum(1.0 / (1.0 + d * d))]
    x = np.arange(m)
    return 1.0 + H[x] + H[m - 1 - x]


def stationary(m: int) -> np.ndarray:
    rs = conductance_rowsums(m)
    return rs / rs.sum()


def stationary_bounds_check(m_max: int, margin: float = 1e-9) -> dict:
    """Check 1/(5m) <= C_m(x) <= 5/m for every m <= m_max and every x.

    Each m*C_m(x) is computed in float64 (relative error far below margin) and
    must clear both bounds by at least `margin`."""
    worst_lo, worst_hi = math.inf, 0.0
    fails = []
    for m in range(2, m_max + 1):
        mc = m * stationary(m)
        lo, hi = float(mc.min()), float(mc.max())
        worst_lo, worst_hi = min(worst_lo, lo), max(worst_hi, hi)
        if lo < 0.2 + margin or hi > 5.0 - margin:
            fails.append(m)
    return {"m_max": m_max, "min_mC": worst_lo, "max_mC": worst_hi, "failures": fails,
            "ok": not fails}


@dataclass
class StableChainState:
    m: int
    w: tuple
    kernel: np.ndarray       # zeta_m, row-stochastic
    stationary: np.ndarray
    lamps: np.ndarray        # samples x m, bool
    pos: np.ndarray          # samples
    _flat: np.ndarray = None

    @property
    def conductance(self) -> np.ndarray:
        x = np.arange(self.m)
        return 1.0 / (1.0 + (x[:, None] - x[None, :]) ** 2)


def stable_chain_new(m: int, w=(1.0, 1.0), samples: int = 1) -> StableChainState:
    if m < 2:
        raise InvalidParameter("m must be >= 2")
    x = np.arange(m)
    c = 1.0 / (1.0 + (x[:, None] - x[None, :]) ** 2.0)
    K = c / c.sum(axis=1, keepdims=True)
    # rows of the cumulative kernel shifted by the row index form one increasing array
    cs = np.cumsum(K, axis=1)
    cs[:, -1] = 1.0
    flat = (cs + x[:, None]).ravel()
    return StableChainState(m, tuple(w), K, stationary(m), np.zeros((samples, m), bool),
                            np.zeros(samples, np.int64), flat)


def _u32(w):
    return (w >> np.uint64(32)).astype(np.float64) / 2.0**32


def stable_chain_start(state: StableChainState, seed: int) -> StableChainState:
    """Draw every sample from the stationary law U_m (uniform lamps, C_m cursor)."""
    samples, m = state.lamps.shape
    nw = 1 + (m + 63) // 64
    cdf = np.cumsum(state.stationary)
    cdf[-1] = 1.0
    for i in range(samples):
        w = R.raw_words(seed, i, nw, R.TAG_STABLE << 1)
        state.pos[i] = min(int(np.searchsorted(cdf, _u32(w[:1])[0], side="right")), m - 1)
        bits = np.unpackbits(w[1:].view(np.uint8), bitorder="little")[:m]
        state.lamps[i] = bits.astype(bool)
    return state


def stable_chain_step(state: StableChainState, words: np.ndarray) -> StableChainState:
    """One step for every sample: randomize the lamp here, move by zeta_m,
    randomize the lamp at the arrival site. words holds one uint64 per sample."""
    samples, m = state.lamps.shape
    idx = np.arange(samples)
    state.lamps[idx, state.pos] = (words & np.uint64(1)).astype(bool)
    u = _u32(words)
    j = np.searchsorted(state._flat, state.pos + u, side="right")
    new = np.clip(j - state.pos * m, 0, m - 1)
    state.pos = new
    state.lamps[idx, new] = ((words >> np.uint64(1)) & np.uint64(1)).astype(bool)
    return state


def dw_distance(u, v, w, m: int | None = None) -> float:
    """d_w between (f, x) and (f', x') in the lamplighter graph over a segment.

    The cursor must visit every differing site; on a segment the cheapest tour
    from x to x' through [L, R] sweeps to one end first."""
    (f, x), (g, y) = u, v
    diff = np.flatnonzero(np.asarray(f, bool) != np.asarray(g, bool))
    pts = np.r_[diff, x, y]
    L, Rr = int(pts.min()), int(pts.max())
    walk = min(abs(x - L) + (Rr - L) + abs(Rr - y), abs(x - Rr) + (Rr - L) + abs(L - y))
    return w[0] * walk + w[1] * len(diff)


def dw_bruteforce(m: int, w) -> np.ndarray:
    """All-pairs d_w on the lamplighter graph over I_m by Dijkstra; state index
    is x * 2^m + f."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    n = m << m
    rows, cols, vals = [], [], []
    for x in range(m):
        for f in range(1 << m):
            a = x * (1 << m) + f
            rows.append(a), cols.append(x * (1 << m) + (f ^ (1 << x))), vals.append(w[1])
            if x + 1 < m:
                rows.append(a), cols.append((x + 1) * (1 << m) + f), vals.append(w[0])
    G = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return dijkstra(G, directed=False)


def dw_batch(lamps0, pos0, lamps1, pos1, w) -> np.ndarray:
    """Vectorized d_w over samples."""
    samples, m = lamps0.shape
    diff = lamps0 != lamps1
    any_ = diff.any(axis=1)
    ar = np.arange(m)
    L = np.where(any_, np.where(diff, ar, m).min(axis=1), pos0)
    Rr = np.where(any_, np.where(diff, ar, -1).max(axis=1), pos0)
    L = np.minimum(L, np.minimum(pos0, pos1))
    Rr = np.maximum(Rr, np.maximum(pos0, pos1))
    walk = np.minimum(np.abs(pos0 - L) + (Rr - L) + np.abs(Rr - pos1),
                      np.abs(pos0 - Rr) + (Rr - L) + np.abs(L - pos1))
    return w[0] * walk + w[1] * diff.sum(axis=1)


def exact_one_step_mean(m: int, w) -> float:
    """E_{U_m} d_w(X_1, X_0) from the kernel: the lamps at x and x' each differ
    from X_0 independently with probability 1/2 (a single fair bit if x = x')."""
    st = stable_chain_new(m, w)
    K, C = st.kernel, st.stationary
    total = 0.0
    zero = np.zeros(m, bool)
    for x in range(m):
        for y in range(m):
            sites = {x, y}
            acc = 0.0
            for mask in range(1 << len(sites)):
                g = zero.copy()
                for b, z in enumerate(sorted(sites)):
                    if mask >> b & 1:
                        g[z] = True
                acc += dw_distance((zero, x), (g, y), w)
            total += C[x] * K[x, y] * acc / (1 << len(sites))
    return total


def log_star(t):
    return np.log(np.asarray(t, float) + 1.0)


def stable_displacement(m: int, t_list, samples: int, seed: int, w=(1.0, 1.0)) -> dict:
    """Monte Carlo E_{U_m} d_w(X_t, X_0) at each t in t_list."""
    t_list = sorted(int(t) for t in t_list)
    st = stable_chain_start(stable_chain_new(m, w, samples), seed)
    lamps0, pos0 = st.lamps.copy(), st.pos.copy()
    T = t_list[-1] if t_list else 0
    words = np.stack([R.raw_words(seed, i, T, R.TAG_STABLE) for i in range(samples)], axis=1) \
        if T else np.zeros((0, samples), np.uint64)
    out = {}
    want = set(t_list)
    if 0 in want:
        out[0] = 0.0
    for t in range(1, T + 1):
        stable_chain_step(st, words[t - 1])
        if t in want:
            out[t] = float(dw_batch(lamps0, pos0, st.lamps, st.pos, w).mean())
    return out


def stable_speed_check(m_list, samples: int, seed: int, w=(1.0, 1.0), points: int = 12) -> dict:
    """For each m, the largest c with E d_w(X_t, X_0) >= c (w1+w2) t / log(t+1)
    over a geometric grid of t in [1, m log m], and the spread of c across m."""
    rows = []
    for m in m_list:
        T = max(1, int(m * math.log(m)))
        ts = sorted({int(t) for t in np.geomspace(1, T, points)})
        disp = stable_displacement(m, ts, samples, seed, w)
        ratios = [disp[t] / ((w[0] + w[1]) * t / log_star(t)) for t in ts]
        rows.append({"m": m, "t": ts, "mean": [disp[t] for t in ts], "c": float(min(ratios))})
    cs = np.array([r["c"] for r in rows])
    spread = float(np.abs(cs / cs.mean() - 1).max())
    return {"rows": rows, "c_spread": spread, "stable": spread <= 0.25}
