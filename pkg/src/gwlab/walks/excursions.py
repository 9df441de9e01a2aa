"""Local times and traverse counts of simple random walk on Z.

T(k, x, n) counts the excursions away from x, completed by time n, that
reach x - k. Visits are counted at times 0..n, so the walk started at x = 0
opens an excursion at time 0. The local time is L(x, n) = #{0 < j <= n: S_j = x}.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, exp, sqrt

import numpy as np

from .. import rng as R


# local time

def local_time(path: np.ndarray) -> dict:
    """L(x, n) for every visited x, from S_0..S_n."""
    sites, counts = np.unique(np.asarray(path)[1:], return_counts=True)
    return {int(x): int(c) for x, c in zip(sites, counts)}


def _binom_term(n: int, x: int, j: int) -> Fraction:
    # P(L(x, n) = j) for x >= 1, j >= 1; for x = 0 it gives P(L(0, n) = j - 1)
    if (n + x) % 2 == 0:
        N, K = n - j + 1, (n + x) // 2
    else:
        N, K = n - j, (n + x - 1) // 2
    if N < 0 or K < 0 or K > N:
        return Fraction(0)
    return Fraction(comb(N, K), 2**N)


def local_time_pmf(x: int, n: int, m: int) -> Fraction:
    """Exact P_0(L(x, n) = m) as a rational.

    For x = 0 the binomial expression is read with m + 1 (the classical
    statement counts the visit at time 0); for x != 0 it holds for m >= 1 and
    the atom at 0 is the complement. Out-of-range m gets mass 0."""
    x, n, m = abs(int(x)), int(n), int(m)
    if m < 0 or n < 0 or m > n:
        return Fraction(0)
    if x == 0:
        return _binom_term(n, 0, m + 1)
    if x > n:
        return Fraction(int(m == 0))
    if m >= 1:
        return _binom_term(n, x, m)
    return 1 - sum((_binom_term(n, x, j) for j in range(1, n + 1)), Fraction(0))


# traverse counts

def traverse_time(path: np.ndarray, k: int, x: int) -> int:
    """T(k, x, n) for the path S_0..S_n: completed excursions from x reaching x - k."""
    path = np.asarray(path)
    t = np.flatnonzero((path == x) | (path == x - k))
    if len(t) == 0:
        return 0
    at_x = path[t] == x
    # B-runs (visits to x - k) enclosed between two visits to x
    change = np.r_[True, at_x[1:] != at_x[:-1]]
    run_is_x = at_x[change]
    if len(run_is_x) < 3:
        return 0
    inner = run_is_x[1:-1]
    return int(np.count_nonzero(~inner & run_is_x[:-2] & run_is_x[2:]))


def _run_stats(keys_site: np.ndarray, keys_time: np.ndarray, is_second: np.ndarray):
    """Sort events by (site, time) and return per-site (sites, runs, first type,
    last type, enclosed second-type runs)."""
    order = np.lexsort((is_second, keys_time, keys_site))
    site = keys_site[order]
    typ = is_second[order]
    new_site = np.r_[True, site[1:] != site[:-1]]
    change = new_site | np.r_[True, typ[1:] != typ[:-1]]
    run_site = site[change]
    run_typ = typ[change]
    starts = np.flatnonzero(np.r_[True, run_site[1:] != run_site[:-1]])
    ends = np.r_[starts[1:], len(run_site)] - 1
    runs = ends - starts + 1
    n_second = np.add.reduceat(run_typ.astype(np.int64), starts)
    enclosed = n_second - run_typ[starts] - run_typ[ends]
    return run_site[starts], runs, run_typ[starts], run_typ[ends], enclosed


def traverse_all(path: np.ndarray, k: int) -> dict:
    """T(k, x, n) for every x with a nonzero count."""
    path = np.asarray(path)
    t = np.arange(len(path))
    # visits to x are type 0, visits to x - k are type 1 for site x
    sites = np.r_[path, path + k]
    times = np.r_[t, t]
    second = np.r_[np.zeros(len(path), bool), np.ones(len(path), bool)]
    site, runs, first, last, enclosed = _run_stats(sites, times, second)
    # enclosed counts type-1 runs with a type-0 run on both sides
    keep = enclosed > 0
    return {int(x): int(v) for x, v in zip(site[keep], enclosed[keep])}


def traverse_pmf_dp(k: int, x: int, n: int) -> dict:
    """Exact law of T(k, x, n) by dynamic programming over (position, phase, T).

    phase 0: x not visited yet; 1: at or since a visit to x, x - k not reached;
    2: x - k reached since the last visit to x."""
    start_phase = 1 if x == 0 else 0
    dist = {(0, start_phase, 0): Fraction(1)}
    half = Fraction(1, 2)
    for _ in range(n):
        nxt = {}
        for (p, ph, T), pr in dist.items():
            for q in (p - 1, p + 1):
                nph, nT = ph, T
                if q == x:
                    if ph == 2:
                        nT += 1
                    nph = 1
                elif q == x - k and ph >= 1:
                    nph = 2
                key = (q, nph, nT)
                nxt[key] = nxt.get(key, 0) + pr * half
        dist = nxt
    out = {}
    for (_, _, T), pr in dist.items():
        out[T] = out.get(T, 0) + pr
    return dict(sorted(out.items()))


def traverse_mean_dp(k: int, x: int, n: int) -> Fraction:
    return sum((T * p for T, p in traverse_pmf_dp(k, x, n).items()), Fraction(0))


# Monte Carlo checks of the traverse moment estimates

def srw_paths(n: int, samples: int, seed: int) -> np.ndarray:
    """samples x (n+1) simple random walk paths from the counter-based stream."""
    out = np.zeros((samples, n + 1), dtype=np.int64)
    for i in range(samples):
        w = R.raw_words(seed, i, n, R.TAG_EXCURSION)
        steps = 2 * (w & np.uint64(1)).astype(np.int64) - 1
        out[i, 1:] = np.cumsum(steps)
    return out


def traverse_moment_checks(k_list, x_list, n_list, samples: int, seed: int = 0) -> dict:
    """Estimate E T(k, x, n) and P(T >= c sqrt(n)/(4k)) on a grid.

    Reports per n the smallest C with E T <= C sqrt(n)/k exp(-x^2/2n) over the
    (k, x) grid, and the largest c (on a grid of candidates) for which
    P(T >= c sqrt(n)/(4k)) >= P(L(x, n/2) >= 1)/2 whenever k <= c^2 sqrt(n)."""
    rows = []
    c_grid = np.linspace(1.0, 0.01, 100)
    for n in n_list:
        paths = srw_paths(n, samples, seed)
        half = paths[:, : n // 2 + 1]
        C_best = 0.0
        c_ok = []
        for k in k_list:
            tables = [traverse_all(p, k) for p in paths]
            for x in x_list:
                T = np.array([tb.get(x, 0) for tb in tables], dtype=float)
                scale = sqrt(n) / k * exp(-x * x / (2 * n))
                if T.mean() > 0:
                    C_best = max(C_best, T.mean() / scale)
                reach = np.mean([(h[1:] == x).any() for h in half])
                ok_c = 0.0
                for c in c_grid:
                    if k > c * c * sqrt(n):
                        continue
                    if np.mean(T >= c * sqrt(n) / (4 * k)) >= reach / 2:
                        ok_c = c
                        break
                c_ok.append(ok_c)
        rows.append({"n": n, "C": C_best, "c": min(c_ok) if c_ok else 0.0})
    Cs = np.array([r["C"] for r in rows])
    spread = float(np.abs(Cs / Cs.mean() - 1).max()) if Cs.mean() > 0 else float("inf")
    return {"rows": rows, "C_spread": spread, "stable": spread <= 0.2}
