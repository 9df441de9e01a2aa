"""Switch-walk-switch and switch-or-walk random walks on the diagonal product.

For the switch-walk-switch walk W_n, at every time j = 0..n one uniform
A-letter lands at S_j and one uniform B-letter at S_j + k_s in factor s
(two consecutive uniform letters of the same subgroup merge into one uniform
letter). The same abstract letters drive every factor. The lamp at a site is
the time-ordered product of the letters that landed there.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import diagprod as D
from .. import rng as R
from ..diagprod import ALPHA, BETA, TAU, DiagGroupSpec
from ..errors import InvalidParameter, ResourceLimit
from ..groups import dihedral_length
from ..metric import (FACTOR_LOWER_DIV, FACTOR_UPPER_MUL, GLOBAL_UPPER_MUL, LengthBounds,
                      essential_from_arrays)
from . import excursions as X

KIND_A, KIND_B, KIND_OTHER = 1, 2, 3


# sampling

def sws_letters(spec: DiagGroupSpec, n: int, seed: int, sample: int):
    """Base path S_0..S_n and letter indices (into gens_A, gens_B) at times 0..n.

    Word j carries the sign of step j+1 in bit 0, the A-letter in bits 1..32
    and the B-letter in bits 32..63."""
    w = R.raw_words(seed, sample, n + 1, R.TAG_SWS)
    steps = 2 * (w[:n] & np.uint64(1)).astype(np.int64) - 1
    S = np.zeros(n + 1, dtype=np.int64)
    S[1:] = np.cumsum(steps)
    ia = R.uniform_index((w >> np.uint64(1)) & np.uint64(0xFFFFFFFF), spec.size_A)
    ib = R.uniform_index(w >> np.uint64(32), spec.size_B)
    if n == 0:
        # W_0 is the identity: no step, so no switches either
        ia[:], ib[:] = 0, 0
    return S, ia, ib


def sws_word(S, ia, ib) -> list:
    """The generator word of W_n: letters at time 0, then step, letters, ..."""
    word = []
    for j in range(len(S)):
        if j:
            word.append((TAU, int(S[j] - S[j - 1])))
        word += [(ALPHA, int(ia[j])), (BETA, int(ib[j]))]
    return word


def sow_word(spec: DiagGroupSpec, n: int, seed: int, sample: int) -> list:
    """Switch-or-walk: with probability 1/2 a step tau^{+-1}, otherwise a uniform
    letter among alpha_1..alpha_|A|, beta_1..beta_|B| (identities included)."""
    w = R.raw_words(seed, sample, n, R.TAG_SOW)
    move = (w & np.uint64(1)).astype(bool)
    sign = 2 * ((w >> np.uint64(1)) & np.uint64(1)).astype(np.int64) - 1
    nA, nB = spec.size_A, spec.size_B
    g = R.uniform_index(w >> np.uint64(32), nA + nB)
    word = []
    for j in range(n):
        if move[j]:
            word.append((TAU, int(sign[j])))
        elif g[j] < nA:
            word.append((ALPHA, int(g[j])))
        else:
            word.append((BETA, int(g[j] - nA)))
    return word


# lamps of one factor as arrays

@dataclass
class FactorLamps:
    sites: np.ndarray
    lengths: np.ndarray
    kinds: np.ndarray          # KIND_A, KIND_B or KIND_OTHER
    ids: np.ndarray | None     # element ids when the group is tabulated


def _events(S, ia, ib, k):
    ta = np.flatnonzero(ia)
    tb = np.flatnonzero(ib)
    site = np.r_[S[ta], S[tb] + k]
    time = np.r_[ta, tb]
    isb = np.r_[np.zeros(len(ta), bool), np.ones(len(tb), bool)]
    order = np.lexsort((isb, time, site))
    return site[order], time[order], isb[order], np.r_[ia[ta], ib[tb]][order]


def _segments(site):
    new = np.r_[True, site[1:] != site[:-1]] if len(site) else np.zeros(0, bool)
    starts = np.flatnonzero(new)
    seg = np.cumsum(new) - 1
    rank = np.arange(len(site)) - starts[seg]
    return starts, seg, rank


def dihedral_values(S, ia, ib, k, l):
    """Sites and affine values (sigma, t) of the non-identity lamps of a
    dihedral factor, plus the kinds needed by the length sandwich."""
    # every non-identity letter is a reflection: a = (-1, 0), b = (-1, 1), so a
    # product of m of them has sign (-1)^m and translation sum_{b} (-1)^{rank}
    site, _, isb, _ = _events(S, ia, ib, k)
    if len(site) == 0:
        z = np.zeros(0, np.int64)
        return z, z, z
    starts, seg, rank = _segments(site)
    count = np.diff(np.r_[starts, len(site)])
    contrib = np.where(isb, 1 - 2 * (rank & 1), 0)
    t = np.add.reduceat(contrib, starts) % l
    sigma = np.where(count & 1, -1, 1)
    keep = (sigma != 1) | (t != 0)
    return site[starts][keep], sigma[keep], t[keep]


def _dihedral_lamps(S, ia, ib, k, l) -> FactorLamps:
    sites, sigma, t = dihedral_values(S, ia, ib, k, l)
    L = dihedral_length(sigma, t, l)
    kinds = np.where((sigma == -1) & (t == 0), KIND_A,
                     np.where((sigma == -1) & (t == 1 % l), KIND_B, KIND_OTHER))
    return FactorLamps(sites, L, kinds, None)


def _table_lamps(G, S, ia, ib, k) -> FactorLamps:
    table = G.table
    if table is None:
        raise ResourceLimit(f"{G.name} has no multiplication table")
    gA = np.asarray(G.gens_A)
    gB = np.asarray(G.gens_B)
    site, _, isb, letter = _events(S, ia, ib, k)
    if len(site) == 0:
        z = np.zeros(0, np.int64)
        return FactorLamps(z, z, z, z)
    v = np.where(isb, gB[letter], gA[letter])
    starts, seg, rank = _segments(site)
    # segmented inclusive scan by doubling
    d = 1
    top = rank.max()
    while d <= top:
        m = rank >= d
        idx = np.flatnonzero(m)
        v = v.copy()
        v[idx] = table[v[idx - d], v[idx]]
        d *= 2
    ends = np.r_[starts[1:], len(site)] - 1
    ids = v[ends]
    keep = ids != 0
    ids = ids[keep]
    A, B = set(G.gens_A), set(G.gens_B)
    kinds = np.array([KIND_A if g in A else KIND_B if g in B else KIND_OTHER for g in ids],
                     dtype=np.int64)
    return FactorLamps(site[starts][keep], G.word_length[ids], kinds, ids)


def factor_lamps(spec: DiagGroupSpec, s: int, S, ia, ib) -> FactorLamps:
    k = spec.ks[s]
    if spec.dihedral_ls is not None and s > 0:
        return _dihedral_lamps(S, ia, ib, k, spec.dihedral_ls[s])
    return _table_lamps(spec.group(s), S, ia, ib, k)


# bounds from lamp arrays

def _demands(lamps: FactorLamps, k: int, s: int) -> np.ndarray:
    if s == 0:
        return lamps.sites
    a = lamps.sites[lamps.kinds != KIND_B]
    b = lamps.sites[lamps.kinds != KIND_A] - k
    return np.r_[a, b]


def bounds_from_lamps(spec: DiagGroupSpec, cursor: int, lamps: dict) -> tuple[LengthBounds, int]:
    """Global sandwich from per-factor lamp arrays. Factors absent from `lamps`
    must have k_s beyond the walk's span; their range then equals that of
    factor 0 and they lie above s0. Returns (bounds, range)."""
    lo = hi = 0
    lo, hi = min(lo, cursor), max(hi, cursor)
    per = {}
    for s, fl in lamps.items():
        dem = _demands(fl, spec.ks[s], s)
        flo = min(0, cursor, int(dem.min()) if len(dem) else 0)
        fhi = max(0, cursor, int(dem.max()) if len(dem) else 0)
        E = essential_from_arrays(fl.sites, fl.lengths, spec.ks[s])
        per[s] = (E, fhi - flo, len(fl.sites) > 0 or cursor != 0)
        lo, hi = min(lo, flo), max(hi, fhi)
    Rg = hi - lo
    s_top = max(s for s, k in enumerate(spec.ks) if k <= Rg)
    lower = 0
    upper = 0
    for s, (E, Rs, nontrivial) in per.items():
        lower = max(lower, -(-E // FACTOR_LOWER_DIV), Rs)
        if s <= s_top and nontrivial:
            upper += FACTOR_UPPER_MUL * (E + max(Rs, 1))
    return LengthBounds(lower, GLOBAL_UPPER_MUL * upper), Rg


def active_factors(spec: DiagGroupSpec, S) -> list[int]:
    span = int(S.max() - S.min()) if len(S) else 0
    return [s for s, k in enumerate(spec.ks) if k <= span or s == 0]


# runs

@dataclass
class WalkRun:
    spec: DiagGroupSpec
    base_path: np.ndarray
    ia: np.ndarray
    ib: np.ndarray
    _lamps: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.base_path) - 1

    def lamps(self, s: int) -> FactorLamps:
        if s not in self._lamps:
            self._lamps[s] = factor_lamps(self.spec, s, self.base_path, self.ia, self.ib)
        return self._lamps[s]

    def bounds(self) -> LengthBounds:
        fac = active_factors(self.spec, self.base_path)
        return bounds_from_lamps(self.spec, int(self.base_path[-1]),
                                 {s: self.lamps(s) for s in fac})[0]

    def element(self) -> D.DiagElement:
        """The final position as a DiagElement (needs tabulated factor groups)."""
        maps = []
        for s in range(self.spec.n_factors):
            fl = _table_lamps(self.spec.group(s), self.base_path, self.ia, self.ib, self.spec.ks[s])
            maps.append({int(x): int(v) for x, v in zip(fl.sites, fl.ids)})
        return D.make_element(self.spec, int(self.base_path[-1]), maps)

    def word(self) -> list:
        return sws_word(self.base_path, self.ia, self.ib)

    def traverse(self, k: int) -> dict:
        return X.traverse_all(self.base_path, k)

    def local_time(self) -> dict:
        return X.local_time(self.base_path)

    @property
    def range_size(self) -> int:
        return len(np.unique(self.base_path))


def run_sws(spec: DiagGroupSpec, n: int, seed: int, sample: int = 0) -> WalkRun:
    if n < 0:
        raise InvalidParameter("n must be >= 0")
    S, ia, ib = sws_letters(spec, n, seed, sample)
    return WalkRun(spec, S, ia, ib)


def run_sow(spec: DiagGroupSpec, n: int, seed: int, sample: int = 0) -> D.DiagElement:
    if n < 0:
        raise InvalidParameter("n must be >= 0")
    return D.word_to_element(spec, sow_word(spec, n, seed, sample))


# speed

@dataclass
class SpeedTable:
    rows: list   # dicts: n, samples, lower, upper, lower_se, upper_se

    def column(self, key):
        if key == "mid":
            # geometric midpoint of the sandwich; its log-slope is the mean of the endpoint slopes
            return np.sqrt(self.column("lower") * self.column("upper"))
        return np.array([r[key] for r in self.rows], dtype=float)


def _sample_bounds(spec, n_list, seed, i):
    S, ia, ib = sws_letters(spec, max(n_list), seed, i)
    out = []
    for n in n_list:
        if n == 0:
            out.append((0, 0))
            continue
        run = WalkRun(spec, S[: n + 1], ia[: n + 1], ib[: n + 1])
        b = run.bounds()
        out.append((b.lower, b.upper))
    return out


def _map_samples(fn, samples, threads):
    threads = R.thread_count(threads)
    if threads == 1:
        return [fn(i) for i in range(samples)]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, range(samples)))  # results in sample order


def speed_experiment(spec: DiagGroupSpec, n_list, samples: int, seed: int,
                     threads: int | None = None) -> SpeedTable:
    """Monte Carlo means of both ends of the length sandwich of W_n. Walks for
    different n share prefixes (same sample key)."""
    n_list = sorted(int(n) for n in n_list)
    if samples < 2:
        raise InvalidParameter("need at least 2 samples")
    res = np.array(_map_samples(lambda i: _sample_bounds(spec, n_list, seed, i), samples, threads),
                   dtype=float)  # samples x len(n_list) x 2
    rows = []
    for j, n in enumerate(n_list):
        lo, up = res[:, j, 0], res[:, j, 1]
        rows.append({"n": n, "samples": samples, "lower": lo.mean(), "upper": up.mean(),
                     "lower_se": lo.std(ddof=1) / math.sqrt(samples),
                     "upper_se": up.std(ddof=1) / math.sqrt(samples)})
    return SpeedTable(rows)


def fit_exponent(xs, ys, level: float = 0.95):
    """Least-squares slope of log y against log x with a t-based confidence band."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    res = stats.linregress(lx, ly)
    if len(lx) > 2:
        q = stats.t.ppf(0.5 + level / 2, len(lx) - 2)
        half = q * res.stderr
    else:
        half = float("nan")
    return {"slope": res.slope, "lo": res.slope - half, "hi": res.slope + half,
            "intercept": res.intercept}


def fit_speed(table: SpeedTable, which: str = "lower"):
    return fit_exponent(table.column("n"), table.column(which))


# entropy

class AlternatingEntropy:
    """H of a random alternating product of r uniform letters in A(s), B(s),
    starting with A (start=0) or B (start=1), tabulated by evolving the exact
    distribution over the factor group."""

    def __init__(self, spec: DiagGroupSpec, s: int, max_states: int = 2 * 10**6):
        self.spec, self.s = spec, s
        self.H = [[0.0], [0.0]]
        if spec.dihedral_ls is not None and s > 0:
            self.l = spec.dihedral_ls[s]
            if 2 * self.l > max_states:
                raise ResourceLimit("factor too large for the entropy recursion")
            self.mode = "dihedral"
        else:
            G = spec.group(s)
            if G.table is None or G.order > max_states:
                raise ResourceLimit("factor too large for the entropy recursion")
            self.mode = "table"
            self.G = G
        self._state = [None, None]

    def _init(self, start):
        if self.mode == "dihedral":
            p = np.zeros((2, self.l))  # row 0: rotations (1, t), row 1: reflections (-1, t)
            p[0, 0] = 1.0
        else:
            p = np.zeros(self.G.order)
            p[0] = 1.0
        return p

    def _step(self, p, use_b):
        if self.mode == "dihedral":
            q = 0.5 * p
            if not use_b:
                # right multiplication by a = (-1, 0) swaps sign, keeps t
                q = q + 0.5 * p[::-1]
            else:
                # (1, t) b = (-1, t + 1); (-1, t) b = (1, t - 1)
                q = q.copy()
                q[1] += 0.5 * np.roll(p[0], 1)
                q[0] += 0.5 * np.roll(p[1], -1)
            return q
        gens = self.G.gens_B if use_b else self.G.gens_A
        q = np.zeros_like(p)
        for u in gens:
            np.add.at(q, self.G.table[:, u], p)
        return q / len(gens)

    @staticmethod
    def _entropy(p):
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())

    def get(self, start: int, r: int) -> float:
        Hs = self.H[start]
        if self._state[start] is None:
            self._state[start] = self._init(start)
        while len(Hs) <= r:
            i = len(Hs) - 1  # letters applied so far
            use_b = (i % 2 == 0) == bool(start)
            self._state[start] = self._step(self._state[start], use_b)
            Hs.append(self._entropy(self._state[start].ravel()))
        return Hs[r]


def _conditional_factor_entropy(spec, s, S, ent: AlternatingEntropy):
    k = spec.ks[s]
    t = np.arange(len(S))
    if k == 0:
        return len(np.unique(S)) * math.log(spec.size_A * spec.size_B)
    site, runs, first, last, _ = X._run_stats(np.r_[S, S + k], np.r_[t, t],
                                              np.r_[np.zeros(len(S), bool), np.ones(len(S), bool)])
    total = 0.0
    for st in (0, 1):
        sel = runs[first == st]
        if len(sel):
            vals, cnt = np.unique(sel, return_counts=True)
            total += sum(ent.get(st, int(r)) * c for r, c in zip(vals, cnt))
    return total


def srw_endpoint_entropy(n: int) -> float:
    return float(stats.binom(n, 0.5).entropy()) if n > 0 else 0.0


def entropy_lower_estimate(spec: DiagGroupSpec, n: int, samples: int, seed: int,
                           threads: int | None = None) -> dict:
    """H(S_n) + E[max_s sum_y H(lamp_s(y) | base path)], a lower bound on H(W_n).

    Given the base path, the lamps of one factor are independent alternating
    words whose run structure is read off the path; their exact entropies come
    from AlternatingEntropy. Factors are not independent of each other, so only
    the best single factor is used."""
    ents = {s: AlternatingEntropy(spec, s) for s in range(1, spec.n_factors)}

    def one(i):
        S, _, _ = sws_letters(spec, n, seed, i)
        best = _conditional_factor_entropy(spec, 0, S, None)
        for s in active_factors(spec, S):
            if s:
                best = max(best, _conditional_factor_entropy(spec, s, S, ents[s]))
        return best

    # fill the tables serially first so threads only read them
    vals = np.array([one(i) for i in range(samples)]) if R.thread_count(threads) == 1 else \
        np.array(_map_samples(one, samples, 1))
    h0 = srw_endpoint_entropy(n)
    return {"n": n, "value": h0 + vals.mean(), "se": vals.std(ddof=1) / math.sqrt(samples)
            if samples > 1 else 0.0, "base_entropy": h0}


# independent product of two walks

def joint_speed_entropy(specA: DiagGroupSpec, specB: DiagGroupSpec | None, n_list,
                        samples: int, seed: int, entropy: bool = True) -> dict:
    """Walks on Delta_A x Delta_B with independent coordinates. The product
    length is at least the max and at most the sum of the coordinate lengths;
    entropies of independent coordinates add."""
    ta = speed_experiment(specA, n_list, samples, seed)
    tb = speed_experiment(specB, n_list, samples, seed + 1) if specB is not None else None
    rows = []
    for j, n in enumerate(sorted(n_list)):
        ra = ta.rows[j]
        row = {"n": n, "lower": ra["lower"], "upper": ra["upper"]}
        if tb is not None:
            rb = tb.rows[j]
            row["lower"] = max(ra["lower"], rb["lower"])
            row["upper"] = ra["upper"] + rb["upper"]
        if entropy:
            h = entropy_lower_estimate(specA, n, samples, seed)["value"]
            if specB is not None:
                h += entropy_lower_estimate(specB, n, samples, seed + 1)["value"]
            row["entropy"] = h
        rows.append(row)
    return {"A": ta, "B": tb, "rows": rows}
