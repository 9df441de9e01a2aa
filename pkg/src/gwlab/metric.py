"""Word-length estimates in the diagonal product: essential contribution,
two-sided bounds, the run-erasing word synthesis, embedded subsets and an
exact breadth-first oracle for small balls."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import diagprod as D
from .diagprod import ALPHA, BETA, TAU, DiagElement, DiagGroupSpec
from .errors import InvalidInput, ResourceLimit

BFS_BUDGET = 10**7

# constants of the two-sided estimates
FACTOR_LOWER_DIV = 8
FACTOR_UPPER_MUL = 9
GLOBAL_UPPER_MUL = 500
BLOCK_UPPER_MUL = 36
H_UPPER_MUL = 45000


@dataclass(frozen=True)
class LengthBounds:
    lower: int
    upper: int

    def contains(self, x) -> bool:
        return self.lower <= x <= self.upper


def essential_contribution(f, k: int, lengths) -> int:
    """E(f) = sum_j k * max_{x in I_j} (|f(x)| - 1)_+ over I_j = [jk/2, (j+1)k/2).

    f is an iterable of (site, value) pairs (or a dict); lengths maps a value
    to its word length (array or callable). Returns 0 for k = 0."""
    if k == 0:
        return 0
    h = k // 2
    items = f.items() if isinstance(f, dict) else f
    best = {}
    for x, v in items:
        L = lengths(v) if callable(lengths) else int(lengths[v])
        if L > 1:
            j = x // h
            best[j] = max(best.get(j, 0), L - 1)
    return k * sum(best.values())


def essential_from_arrays(sites: np.ndarray, lengths: np.ndarray, k: int) -> int:
    """Vectorized essential contribution for one factor."""
    if k == 0 or len(sites) == 0:
        return 0
    ex = np.maximum(np.asarray(lengths) - 1, 0)
    keep = ex > 0
    if not keep.any():
        return 0
    j = np.asarray(sites)[keep] // (k // 2)
    ex = ex[keep]
    order = np.lexsort((ex, j))
    j, ex = j[order], ex[order]
    last = np.r_[j[1:] != j[:-1], True]
    return int(k * ex[last].sum())


def _factor_upper(E: int, R: int, nontrivial: bool) -> int:
    # a single lamp written at the origin has range 0 but length >= 1
    if not nontrivial:
        return 0
    return FACTOR_UPPER_MUL * (E + max(R, 1))


def factor_length_bounds(spec: DiagGroupSpec, s: int, f, cursor: int) -> LengthBounds:
    """Bounds on |(f_s, i)| in the single factor Delta_s."""
    f = tuple(sorted(f.items())) if isinstance(f, dict) else tuple(f)
    G = spec.group(s)
    E = essential_contribution(f, spec.ks[s], G.word_length)
    R = D.factor_range(spec, s, f, cursor)
    lower = max(-(-E // FACTOR_LOWER_DIV), R)
    nontrivial = bool(f) or cursor != 0
    return LengthBounds(lower, _factor_upper(E, R, nontrivial))


def delta_length_bounds(spec: DiagGroupSpec, g: DiagElement) -> LengthBounds:
    """Global bounds: max of factor lower bounds, 500 times the sum of factor
    upper bounds over s <= s0(g)."""
    s_top = D.s0(spec, g)
    lower = 0
    upper = 0
    for s in range(spec.n_factors):
        b = factor_length_bounds(spec, s, g.lamps[s], g.cursor)
        lower = max(lower, b.lower)
        if s <= s_top:
            upper += b.upper
    return LengthBounds(lower, GLOBAL_UPPER_MUL * upper)


# constructive words

@dataclass
class SynthesisResult:
    word: list
    kernel: bool        # theta_s(f_s) trivial, so other factors see a pure translation
    bound: int          # 9 (E_s + max(Range, 1))
    essential: int
    range: int


class _Eraser:
    """Right-multiplies a single-factor configuration by generators, recording
    the word. Used to build a word for (f, i)^{-1}."""

    def __init__(self, spec, s, f, cursor):
        self.G = spec.group(s)
        self.k = spec.ks[s]
        self.val = dict(f)
        self.c = cursor
        self.word = []
        G = self.G
        self.A = [(i, a) for i, a in enumerate(G.gens_A) if i]
        self.B = [(j, b) for j, b in enumerate(G.gens_B) if j]

    def move(self, target):
        step = 1 if target > self.c else -1
        while self.c != target:
            self.c += step
            self.word.append((TAU, step))

    def _reduce(self, x, letters, kind):
        v = self.val.get(x, 0)
        if v == 0:
            return False
        G = self.G
        n = G.length(v)
        for i, u in letters:
            w = G.mul(v, u)
            if G.length(w) == n - 1:
                if w:
                    self.val[x] = w
                else:
                    del self.val[x]
                self.word.append((kind, i))
                return True
        return False

    def erase_A(self, x):
        return self._reduce(x, self.A, ALPHA)

    def erase_B(self, x):
        return self._reduce(x, self.B, BETA)


def synthesize_word(spec: DiagGroupSpec, s: int, f, cursor: int) -> SynthesisResult:
    """A word representing (f_s, i) in Delta_s, built by erasing lamps run by run.

    The inverse word is produced first: starting from (f, i), the cursor sweeps
    the blocks I_j = [jk/2, (j+1)k/2) from right to left; for each block,
    runs down to jk/2 - k and back remove one letter from every lamp in the
    block (A-letters while the cursor is inside the block, B-letters while it is
    k to the left). When theta_s(f) is trivial the word acts as a pure
    translation on every other factor."""
    f = dict(f.items()) if isinstance(f, dict) else dict(f)
    f = {x: v for x, v in f.items() if v}
    G = spec.group(s)
    k = spec.ks[s]
    E = essential_contribution(f, k, G.word_length)
    R = D.factor_range(spec, s, f, cursor)
    th = spec.theta(s)
    kernel = all(th.theta_A[v] == 0 and th.theta_B[v] == 0 for v in f.values())
    er = _Eraser(spec, s, f, cursor)

    if E == 0:
        # every lamp is a single letter (or factor 0): one sweep over the hull
        lo, hi = D.factor_range_interval(spec, s, f, cursor)
        order = (lo, hi) if abs(cursor - lo) + abs(hi) <= abs(cursor - hi) + abs(lo) else (hi, lo)
        for target in order:
            step = 1 if target >= er.c else -1
            while True:
                while er.erase_A(er.c) or er.erase_B(er.c + k):
                    pass
                if er.c == target:
                    break
                er.move(er.c + step)
        er.move(0)
    else:
        h = k // 2
        pts = list(f) + [0, cursor]
        j_max, j_min = max(pts) // h, min(pts) // h
        er.move((j_max + 1) * h - 1)
        for j in range(j_max, j_min - 1, -1):
            top, bottom = (j + 1) * h - 1, j * h - k
            block = range(j * h, (j + 1) * h)

            def visit():
                c = er.c
                if c in block:
                    er.erase_A(c)
                if c + k in block:
                    er.erase_B(c + k)

            while any(x in er.val for x in block):
                for c in range(top, bottom - 1, -1):
                    er.move(c)
                    visit()
                for c in range(bottom + 1, top + 1):
                    er.move(c)
                    visit()
            if j > j_min:
                er.move(j * h - 1)
        er.move(0)
    if er.val:
        raise AssertionError("eraser left lamps behind")  # unreachable: each run shortens every lamp
    word = D.inverse_word(spec, er.word)
    return SynthesisResult(word, kernel, FACTOR_UPPER_MUL * (E + max(R, 1)), E, R)


def project(spec: DiagGroupSpec, g: DiagElement, s: int):
    return g.lamps[s], g.cursor


# exact ball oracle

class BallOracle:
    """Exact word lengths on the ball of radius `radius`, either in Delta or in a
    single factor Delta_s (factor=s). States are byte strings: the cursor, then
    the lamps of each kept factor on the window [-radius, radius + k_s]."""

    def __init__(self, spec: DiagGroupSpec, radius: int, factor: int | None = None,
                 budget: int = BFS_BUDGET):
        self.spec = spec
        self.radius = R = int(radius)
        self.factors = list(range(spec.n_factors)) if factor is None else [factor]
        self.offsets = []
        off = 1
        for s in self.factors:
            if spec.group(s).order > 256:
                raise ResourceLimit("ball oracle stores lamps as bytes; group order must be <= 256")
            self.offsets.append(off)
            off += 2 * R + spec.ks[s] + 1
        self.width = off
        start = bytes(self.width)
        start = bytes([R]) + start[1:]
        # right multiplication tables per (factor, letter)
        tabsA, tabsB = [], []
        for s in self.factors:
            G = spec.group(s)
            tabsA.append([bytes(G.mul(x, a) for x in range(256) if x < G.order).ljust(256, b"\0")
                          for a in G.gens_A])
            tabsB.append([bytes(G.mul(x, b) for x in range(256) if x < G.order).ljust(256, b"\0")
                          for b in G.gens_B])
        letters = [(TAU, 1), (TAU, -1)]
        letters += [(ALPHA, i) for i in range(1, spec.size_A)]
        letters += [(BETA, j) for j in range(1, spec.size_B)]
        self.letters = letters

        dist = {start: 0}
        frontier = [start]
        ks = [spec.ks[s] for s in self.factors]
        offs = self.offsets
        nf = len(self.factors)
        for d in range(1, R + 1):
            nxt = []
            for st in frontier:
                c = st[0]
                for kind, v in letters:
                    if kind == TAU:
                        c2 = c + v
                        if c2 < 0 or c2 > 2 * R:
                            continue
                        new = bytes([c2]) + st[1:]
                    else:
                        buf = bytearray(st)
                        for q in range(nf):
                            p = offs[q] + c + (ks[q] if kind == BETA else 0)
                            tab = tabsA[q][v] if kind == ALPHA else tabsB[q][v]
                            buf[p] = tab[buf[p]]
                        new = bytes(buf)
                    if new not in dist:
                        dist[new] = d
                        nxt.append(new)
                        if len(dist) > budget:
                            raise ResourceLimit(f"ball exceeds {budget} states")
            frontier = nxt
        self.dist = dist

    def __len__(self):
        return len(self.dist)

    def encode(self, g: DiagElement) -> bytes | None:
        R = self.radius
        if abs(g.cursor) > R:
            return None
        buf = bytearray(self.width)
        buf[0] = g.cursor + R
        for q, s in enumerate(self.factors):
            lo, hi = -R, R + self.spec.ks[s]
            for x, v in g.lamps[s]:
                if not lo <= x <= hi:
                    return None
                buf[self.offsets[q] + x + R] = v
        return bytes(buf)

    def decode(self, st: bytes) -> DiagElement:
        R = self.radius
        maps = [dict() for _ in range(self.spec.n_factors)]
        for q, s in enumerate(self.factors):
            off = self.offsets[q]
            w = 2 * R + self.spec.ks[s] + 1
            for p in range(w):
                v = st[off + p]
                if v:
                    maps[s][p - R] = v
        return D.make_element(self.spec, st[0] - R, maps)

    def lookup(self, g: DiagElement) -> int | None:
        """Exact length if |g| <= radius, else None."""
        st = self.encode(g)
        return None if st is None else self.dist.get(st)

    def items(self):
        for st, d in self.dist.items():
            yield self.decode(st), d


def exact_length_bfs(spec: DiagGroupSpec, radius: int, factor: int | None = None,
                     budget: int = BFS_BUDGET) -> BallOracle:
    return BallOracle(spec, radius, factor, budget)


# embedded subsets

def homothety_word(spec: DiagGroupSpec, s: int, gamma: int) -> list:
    """tau^{k/2} (alpha tau^{-k} beta tau^{k})... tau^{-k/2} along a minimal word of gamma."""
    G = spec.group(s)
    k = spec.ks[s]
    Aidx = {a: i for i, a in enumerate(G.gens_A)}
    Bidx = {b: j for j, b in enumerate(G.gens_B)}
    word = [(TAU, 1)] * (k // 2)
    for u in G.minimal_word(gamma):
        if u in Aidx:
            word.append((ALPHA, Aidx[u]))
        else:
            word += [(TAU, -1)] * k + [(BETA, Bidx[u])] + [(TAU, 1)] * k
    word += [(TAU, -1)] * (k // 2)
    return word


def homothety_embed(spec: DiagGroupSpec, gamma: int, s: int) -> DiagElement:
    """The image of gamma under the homothetic embedding of Gamma_s: value gamma
    at site k_s/2 of factor s, and its abelianized shadows in the other factors."""
    return D.word_to_element(spec, homothety_word(spec, s, gamma))


def _check_kernel(spec, s, values):
    th = spec.theta(s)
    for v in values:
        if th.theta_A[v] or th.theta_B[v]:
            raise InvalidInput(f"value {v} is not in the commutator kernel of factor {s}")


def product_block(spec: DiagGroupSpec, values: Sequence[int], s: int):
    """Element of the block subgroup Pi_s^t with f_s(x) = values[x] on [0, t),
    together with the bounds k_s/2 max|f| <= |.| <= 36 t max|f|."""
    t = len(values)
    if t < 1:
        raise InvalidInput("product_block needs t >= 1")
    _check_kernel(spec, s, values)
    maps = [dict() for _ in range(spec.n_factors)]
    maps[s] = {x: int(v) for x, v in enumerate(values) if v}
    g = D.make_element(spec, 0, maps)
    G = spec.group(s)
    m = max(G.length(v) for v in values)
    lower = -(-spec.ks[s] * m // 2)
    return g, LengthBounds(lower, BLOCK_UPPER_MUL * t * m)


def embed_H_bounds(spec: DiagGroupSpec, h: dict):
    """h maps s >= 1 to a vector of k_s/2 kernel values. Returns the composed
    element and the bounds max_s l_s(h) <= |.| <= 45000 sum_s l_s(h), where
    l_s(h) = k_s/2 max_j |h_s(j)|_R computed with the kernel generators."""
    from .groups import kernel_subgroup
    maps = [dict() for _ in range(spec.n_factors)]
    blocks = []
    for s, vec in h.items():
        if s < 1 or len(vec) != spec.ks[s] // 2:
            raise InvalidInput(f"factor {s} needs a vector of length k_s/2")
        _check_kernel(spec, s, vec)
        K = kernel_subgroup(spec.group(s), spec.theta(s))
        maps[s] = {x: int(v) for x, v in enumerate(vec) if v}
        blocks.append(spec.ks[s] // 2 * max(K.word_length_R[v] for v in vec))
    g = D.make_element(spec, 0, maps)
    if not blocks:
        return g, LengthBounds(0, 0)
    return g, LengthBounds(max(blocks), H_UPPER_MUL * sum(blocks))
