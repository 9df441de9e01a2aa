"""Isoperimetric test functions on the diagonal product, their Rayleigh
quotients, profile curves, the return-probability solver and small exact oracles.

The Dirichlet form is E_p(phi) = sum_Z sum_u q(u) |phi(Zu) - phi(Z)|^p for the
switch-or-walk measure q: q(tau^{+-1}) = 1/4 and each listed alpha_i, beta_j
(identities included) gets 1/(2(|A| + |B|)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import diagprod as D
from .diagprod import ALPHA, BETA, TAU, DiagGroupSpec
from .errors import DomainExceeded, InvalidParameter, ResourceLimit

ENUM_BUDGET = 5 * 10**6


@dataclass
class TestFunctionStats:
    r: int
    p: float
    support_size: int
    rayleigh: object   # Fraction for integer p, float otherwise


# switch-or-walk weights

def sow_weights(spec: DiagGroupSpec) -> dict:
    w = {(TAU, 1): Fraction(1, 4), (TAU, -1): Fraction(1, 4)}
    each = Fraction(1, 2 * (spec.size_A + spec.size_B))
    for i in range(spec.size_A):
        w[(ALPHA, i)] = w.get((ALPHA, i), 0) + each
    for j in range(spec.size_B):
        w[(BETA, j)] = w.get((BETA, j), 0) + each
    return w


# the sets U_r

def count_Ur0(spec: DiagGroupSpec, r: int) -> int:
    """|{(f, 0) : Range within [-r, r]}|.

    Factor 0 is free on [-r, r]; factor s >= 1 adds a free kernel choice
    (|Gamma_s| / |A||B| of them) at every site of [-r + k_s, r]."""
    if r < 0:
        raise InvalidParameter("r must be >= 0")
    ab = spec.size_A * spec.size_B
    total = ab ** (2 * r + 1)
    for s in range(1, spec.n_factors):
        width = 2 * r + 1 - spec.ks[s]
        if width <= 0:
            break
        order = 2 * spec.dihedral_ls[s] if spec.dihedral_ls is not None else spec.group(s).order
        total *= (order // ab) ** width
    return total


def support_size(spec: DiagGroupSpec, r: int) -> int:
    return count_Ur0(spec, r) * (2 * r + 1)


class UrEnumeration:
    """All elements whose range lies in [-r, r], found by breadth-first search
    over words whose cursor never leaves [-r, r]. States are byte strings: the
    cursor (shifted by r), then each factor's lamps on [-r, r + k_s]."""

    def __init__(self, spec: DiagGroupSpec, r: int, budget: int = ENUM_BUDGET):
        self.spec, self.r = spec, r
        self.offsets, off = [], 1
        for s in range(spec.n_factors):
            if spec.group(s).order > 256:
                raise ResourceLimit("group order must be <= 256")
            self.offsets.append(off)
            off += 2 * r + spec.ks[s] + 1
        self.width = off
        self.tabs = {}
        for kind, gens in ((ALPHA, "gens_A"), (BETA, "gens_B")):
            for i in range(spec.size_A if kind == ALPHA else spec.size_B):
                self.tabs[(kind, i)] = [
                    bytes(G.mul(x, getattr(G, gens)[i]) for x in range(G.order)).ljust(256, b"\0")
                    for G in spec.groups]
        start = bytes([r]) + bytes(self.width - 1)
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for st in frontier:
                for gen in spec.generators():
                    new = self.move(st, gen)
                    if new is not None and new not in seen:
                        seen.add(new)
                        nxt.append(new)
                        if len(seen) > budget:
                            raise ResourceLimit(f"U_r exceeds {budget} states")
            frontier = nxt
        self.states = seen

    def move(self, st: bytes, gen):
        """Right multiplication by a generator, or None if the cursor leaves [-r, r]."""
        kind, v = gen
        c = st[0]
        if kind == TAU:
            c2 = c + v
            if c2 < 0 or c2 > 2 * self.r:
                return None
            return bytes([c2]) + st[1:]
        buf = bytearray(st)
        for s, tab in enumerate(self.tabs[gen]):
            p = self.offsets[s] + c + (self.spec.ks[s] if kind == BETA else 0)
            buf[p] = tab[buf[p]]
        return bytes(buf)

    def cursor(self, st: bytes) -> int:
        return st[0] - self.r

    def lamp(self, st: bytes, s: int, x: int) -> int:
        return st[self.offsets[s] + x + self.r]

    def count_cursor0(self) -> int:
        return sum(1 for st in self.states if st[0] == self.r)

    def __len__(self):
        return len(self.states)


# Rayleigh quotient of the tent test function

def tent_norm_sum(r: int, p) -> object:
    """S = sum_{z in [-r, r]} (1 - |z|/r)^p = 1 + 2 sum_{j=1}^{r-1} (j/r)^p."""
    if float(p).is_integer():
        p = int(p)
        return 1 + 2 * sum((Fraction(j, r) ** p for j in range(1, r)), Fraction(0))
    return 1.0 + 2.0 * sum((j / r) ** p for j in range(1, r))


def phi_r_rayleigh(spec: DiagGroupSpec, r: int, p=2) -> TestFunctionStats:
    """E_p(phi_r) / ||phi_r||_p^p = r^{1-p} / S exactly.

    alpha, beta moves keep U_r and the cursor, so only tau moves contribute:
    2r adjacent cursor pairs, each seen from both ends with weight 1/4."""
    if r < 1:
        raise InvalidParameter("r must be >= 1")
    if not 1 <= p <= 2:
        raise InvalidParameter("p must lie in [1, 2]")
    S = tent_norm_sum(r, p)
    if isinstance(S, Fraction):
        val = Fraction(r) ** (1 - int(p)) / S
    else:
        val = r ** (1 - p) / S
    return TestFunctionStats(r, p, support_size(spec, r), val)


def _tent(z: int, r: int):
    return Fraction(max(0, r - abs(z)), r)


def rayleigh_bruteforce(spec: DiagGroupSpec, r: int, p=2, weight: Callable | None = None,
                        enum: UrEnumeration | None = None):
    """Direct Dirichlet sum of tent(z) * weight(state) over the enumerated U_r.

    Moves leaving U_r land where the function vanishes; every neighbour of a
    point outside U_r with nonzero value lies in U_r, so summing over U_r and
    its out-moves covers the whole form."""
    E = enum or UrEnumeration(spec, r)
    q = sow_weights(spec)
    if weight is None and float(p).is_integer():
        return _rayleigh_bruteforce_int(E, r, int(p), q)
    exact = float(p).is_integer()
    pw = int(p) if exact else p

    def val(st):
        if st is None:
            return Fraction(0) if exact else 0.0
        v = _tent(E.cursor(st), r)
        if weight is not None:
            v = v * weight(E, st)
        return v if exact else float(v)

    num = Fraction(0) if exact else 0.0
    den = Fraction(0) if exact else 0.0
    for st in E.states:
        v = val(st)
        den += abs(v) ** pw
        for gen, w in q.items():
            d = val(E.move(st, gen)) - v
            if d:
                num += (w if exact else float(w)) * abs(d) ** pw
        # points outside U_r reaching st by a tau move (cursor at +-(r+1)) have value 0 and
        # contribute q(tau) |v|^p; v vanishes at |z| = r so these terms are 0
    return num / den


def _rayleigh_bruteforce_int(E: UrEnumeration, r: int, p: int, q: dict) -> Fraction:
    # tent values scaled by r are integers; accumulate per generator
    num = {g: 0 for g in q}
    den = 0
    for st in E.states:
        v = r - abs(E.cursor(st))
        den += v ** p
        for g in q:
            nb = E.move(st, g)
            d = (r - abs(E.cursor(nb)) if nb is not None else 0) - v
            if d:
                num[g] += abs(d) ** p
    return sum((w * num[g] for g, w in q.items()), Fraction(0)) / den


# profile curves

@dataclass(frozen=True)
class ProfileParams:
    """k_s and ell_s = log |Gamma_s|; a trailing math.inf in k ends the family."""
    ks: tuple
    ells: tuple
    size_A: int = 2
    size_B: int = 2


def _profile_piece(params: ProfileParams, logv: float):
    """(s, piece) with piece 0 on [k_s ell_s, k_{s+1} ell_s), 1 on [k_{s+1} ell_s, k_{s+1} ell_{s+1})."""
    ks, ells = params.ks, params.ells
    for s in range(len(ks)):
        k_next = ks[s + 1] if s + 1 < len(ks) else math.inf
        l_next = ells[s + 1] if s + 1 < len(ells) else math.inf
        if logv < k_next * ells[s]:
            return s, 0
        if logv < k_next * l_next:
            return s, 1
    return len(ks) - 1, 0


def lambda_upper_curve(params: ProfileParams, p: float, logv_grid, C: float | None = None):
    """Upper bounds (C ell_s / log v)^p and (C / k_{s+1})^p as a function of log v.

    C defaults to the constant realized by the tent test function,
    sup_r r^p * (r^{1-p} / S_r)^{...}, taken as (1 + p) / 2 raised to 1/p."""
    if C is None:
        C = ((1 + p) / 2) ** (1 / p)
    out = []
    for lv in logv_grid:
        s, piece = _profile_piece(params, lv)
        if piece == 0:
            out.append(((C * params.ells[s] / lv) ** p, 2 * s))
        else:
            out.append(((C / params.ks[s + 1]) ** p, 2 * s + 1))
    return np.array([v for v, _ in out]), np.array([i for _, i in out])


def lambda_lower_predictor(params: ProfileParams, p: float, delta: float, logv_grid,
                           C: float | None = None):
    """(delta ell_s / (C log v))^p / (|A| + |B|) and (delta / (C k_{s+1}))^p / (|A| + |B|)."""
    if C is None:
        C = ((1 + p) / 2) ** (1 / p)
    if delta <= 0:
        raise InvalidParameter("delta must be positive")
    n = params.size_A + params.size_B
    out = []
    for lv in logv_grid:
        s, piece = _profile_piece(params, lv)
        if piece == 0:
            out.append((delta * params.ells[s] / (C * lv)) ** p / n)
        else:
            out.append((delta / (C * params.ks[s + 1])) ** p / n)
    return np.array(out)


# the dihedral test function Psi_r

def _dihedral_position_weights(l: int, radius: int):
    """Signed cycle positions P of D_{2l} with |P| < radius, their psi values and
    the classes P mod 4 = abelianization (0: (e,e), 1: (a,e), 2: (a,b), 3: (e,b)).

    With generators a, b the Cayley graph is a 2l-cycle: e at 0, a at +1, ab at +2,
    b at -1. Right multiplication by a swaps P and P + 1 for even P; by b swaps
    P and P - 1 for even P."""
    P = np.arange(-(radius - 1), radius)
    P = P[np.abs(P) <= l]
    if l < radius and len(P) and P[0] == -l:
        P = P[1:]  # +-l is one element
    psi = [Fraction(radius - min(abs(int(x)), 2 * l - abs(int(x))), radius) for x in P]
    return [int(x) for x in P], psi


def _coset_tables(l: int, radius: int):
    """Q[c] = sum_{P in class c} psi(P)^2 and cross tables for right multiplication by a, b."""
    P, psi = _dihedral_position_weights(l, radius)
    val = dict(zip((x % (2 * l) for x in P), psi))
    Q = [Fraction(0)] * 4
    Xa = [Fraction(0)] * 4
    Xb = [Fraction(0)] * 4
    for x, v in zip(P, psi):
        c = x % 4
        Q[c] += v * v
        xa = x + 1 if x % 2 == 0 else x - 1
        xb = x - 1 if x % 2 == 0 else x + 1
        Xa[c] += v * val.get(xa % (2 * l), 0)
        Xb[c] += v * val.get(xb % (2 * l), 0)
    return Q, Xa, Xb


# abelianization pair (a-bit, b-bit) -> class P mod 4
_CLASS = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}


def _edge_table(T):
    # rows: a-bit of site x, columns: b-bit of site x - k_s
    return [[T[_CLASS[(a, b)]] for b in (0, 1)] for a in (0, 1)]


def _partition(edges, tables):
    """Sum over binary variables of the product of pairwise edge tables.
    edges: list of (u, v) variable keys; tables: matching 2x2 nested lists.
    Eliminates variables of one connected component at a time, lowest degree first."""
    adj = {}
    factors = []
    for (u, v), T in zip(edges, tables):
        factors.append(((u, v), {(a, b): T[a][b] for a in (0, 1) for b in (0, 1)}))
    for i, (vars_, _) in enumerate(factors):
        for x in vars_:
            adj.setdefault(x, set()).add(i)
    alive = dict(enumerate(factors))
    total = Fraction(1) if edges and isinstance(tables[0][0][0], Fraction) else 1.0
    remaining = set(adj)
    while remaining:
        x = min(remaining, key=lambda y: (len(adj[y]), str(y)))
        remaining.discard(x)
        fids = list(adj.pop(x))
        scope = sorted({y for f in fids for y in alive[f][0] if y != x}, key=str)
        new = {}
        for assign in _assignments(len(scope)):
            env = dict(zip(scope, assign))
            acc = 0
            for bx in (0, 1):
                env[x] = bx
                prod = 1
                for f in fids:
                    vs, tab = alive[f]
                    prod = prod * tab[tuple(env[y] for y in vs)]
                acc = acc + prod
            new[assign] = acc
        for f in fids:
            for y in alive[f][0]:
                if y != x:
                    adj[y].discard(f)
            del alive[f]
        if scope:
            fid = max(alive, default=-1) + 1 + len(factors)
            factors.append(None)
            alive[fid] = (tuple(scope), new)
            for y in scope:
                adj[y].add(fid)
        else:
            total = total * new[()]
    return total


def _assignments(n):
    for m in range(1 << n):
        yield tuple((m >> i) & 1 for i in range(n))


def S_set(spec: DiagGroupSpec, r: int) -> list[int]:
    """{s >= 1 : k_s <= r, l_s >= r^2}."""
    if spec.dihedral_ls is None:
        raise InvalidParameter("needs a dihedral spec")
    return [s for s in range(1, spec.n_factors)
            if spec.ks[s] <= r and spec.dihedral_ls[s] >= r * r]


def psi_dihedral_rayleigh(spec: DiagGroupSpec, r: int, exact: bool = True) -> dict:
    """Exact Rayleigh quotient (p = 2) of Psi_r = tent(z) 1_{U_r} prod_{s in S(r)}
    prod_{x in [-r + k_s, r]} psi_{r^2}(f_s(x)).

    Given the factor-0 bits (a_x, b_y), the value f_s(x) ranges over one coset of
    the kernel, so summing out the kernel leaves a pairwise model on the bits with
    edges a_x -- b_{x - k_s}; all sums are partition functions of that model."""
    if r < 1:
        raise InvalidParameter("r must be >= 1")
    Sr = S_set(spec, r)
    Sn = tent_norm_sum(r, 2)
    tau_part = Fraction(1, r) / Sn
    if not Sr:
        val = tau_part
        return {"r": r, "S": Sr, "rayleigh": val if exact else float(val), "tau": tau_part,
                "switch": Fraction(0), "r2_quotient": float(val) * r * r}
    conv = (lambda v: v) if exact else float
    base, cross_a, cross_b = {}, {}, {}
    for s in Sr:
        Q, Xa, Xb = _coset_tables(spec.dihedral_ls[s], r * r)
        base[s] = _edge_table([conv(v) for v in Q])
        cross_a[s] = _edge_table([conv(v) for v in Xa])
        cross_b[s] = _edge_table([conv(v) for v in Xb])
    edges, owner = [], []
    for s in Sr:
        for x in range(-r + spec.ks[s], r + 1):
            edges.append((("a", x), ("b", x - spec.ks[s])))
            owner.append((s, x))
    # connected components over the bit variables
    parent = {}

    def find(u):
        while parent.setdefault(u, u) != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for u, v in edges:
        parent[find(u)] = find(v)
    comp_edges = {}
    for i, (u, v) in enumerate(edges):
        comp_edges.setdefault(find(u), []).append(i)
    comp_Z = {c: _partition([edges[i] for i in ids], [base[owner[i][0]] for i in ids])
              for c, ids in comp_edges.items()}

    def ratio(comp, modified):
        ids = comp_edges[comp]
        tabs = [modified.get(i, base[owner[i][0]]) for i in ids]
        return _partition([edges[i] for i in ids], tabs) / comp_Z[comp]

    one = Fraction(1) if exact else 1.0
    qa = Fraction(1, 2 * (spec.size_A + spec.size_B))
    qa = qa if exact else float(qa)
    switch = 0 * one
    index = {o: i for i, o in enumerate(owner)}
    for z in range(-r + 1, r):
        t2 = _tent(z, r) ** 2
        t2 = t2 if exact else float(t2)
        # alpha at z multiplies f_s(z) by a; beta multiplies f_s(z + k_s) by b
        for cross, site in ((cross_a, lambda s: z), (cross_b, lambda s: z + spec.ks[s])):
            mods = {}
            for s in Sr:
                i = index.get((s, site(s)))
                if i is not None:
                    mods[i] = cross[s]
            if not mods:
                continue
            comps = {find(edges[i][0]) for i in mods}
            # modified edges all share one variable, hence one component
            (c,) = comps
            rho = ratio(c, mods)
            switch += qa * t2 * 2 * (one - rho)
    switch = switch / (Sn if exact else float(Sn))
    val = (tau_part if exact else float(tau_part)) + switch
    return {"r": r, "S": Sr, "rayleigh": val, "tau": tau_part, "switch": switch,
            "r2_quotient": float(val) * r * r}


def psi_weight_function(spec: DiagGroupSpec, r: int):
    """Lamp weight prod_{s in S(r)} prod_{x in [-r + k_s, r]} psi_{r^2}(f_s(x)) on
    UrEnumeration states, for the brute-force check."""
    Sr = S_set(spec, r)

    def weight(E, st):
        w = Fraction(1)
        for s in Sr:
            G = spec.group(s)
            for x in range(-r + spec.ks[s], r + 1):
                g = E.lamp(st, s, x)
                w *= Fraction(max(0, r * r - int(G.word_length[g])), r * r)
        return w

    return weight


# return probability

def w_solver(f: Callable[[float], float], n: float, rtol: float = 1e-12,
             w_cap: float = 1e200) -> float:
    """Solve n = int_1^w (s / f(s))^2 ds for w by adaptive Simpson and bisection."""
    if n < 0:
        raise InvalidParameter("n must be >= 0")
    if n == 0:
        return 1.0

    def g(s):
        v = f(s)
        if not v > 0 or not math.isfinite(v):
            raise DomainExceeded(f"f({s}) = {v} is not positive and finite")
        return (s / v) ** 2

    def integral(a, b):
        return _adaptive_simpson(g, a, b, rtol * 1e-2)

    # grow the bracket geometrically, accumulating the integral piecewise
    lo, acc = 1.0, 0.0
    hi = 2.0
    while True:
        piece = integral(lo, hi)
        if not math.isfinite(piece):
            raise DomainExceeded("integral diverges")
        if acc + piece >= n:
            break
        acc += piece
        lo, hi = hi, hi * 2
        if hi > w_cap:
            raise DomainExceeded(f"w(n) exceeds {w_cap}")
    a, b = lo, hi
    while b - a > rtol * a:
        mid = 0.5 * (a + b)
        if acc + integral(lo, mid) >= n:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def _adaptive_simpson(g, a, b, tol, depth=60):
    def simpson(a, fa, b, fb):
        m = 0.5 * (a + b)
        fm = g(m)
        return m, fm, (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, fa, b, fb, m, fm, whole, tol, depth):
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15 * tol * max(abs(left + right), 1e-300):
            return left + right + delta / 15
        return (rec(a, fa, m, fm, lm, flm, left, tol, depth - 1)
                + rec(m, fm, b, fb, rm, frm, right, tol, depth - 1))

    fa, fb = g(a), g(b)
    m, fm, whole = simpson(a, fa, b, fb)
    return rec(a, fa, b, fb, m, fm, whole, tol, depth)


def exact_return_prob(spec: DiagGroupSpec, n_max: int, budget: int = 2 * 10**6) -> list:
    """[q^{(2n)}(e) for n = 0..n_max] as exact rationals, by repeated convolution."""
    q = sow_weights(spec)
    steps = [(D.generator_element(spec, g), w) for g, w in q.items()]
    e = D.identity(spec)
    dist = {e: Fraction(1)}
    out = [Fraction(1)]
    for t in range(1, 2 * n_max + 1):
        nxt = {}
        for g, pr in dist.items():
            for h, w in steps:
                key = D.multiply(spec, g, h)
                nxt[key] = nxt.get(key, 0) + pr * w
        dist = nxt
        if len(dist) > budget:
            raise ResourceLimit(f"support exceeds {budget} elements")
        if t % 2 == 0:
            out.append(dist.get(e, Fraction(0)))
    return out


def return_prob_paths(spec: DiagGroupSpec, n: int) -> Fraction:
    """q^{(2n)}(e) by enumerating every word of length 2n over the support of q."""
    import itertools
    q = sow_weights(spec)
    gens = list(q)
    e = D.identity(spec)
    total = Fraction(0)
    for word in itertools.product(gens, repeat=2 * n):
        if D.word_to_element(spec, list(word)) == e:
            pr = Fraction(1)
            for g in word:
                pr *= q[g]
            total += pr
    return total


# Folner sets

def folner_set(spec: DiagGroupSpec, r: int, budget: int = ENUM_BUDGET) -> dict:
    """Materialize U_r and its inner boundary for the generating set (elements
    with a neighbour outside U_r)."""
    E = UrEnumeration(spec, r, budget)
    gens = spec.generators()
    boundary = sum(1 for st in E.states if any(E.move(st, g) is None for g in gens))
    return {"r": r, "size": len(E), "boundary": boundary,
            "ratio": Fraction(boundary, len(E)), "count_formula": support_size(spec, r)}
