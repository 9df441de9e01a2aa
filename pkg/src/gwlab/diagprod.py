"""Diagonal product of the lamplighters Gamma_s wr Z.

An element ((f_s), i) carries one sparse lamp map per factor and a single
cursor. The generators are tau^{+-1}, alpha_i (letter a_i written at the
cursor in every factor) and beta_j (letter b_j written at cursor + k_s in
factor s). Abstract letters are indexed by their position in gens_A / gens_B.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import groups as G_
from .errors import AssumptionViolation, InvalidInput, InvalidParameter, ResourceLimit
from .groups import MarkedGroup

INF = math.inf

# generator encoding
TAU = "tau"
ALPHA = "alpha"
BETA = "beta"


def _is_inf(k) -> bool:
    return k is None or (isinstance(k, float) and math.isinf(k)) or k == "inf"


def group_from_descriptor(desc) -> MarkedGroup:
    """Build a marked group from a small JSON-friendly descriptor.

    {"dihedral": l}, {"product": [m, n]}, {"lamplighter": [d, n, colours]},
    {"table": path}, {"table_text": text}. The string "Z2xZ2" is accepted as a shorthand.
    """
    if desc == "Z2xZ2":
        return G_.product_ab(2, 2)
    if isinstance(desc, MarkedGroup):
        return desc
    if not isinstance(desc, dict) or len(desc) != 1:
        raise InvalidInput(f"bad group descriptor {desc!r}")
    (kind, arg), = desc.items()
    if kind == "dihedral":
        return G_.dihedral_new(int(arg))
    if kind == "product":
        return G_.product_ab(int(arg[0]), int(arg[1]))
    if kind == "lamplighter":
        return G_.lamplighter_torus(*[int(a) for a in arg])
    if kind == "table":
        return G_.from_table_file(str(arg))
    if kind == "table_text":
        return G_.from_table_text(str(arg))
    raise InvalidInput(f"unknown group kind {kind!r}")


def _index_table(G: MarkedGroup, gens):
    pos = {g: i for i, g in enumerate(gens)}
    return [[pos.get(G.mul(x, y), -1) for y in gens] for x in gens]


class DiagGroupSpec:
    """The factor family {(k_s, Gamma_s)} of a diagonal product.

    Either pass explicit marked groups, or use ``dihedral`` for the family
    Gamma_0 = Z2 x Z2, Gamma_s = D_{2 l_s}; dihedral factors are only
    tabulated on demand, so large l_s stay cheap for the walk simulators.
    An infinite k_s terminates the list (that factor and all later ones are
    trivial).
    """

    def __init__(self, ks: Sequence, groups: Sequence | None = None,
                 dihedral_ls: Sequence | None = None, validate: bool = True):
        ks = list(ks)
        cut = next((s for s, k in enumerate(ks) if _is_inf(k)), len(ks))
        ks = [int(k) for k in ks[:cut]]
        if not ks or ks[0] != 0:
            raise InvalidParameter("k_0 must be 0")
        for s in range(1, len(ks)):
            if ks[s] % 2 or ks[s] <= 2 * ks[s - 1] or ks[s] <= 0:
                raise InvalidParameter(f"k_s must be even with k_(s+1) > 2 k_s; got {ks}")
        self.ks = tuple(ks)
        self.dihedral_ls = None
        self.descriptors = None
        if dihedral_ls is not None:
            ls = list(dihedral_ls)[:cut]
            if len(ls) != len(ks):
                raise InvalidParameter("need one l_s per factor")
            for s, l in enumerate(ls[1:], 1):
                if _is_inf(l) or int(l) != l or l < 2 or l % 2:
                    raise InvalidParameter(f"l_{s} must be a finite even integer >= 2")
            self.dihedral_ls = tuple([2] + [int(l) for l in ls[1:]])
            self._groups = [G_.product_ab(2, 2)] + [None] * (len(ks) - 1)
        else:
            if groups is None or len(list(groups)[:cut]) != len(ks):
                raise InvalidParameter("need one group per factor")
            groups = list(groups)[:cut]
            self._groups = [group_from_descriptor(g) for g in groups]
            self.descriptors = [g if not isinstance(g, MarkedGroup) else None for g in groups]
        g0 = self._groups[0]
        self.size_A = g0.size_A
        self.size_B = g0.size_B
        self._thetas = [None] * len(ks)
        if validate:
            self.validate()
        # abstract letter inverses (same in every factor once validated)
        self.inv_A = [g0.gens_A.index(g0.inv(a)) for a in g0.gens_A]
        self.inv_B = [g0.gens_B.index(g0.inv(b)) for b in g0.gens_B]

    @classmethod
    def dihedral(cls, ks: Sequence, ls: Sequence) -> "DiagGroupSpec":
        """Gamma_0 = Z2 x Z2 and Gamma_s = D_{2 l_s}. ls[0] is ignored."""
        ls = list(ls)
        if len(ls) == len(ks) - 1:
            ls = [2] + ls
        return cls(ks, dihedral_ls=ls)

    # factor access

    @property
    def n_factors(self) -> int:
        return len(self.ks)

    def group(self, s: int) -> MarkedGroup:
        if self._groups[s] is None:
            l = self.dihedral_ls[s]
            if 2 * l > G_.MAX_ORDER:
                raise ResourceLimit(f"D_{2 * l} is too large to tabulate")
            self._groups[s] = G_.dihedral_new(l)
        return self._groups[s]

    @property
    def groups(self) -> list[MarkedGroup]:
        return [self.group(s) for s in range(self.n_factors)]

    def diam(self, s: int) -> int:
        if self.dihedral_ls is not None and s > 0:
            return self.dihedral_ls[s]
        return self.group(s).diameter

    def log_order(self, s: int) -> float:
        if self.dihedral_ls is not None and s > 0:
            return math.log(2 * self.dihedral_ls[s])
        return math.log(self.group(s).order)

    def theta(self, s: int):
        if self._thetas[s] is None:
            self._thetas[s] = G_.rel_abelianization(self.group(s))
        return self._thetas[s]

    def a_letter(self, s: int, i: int) -> int:
        return self.group(s).gens_A[i]

    def b_letter(self, s: int, j: int) -> int:
        return self.group(s).gens_B[j]

    def validate(self):
        g0 = self._groups[0]
        rep = G_.validate_assumptions(g0)
        if not rep["ok"] or g0.order != g0.size_A * g0.size_B:
            raise AssumptionViolation("Gamma_0 must be A x B")
        tA, tB = _index_table(g0, g0.gens_A), _index_table(g0, g0.gens_B)
        for s, G in enumerate(self._groups[1:], 1):
            if G is None:
                continue  # dihedral, A = B = Z2 by construction
            rep = G_.validate_assumptions(G)
            if not rep["ok"]:
                raise AssumptionViolation(f"factor {s}: {rep['failed']}: {rep['detail']}")
            if _index_table(G, G.gens_A) != tA or _index_table(G, G.gens_B) != tB:
                raise AssumptionViolation(f"factor {s} does not share the abstract A, B")

    def generators(self) -> list[tuple]:
        """The generating tuple: tau^{+-1}, then all alpha_i, beta_j (identities included)."""
        gens = [(TAU, 1), (TAU, -1)]
        gens += [(ALPHA, i) for i in range(self.size_A)]
        gens += [(BETA, j) for j in range(self.size_B)]
        return gens

    def inverse_generator(self, gen):
        kind, v = gen
        if kind == TAU:
            return (TAU, -v)
        if kind == ALPHA:
            return (ALPHA, self.inv_A[v])
        return (BETA, self.inv_B[v])

    def to_json(self) -> dict:
        if self.dihedral_ls is not None:
            return {"family": "dihedral", "k": list(self.ks), "l": list(self.dihedral_ls)}
        descs = self.descriptors or [None] * self.n_factors
        return {"k": list(self.ks),
                "groups": [d if d is not None else {"table_text": G_.to_table_text(self.group(s))}
                           for s, d in enumerate(descs)]}

    @classmethod
    def from_json(cls, obj: dict) -> "DiagGroupSpec":
        ks = [INF if k == "inf" else k for k in obj["k"]]
        if obj.get("family") == "dihedral":
            ls = [INF if l == "inf" else l for l in obj["l"]]
            # an infinite k_s or l_s ends the finite part of the family
            cut = next((s for s, (k, l) in enumerate(zip(ks, ls)) if _is_inf(k) or _is_inf(l)),
                       min(len(ks), len(ls)))
            return cls.dihedral(ks[:cut], ls[:cut])
        return cls(ks, obj["groups"])

    def __repr__(self):
        if self.dihedral_ls is not None:
            return f"DiagGroupSpec(dihedral, k={list(self.ks)}, l={list(self.dihedral_ls)})"
        return f"DiagGroupSpec(k={list(self.ks)}, groups={[G.name for G in self.groups]})"


@dataclass(frozen=True)
class DiagElement:
    """Cursor plus one sorted tuple of (site, id) pairs per factor."""
    cursor: int
    lamps: tuple = field(default_factory=tuple)

    def factor(self, s: int) -> dict:
        return dict(self.lamps[s])

    def to_json(self) -> dict:
        return {"cursor": self.cursor,
                "factors": [{"s": s, "sites": [[x, v] for x, v in f]}
                            for s, f in enumerate(self.lamps)]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def _freeze(maps: Iterable[dict]) -> tuple:
    return tuple(tuple(sorted((x, v) for x, v in m.items() if v != 0)) for m in maps)


def make_element(spec: DiagGroupSpec, cursor: int, maps: Sequence[dict]) -> DiagElement:
    maps = list(maps) + [{}] * (spec.n_factors - len(maps))
    return DiagElement(int(cursor), _freeze(maps))


def element_from_json(spec: DiagGroupSpec, obj) -> DiagElement:
    if isinstance(obj, str):
        obj = json.loads(obj)
    maps = [{} for _ in range(spec.n_factors)]
    for fac in obj.get("factors", []):
        s = int(fac["s"])
        if s >= spec.n_factors:
            raise InvalidInput(f"factor {s} not in spec")
        for x, v in fac["sites"]:
            if not 0 <= int(v) < spec.group(s).order:
                raise InvalidInput(f"lamp id {v} out of range in factor {s}")
            maps[s][int(x)] = int(v)
    return make_element(spec, obj["cursor"], maps)


def identity(spec: DiagGroupSpec) -> DiagElement:
    return DiagElement(0, tuple(() for _ in range(spec.n_factors)))


def tau_power(spec: DiagGroupSpec, m: int) -> DiagElement:
    return DiagElement(int(m), tuple(() for _ in range(spec.n_factors)))


def multiply(spec: DiagGroupSpec, g: DiagElement, h: DiagElement) -> DiagElement:
    """(f, i)(g, j) = (f(.) g(. - i), i + j)."""
    out = []
    for s in range(spec.n_factors):
        G = spec.group(s)
        f = dict(g.lamps[s])
        for x, v in h.lamps[s]:
            y = x + g.cursor
            f[y] = G.mul(f.get(y, 0), v)
        out.append(f)
    return DiagElement(g.cursor + h.cursor, _freeze(out))


def invert(spec: DiagGroupSpec, g: DiagElement) -> DiagElement:
    """(f, i)^{-1} = (f(. + i)^{-1}, -i)."""
    out = []
    for s in range(spec.n_factors):
        G = spec.group(s)
        out.append({x - g.cursor: G.inv(v) for x, v in g.lamps[s]})
    return DiagElement(-g.cursor, _freeze(out))


def generator_element(spec: DiagGroupSpec, gen) -> DiagElement:
    kind, v = gen
    if kind == TAU:
        return tau_power(spec, v)
    maps = []
    for s, k in enumerate(spec.ks):
        if kind == ALPHA:
            maps.append({0: spec.a_letter(s, v)})
        else:
            maps.append({k: spec.b_letter(s, v)})
    return make_element(spec, 0, maps)


class _Mutable:
    """Working copy used to fold long words without refreezing at each step."""

    def __init__(self, spec, g: DiagElement | None = None):
        self.spec = spec
        self.G = [spec.group(s) for s in range(spec.n_factors)]
        if g is None:
            self.cursor = 0
            self.maps = [dict() for _ in spec.ks]
        else:
            self.cursor = g.cursor
            self.maps = [dict(f) for f in g.lamps]
        self.lo = self.hi = self.cursor

    def apply(self, gen):
        kind, v = gen
        if kind == TAU:
            self.cursor += v
            self.lo = min(self.lo, self.cursor)
            self.hi = max(self.hi, self.cursor)
            return
        if v == 0:
            return  # identity letter
        spec = self.spec
        for s, k in enumerate(spec.ks):
            G = self.G[s]
            if kind == ALPHA:
                x, u = self.cursor, G.gens_A[v]
            else:
                x, u = self.cursor + k, G.gens_B[v]
            m = self.maps[s]
            w = G.mul(m.get(x, 0), u)
            if w:
                m[x] = w
            else:
                m.pop(x, None)

    def freeze(self) -> DiagElement:
        return DiagElement(self.cursor, _freeze(self.maps))


def apply_generator(spec: DiagGroupSpec, g: DiagElement, gen) -> DiagElement:
    w = _Mutable(spec, g)
    w.apply(gen)
    return w.freeze()


def word_to_element(spec: DiagGroupSpec, word: Sequence, with_range: bool = False):
    """Evaluate a generator word from the identity. With with_range=True also
    return the interval (min, max) of cursor positions visited."""
    w = _Mutable(spec)
    for gen in word:
        w.apply(gen)
    g = w.freeze()
    if with_range:
        return g, (w.lo, w.hi)
    return g


def inverse_word(spec: DiagGroupSpec, word: Sequence) -> list:
    return [spec.inverse_generator(u) for u in reversed(word)]


# range and consistency

def _demanded_sites(spec: DiagGroupSpec, s: int, f) -> list[int]:
    """Sites the cursor must visit to write the lamps of factor s."""
    k = spec.ks[s]
    if isinstance(f, dict):
        f = f.items()
    if s == 0:
        return [x for x, v in f if v != 0]
    G = spec.group(s)
    A, B = set(G.gens_A), set(G.gens_B)
    out = []
    for x, v in f:
        if v == 0:
            continue
        if v in A:
            out.append(x)
        elif v in B:
            out.append(x - k)
        else:
            out.extend((x, x - k))
    return out


def factor_range_interval(spec: DiagGroupSpec, s: int, f, cursor: int) -> tuple[int, int]:
    pts = _demanded_sites(spec, s, f) + [0, cursor]
    return min(pts), max(pts)


def factor_range(spec: DiagGroupSpec, s: int, f, cursor: int) -> int:
    lo, hi = factor_range_interval(spec, s, f, cursor)
    return hi - lo


def range_interval(spec: DiagGroupSpec, g: DiagElement) -> tuple[int, int]:
    pts = [0, g.cursor]
    for s in range(spec.n_factors):
        pts += _demanded_sites(spec, s, g.lamps[s])
    return min(pts), max(pts)


def range_(spec: DiagGroupSpec, g: DiagElement) -> int:
    lo, hi = range_interval(spec, g)
    return hi - lo


def s0(spec: DiagGroupSpec, g: DiagElement) -> int:
    R = range_(spec, g)
    return max(s for s, k in enumerate(spec.ks) if k <= R)


def check_consistency(spec: DiagGroupSpec, g: DiagElement) -> bool:
    """theta_s^A(f_s(x)) = theta_0^A(f_0(x)), theta_s^B(f_s(x)) = theta_0^B(f_0(x - k_s))."""
    th0 = spec.theta(0)
    f0 = dict(g.lamps[0])
    for s in range(1, spec.n_factors):
        th = spec.theta(s)
        k = spec.ks[s]
        fs = dict(g.lamps[s])
        sites = set(fs) | set(f0) | {x + k for x in f0}
        for x in sites:
            v = fs.get(x, 0)
            if th.theta_A[v] != th0.theta_A[f0.get(x, 0)]:
                return False
            if th.theta_B[v] != th0.theta_B[f0.get(x - k, 0)]:
                return False
    return True


def random_word(spec: DiagGroupSpec, length: int, rng: np.random.Generator) -> list:
    gens = spec.generators()
    idx = rng.integers(0, len(gens), size=length)
    return [gens[i] for i in idx]
