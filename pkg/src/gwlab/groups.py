"""Finite marked groups (Gamma, A u B), relative abelianization and the
commutator kernel with its Reidemeister-Schreier generators."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import AssumptionViolation, InternalConsistencyError, InvalidParameter, ResourceLimit

MAX_ORDER = 10**7
# full multiplication tables are kept below this order; above it we multiply raw elements
TABLE_LIMIT = 2048


def _find_inverse(u, letters, mul, identity):
    for v in letters:
        if mul(u, v) == identity:
            return v
    raise InvalidParameter("marking subgroups are not closed under inverses")


def _close_subgroup(gens, mul, identity):
    """Closure of gens under mul, identity first, discovery order otherwise."""
    seen = {identity: 0}
    out = [identity]
    queue = deque([identity])
    gens = [g for g in gens if g != identity]
    while queue:
        x = queue.popleft()
        for g in gens:
            y = mul(x, g)
            if y not in seen:
                seen[y] = len(out)
                out.append(y)
                queue.append(y)
    return out


class MarkedGroup:
    """A finite group marked with two subgroups A, B whose union generates it.

    Elements are canonical integer ids assigned in BFS order from the identity
    (letters tried in the order gens_A then gens_B), so id 0 is the identity and
    ids are sorted by word length.
    """

    def __init__(self, name: str, mul: Callable, identity: Hashable,
                 gens_A: Sequence, gens_B: Sequence, max_order: int = MAX_ORDER,
                 close: bool = True):
        self.name = name
        self._mul = mul
        A_raw = _close_subgroup(gens_A, mul, identity) if close else list(gens_A)
        B_raw = _close_subgroup(gens_B, mul, identity) if close else list(gens_B)
        letters = [x for x in A_raw[1:]] + [y for y in B_raw[1:]]

        index = {identity: 0}
        raw = [identity]
        depth = [0]
        parent = [(-1, -1)]  # (parent id, letter position)
        right = []  # right[g][c] = g * letters[c]
        i = 0
        while i < len(raw):
            x = raw[i]
            row = []
            for c, u in enumerate(letters):
                y = mul(x, u)
                j = index.get(y)
                if j is None:
                    j = len(raw)
                    if j >= max_order:
                        raise ResourceLimit(f"group {name} exceeds order budget {max_order}")
                    index[y] = j
                    raw.append(y)
                    depth.append(depth[i] + 1)
                    parent.append((i, c))
                row.append(j)
            right.append(row)
            i += 1

        self.raw = raw
        self.index = index
        self.order = len(raw)
        self.identity = 0
        self.word_length = np.asarray(depth, dtype=np.int64)
        self.diameter = int(self.word_length.max())
        self.right = np.asarray(right, dtype=np.int64).reshape(self.order, len(letters))
        self.gens_A = [index[x] for x in A_raw]
        self.gens_B = [index[y] for y in B_raw]
        self._letters = [index[u] for u in letters]
        self._table = None
        if self.order <= TABLE_LIMIT:
            self._table = np.array([[index[mul(x, y)] for y in raw] for x in raw], dtype=np.int64)
            # the identity has id 0, so the row minimum sits at the inverse
            self._inv = np.argmin(self._table, axis=1)
        else:
            # g = p u  =>  g^{-1} = u^{-1} p^{-1}, filled in BFS order
            letter_inv = [index[_find_inverse(u, letters, mul, identity)] for u in letters]
            inv = np.zeros(self.order, dtype=np.int64)
            for g in range(1, self.order):
                p, c = parent[g]
                inv[g] = index[mul(raw[letter_inv[c]], raw[inv[p]])]
            self._inv = inv

    # group operations on ids

    def mul(self, g: int, h: int) -> int:
        if self._table is not None:
            return int(self._table[g, h])
        return self.index[self._mul(self.raw[g], self.raw[h])]

    def inv(self, g: int) -> int:
        return int(self._inv[g])

    @property
    def table(self):
        """Full multiplication table (None for large groups)."""
        return self._table

    @property
    def letters(self):
        """Non-identity letters of A then B (ids)."""
        return list(self._letters)

    @property
    def size_A(self) -> int:
        return len(self.gens_A)

    @property
    def size_B(self) -> int:
        return len(self.gens_B)

    def length(self, g: int) -> int:
        return int(self.word_length[g])

    def product(self, ids: Sequence[int]) -> int:
        out = self.identity
        for g in ids:
            out = self.mul(out, g)
        return out

    def minimal_word(self, g: int) -> list[int]:
        """Lexicographically least minimal word for g over the letters. A-letters
        sort before B-letters, so an A-first word is chosen whenever one exists."""
        n = self.length(g)
        word = []
        cur = self.identity
        for step in range(n):
            for u in self._letters:
                nxt = self.mul(cur, u)
                if self.length(self.mul(self.inv(nxt), g)) == n - step - 1:
                    word.append(u)
                    cur = nxt
                    break
        return word

    def __repr__(self):
        return f"MarkedGroup({self.name}, order={self.order}, |A|={self.size_A}, |B|={self.size_B})"


# concrete families

def _dihedral_mul(l):
    def mul(x, y):
        s1, t1 = x
        s2, t2 = y
        return (s1 * s2, (t1 + s1 * t2) % l)
    return mul


def _dihedral_any(l: int, name=None) -> MarkedGroup:
    # affine maps z -> s z + t on Z/l; a = (-1, 0), b = (-1, 1), ab = (1, -1)
    l = int(l)
    return MarkedGroup(name or f"D{2 * l}", _dihedral_mul(l), (1, 0),
                       [(-1, 0)], [(-1, 1 % l)])


def dihedral_new(l: int) -> MarkedGroup:
    """Dihedral group of order 2l generated by involutions a, b with ab of order l."""
    if int(l) != l or l < 2 or l % 2:
        raise InvalidParameter(f"dihedral_new needs an even l >= 2, got {l}")
    G = _dihedral_any(l)
    G.dihedral_l = int(l)
    return G


def cyclic(n: int) -> MarkedGroup:
    """Z/n marked with A = Z/n and B trivial (only used as a building block)."""
    return MarkedGroup(f"Z{n}", lambda x, y: (x + y) % n, 0, [1 % n], [])


def product_ab(A: MarkedGroup | int, B: MarkedGroup | int) -> MarkedGroup:
    """Direct product A x B with A x {e} and {e} x B as the marking.

    A and B may be given as integers (cyclic groups) or as marked groups, in
    which case their underlying multiplication is used."""
    if isinstance(A, int):
        A = cyclic(A)
    if isinstance(B, int):
        B = cyclic(B)

    def mul(x, y):
        return (A.mul(x[0], y[0]), B.mul(x[1], y[1]))

    gA = [(g, B.identity) for g in range(A.order)]
    gB = [(A.identity, h) for h in range(B.order)]
    return MarkedGroup(f"{A.name}x{B.name}", mul, (A.identity, B.identity), gA, gB)


def lamplighter_torus(d: int, n: int, colours: int = 1,
                      max_order: int = MAX_ORDER) -> MarkedGroup:
    """Z2 lamps over the torus D_{2n}^d (dihedral of order 2n in each coordinate).

    colours=1 is the single-lamp group Z2 wr D_{2n}^d with A generated by the
    lamp at the identity site and the a_j, B by the same lamp and the b_j.
    colours=2 places an A-coloured and a B-coloured lamp at every site, so
    A = Z2 wr <a_j> and B = Z2 wr <b_j> meet trivially.
    """
    if d < 1 or n < 1 or colours not in (1, 2):
        raise InvalidParameter("lamplighter_torus needs d, n >= 1 and colours in {1, 2}")
    D = _dihedral_any(n)
    sites = []
    for flat in np.ndindex(*([D.order] * d)):
        sites.append(tuple(int(v) for v in flat))
    site_id = {x: i for i, x in enumerate(sites)}
    nsite = len(sites)
    order = (2 ** (colours * nsite)) * nsite
    if order > max_order:
        raise ResourceLimit(f"lamplighter_torus({d},{n}) has order {order} > {max_order}")
    # left action of a cursor x on lamp positions w -> x w
    act = [[site_id[tuple(D.mul(x[i], w[i]) for i in range(d))] for w in sites] for x in sites]

    def push(mask, x):
        out = 0
        perm = act[x]
        c = 0
        while mask:
            if mask & 1:
                w = c % nsite
                out |= 1 << (perm[w] + (c // nsite) * nsite)
            mask >>= 1
            c += 1
        return out

    def mul(p, q):
        f, x = p
        g, y = q
        z = site_id[tuple(D.mul(sites[x][i], sites[y][i]) for i in range(d))]
        return (f ^ push(g, x), z)

    e_site = site_id[tuple([D.identity] * d)]

    def coord_gen(letter):
        out = []
        for j in range(d):
            v = [D.identity] * d
            v[j] = D.gens_A[1] if letter == "a" else D.gens_B[1]
            out.append((0, site_id[tuple(v)]))
        return out

    lamp_A = (1, e_site)
    lamp_B = (1, e_site) if colours == 1 else (1 << nsite, e_site)
    G = MarkedGroup(f"Z2wrD{2 * n}^{d}" + ("" if colours == 1 else "x2"), mul, (0, e_site),
                    [lamp_A] + coord_gen("a"), [lamp_B] + coord_gen("b"), max_order=max_order)
    return G


def from_table_file(path: str) -> MarkedGroup:
    """Load a marked group from a multiplication-table text file.

    Grammar (blank lines and '#' comments ignored):
        order k
        gens_A i1 i2 ...      (generators of A, closed automatically)
        gens_B j1 j2 ...
        k lines of k whitespace-separated 0-based ids (row g, column h = g*h)
    The identity is the id whose row is 0..k-1. Ids are renumbered canonically.
    """
    with open(path) as fh:
        return from_table_text(fh.read(), name=str(path))


def from_table_text(text: str, name: str = "table") -> MarkedGroup:
    lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    head = lines[0].split()
    if head[0] != "order":
        raise InvalidParameter("table file must start with 'order k'")
    k = int(head[1])
    gA = gB = None
    rows = []
    for ln in lines[1:]:
        tok = ln.split()
        if tok[0] == "gens_A":
            gA = [int(t) for t in tok[1:]]
        elif tok[0] == "gens_B":
            gB = [int(t) for t in tok[1:]]
        else:
            rows.append([int(t) for t in tok])
    if gA is None or gB is None or len(rows) != k or any(len(r) != k for r in rows):
        raise InvalidParameter("malformed multiplication table file")
    table = np.asarray(rows, dtype=np.int64)
    ident = [g for g in range(k) if np.array_equal(table[g], np.arange(k))]
    if len(ident) != 1:
        raise InvalidParameter("table has no unique identity row")
    return MarkedGroup(name, lambda x, y: int(table[x, y]), ident[0], gA, gB)


def to_table_text(G: MarkedGroup) -> str:
    if G.table is None:
        raise ResourceLimit("group too large for a table dump")
    out = [f"order {G.order}", "gens_A " + " ".join(map(str, G.gens_A)),
           "gens_B " + " ".join(map(str, G.gens_B))]
    out += [" ".join(map(str, row)) for row in G.table]
    return "\n".join(out) + "\n"


# relative abelianization

@dataclass(frozen=True)
class AbelianizationMaps:
    """theta_A[g], theta_B[g] are indices into gens_A / gens_B."""
    theta_A: np.ndarray
    theta_B: np.ndarray

    def theta(self, g: int) -> tuple[int, int]:
        return int(self.theta_A[g]), int(self.theta_B[g])


def _propagate_theta(G: MarkedGroup):
    """Try to define theta: G -> A x B by theta(g u) = theta(g) theta(u) along
    Cayley edges. Returns (theta_A, theta_B, first conflict or None)."""
    Aidx = {g: i for i, g in enumerate(G.gens_A)}
    Bidx = {g: i for i, g in enumerate(G.gens_B)}
    nA, nB = len(G.gens_A), len(G.gens_B)
    # subgroup multiplication on indices
    mA = [[Aidx.get(G.mul(x, y), -1) for y in G.gens_A] for x in G.gens_A]
    mB = [[Bidx.get(G.mul(x, y), -1) for y in G.gens_B] for x in G.gens_B]
    tA = np.full(G.order, -1, dtype=np.int64)
    tB = np.full(G.order, -1, dtype=np.int64)
    tA[0] = 0
    tB[0] = 0
    letters = G.letters
    nletA = nA - 1
    for g in range(G.order):  # BFS order: every g > 0 has a parent earlier
        a, b = tA[g], tB[g]
        for c, u in enumerate(letters):
            h = G.right[g, c]
            if c < nletA:
                na, nb = mA[a][c + 1], b
            else:
                na, nb = a, mB[b][c - nletA + 1]
            if tA[h] < 0:
                tA[h], tB[h] = na, nb
            elif tA[h] != na or tB[h] != nb:
                return tA, tB, (g, u)
    return tA, tB, None


def _normal_closure_order(G: MarkedGroup) -> int:
    comms = set()
    for a in G.gens_A[1:]:
        for b in G.gens_B[1:]:
            c = G.mul(G.mul(G.inv(a), G.inv(b)), G.mul(a, b))
            comms.add(c)
    N = {0}
    frontier = deque(comms)
    gens = set(comms)
    while frontier:
        x = frontier.popleft()
        for u in G.letters:
            y = G.mul(G.mul(G.inv(u), x), u)
            if y not in gens:
                gens.add(y)
                frontier.append(y)
    N = set(_close_subgroup(list(gens), G.mul, 0))
    return len(N)


def validate_assumptions(G: MarkedGroup) -> dict:
    """Check subgroup closure, generation and Gamma/[A,B]^Gamma ~ A x B."""
    report = {"group": G.name, "ok": True, "failed": None, "detail": ""}

    def fail(prop, detail):
        report.update(ok=False, failed=prop, detail=detail)
        return report

    for nm, S in (("A", G.gens_A), ("B", G.gens_B)):
        Sset = set(S)
        if len(Sset) != len(S):
            return fail(f"{nm}-distinct", f"{nm} lists a repeated element")
        for x in S:
            if G.inv(x) not in Sset:
                return fail(f"{nm}-closed", f"{nm} not closed under inverses")
            for y in S:
                if G.mul(x, y) not in Sset:
                    return fail(f"{nm}-closed", f"{nm} not closed under multiplication")
    # generation holds by construction (BFS over A u B reached every element)
    if len(set(G.gens_A) & set(G.gens_B)) > 1:
        q = _normal_closure_order(G) if G.order <= 10**5 else None
        return fail("relative-abelianization",
                    f"A and B intersect nontrivially; quotient order "
                    f"{G.order // q if q else '?'} != |A||B| = {G.size_A * G.size_B}")
    tA, tB, conflict = _propagate_theta(G)
    if conflict is not None:
        q = _normal_closure_order(G) if G.order <= 10**5 else None
        return fail("relative-abelianization",
                    f"no homomorphism onto A x B extends the marking; quotient order "
                    f"{G.order // q if q else '?'} != |A||B| = {G.size_A * G.size_B}")
    return report


def rel_abelianization(G: MarkedGroup) -> AbelianizationMaps:
    tA, tB, conflict = _propagate_theta(G)
    if conflict is not None or len(set(G.gens_A) & set(G.gens_B)) > 1:
        raise AssumptionViolation(f"{G.name}: relative abelianization is not A x B")
    return AbelianizationMaps(tA, tB)


@dataclass
class KernelSubgroup:
    carrier: list
    gens_R: list
    word_length_R: dict
    coset_reps: dict = field(default_factory=dict)

    def __contains__(self, g):
        return g in self.word_length_R


def kernel_subgroup(G: MarkedGroup, maps: AbelianizationMaps | None = None) -> KernelSubgroup:
    """ker(theta) with R = C S C^{-1} n ker, coset reps of lowest BFS id."""
    if maps is None:
        maps = rel_abelianization(G)
    reps = {}
    for g in range(G.order):  # ascending id = ascending length
        key = maps.theta(g)
        if key not in reps:
            reps[key] = g
    carrier = [g for g in range(G.order) if maps.theta_A[g] == 0 and maps.theta_B[g] == 0]
    R = set()
    for c in reps.values():
        for u in G.letters:
            cu = G.mul(c, u)
            cbar = reps[maps.theta(cu)]
            r = G.mul(cu, G.inv(cbar))
            if r != 0:
                R.add(r)
                R.add(G.inv(r))
    gens_R = sorted(R)
    dist = {0: 0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for r in gens_R:
            y = G.mul(x, r)
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    if set(dist) != set(carrier):
        raise InternalConsistencyError("R does not generate the kernel")
    for g in carrier:
        lr, lg = dist[g], G.length(g)
        if not (lr <= lg <= 5 * lr):
            raise InternalConsistencyError(f"bi-Lipschitz check failed at {g}: {lr} vs {lg}")
    return KernelSubgroup(carrier, gens_R, dist, reps)


# closed forms for D_{2l} in the affine representation (sigma, t), used when the
# group is too large to tabulate

def dihedral_length(sigma, t, l):
    """Word length of (sigma, t) in D_{2l} w.r.t. a = (-1, 0), b = (-1, 1).

    Rotations (1, t) equal (ab)^m with m = -t mod l; reflections are
    (ab)^m a = (-1, -m) or b (ab)^m = (-1, 1 + m). Works on numpy arrays."""
    sigma = np.asarray(sigma)
    t = np.asarray(t) % l
    rot = 2 * np.minimum(t, (l - t) % l)
    refl = 1 + 2 * np.minimum((-t) % l, (t - 1) % l)
    return np.where(sigma == 1, rot, refl)


def dihedral_raw_length(G: MarkedGroup, g: int) -> int:
    s, t = G.raw[g]
    return int(dihedral_length(s, t, G.dihedral_l))
