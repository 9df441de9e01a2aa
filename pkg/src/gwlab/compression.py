"""Explicit embeddings of dihedral diagonal products and of H wr Z into L_q,
their Lipschitz and increment diagnostics, and the exponent formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from . import diagprod as D
from .diagprod import ALPHA, BETA, TAU, DiagGroupSpec
from .errors import InvalidInput, InvalidParameter
from .metric import delta_length_bounds
from .walks import sim


# weight gamma

@dataclass(frozen=True)
class GammaSpec:
    """gamma(n) = (1 + n)^{(1 + eps)/2}, so C(gamma) = sum_{n>=1} gamma(n)^{-2}
    = zeta(1 + eps, 2) is finite for eps > 0."""
    eps: float = 0.5

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidParameter("eps must be positive")

    def __call__(self, n):
        return (1.0 + np.asarray(n, float)) ** ((1.0 + self.eps) / 2.0)

    @property
    def C(self) -> float:
        return float(special.zeta(1.0 + self.eps, 2.0))

    def C_p(self, p: float) -> float:
        """sum_{n>=0} gamma(n)^{-p}."""
        return float(special.zeta(p * (1.0 + self.eps) / 2.0, 1.0))

    def C_partial(self, N: int) -> tuple[float, float]:
        """Partial sum over 1 <= n <= N and the integral bound on the tail."""
        n = np.arange(1, N + 1, dtype=float)
        tail = (N + 1.0) ** (-self.eps) / self.eps
        return float(np.sum((1.0 + n) ** -(1.0 + self.eps))), tail


# dihedral polygon maps; D_{2l} elements are affine maps (sigma, t): z -> sigma z + t

def cycle_position(sigma, t, l):
    """Position of (sigma, t) on the Cayley cycle of D_{2l}: e at 0, a at 1, ab
    at 2, b at -1. Minimal words starting with a read off k = P, k_a = ceil(P/2),
    k_b = floor(P/2), all taken mod the cycle length."""
    sigma = np.asarray(sigma)
    return (-2 * np.asarray(t) + (1 - sigma) // 2) % (2 * l)


def _polar(radius, angle):
    return radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def theta_l(sigma, t, l):
    P = cycle_position(sigma, t, l)
    return _polar(1.0 / (2.0 * math.sin(math.pi / (2 * l))), math.pi * P / l)


def theta_l_a(sigma, t, l):
    P = cycle_position(sigma, t, l)
    return _polar(1.0 / (2.0 * math.sin(math.pi / l)), 2.0 * math.pi * (-(-P // 2)) / l)


def theta_l_b(sigma, t, l, aligned: bool = False):
    """With aligned=True the b-polygon is turned by pi/l. Left multiplication by
    a reflection then acts on the a- and b-polygons by the same isometry, which
    the increment comparison needs; the unturned maps act by isometries that
    differ by a rotation of 2 pi / l."""
    P = cycle_position(sigma, t, l)
    shift = math.pi / l if aligned else 0.0
    return _polar(1.0 / (2.0 * math.sin(math.pi / l)), 2.0 * math.pi * (P // 2) / l + shift)


def weight_ws(k: int, y):
    """1/2 outside (-k/2, 3k/2), |y|/k on (-k/2, k), 2 - y/k on [k, 3k/2)."""
    if k < 2:
        raise InvalidParameter("weight_ws needs k >= 2")
    y = np.asarray(y, float)
    out = np.full(y.shape, 0.5)
    m1 = (y > -k / 2) & (y < k)
    m2 = (y >= k) & (y < 1.5 * k)
    out[m1] = np.abs(y[m1]) / k
    out[m2] = 1.0 - (y[m2] - k) / k
    return out


def dmul(x, y, l):
    (s1, t1), (s2, t2) = x, y
    return (s1 * s2, (t1 + s1 * t2) % l)


# configurations of the dihedral factors

@dataclass
class DihedralConfig:
    """Cursor and, for each factor s >= 1, a map site -> (sigma, t) of the
    non-identity lamps. Factor 0 carries no Phi block (k_0 = 0)."""
    ks: tuple
    ls: tuple
    cursor: int
    values: list                     # values[s] is a dict; values[0] unused
    range: int | None = None         # |Range|, when known
    length_upper: int | None = None  # metric upper bound, when known

    def copy(self) -> "DihedralConfig":
        return DihedralConfig(self.ks, self.ls, self.cursor, [dict(v) for v in self.values],
                              self.range, self.length_upper)


def _require_dihedral(spec: DiagGroupSpec):
    if spec.dihedral_ls is None:
        raise InvalidInput("the embedding needs a dihedral spec")


def identity_config(spec: DiagGroupSpec) -> DihedralConfig:
    _require_dihedral(spec)
    return DihedralConfig(spec.ks, spec.dihedral_ls, 0, [dict() for _ in spec.ks], 0, 0)


def config_from_element(spec: DiagGroupSpec, g: D.DiagElement) -> DihedralConfig:
    _require_dihedral(spec)
    vals = [dict()]
    for s in range(1, spec.n_factors):
        raw = spec.group(s).raw
        vals.append({x: tuple(raw[v]) for x, v in g.lamps[s]})
    return DihedralConfig(spec.ks, spec.dihedral_ls, g.cursor, vals, D.range_(spec, g),
                          delta_length_bounds(spec, g).upper)


def config_from_walk(run) -> DihedralConfig:
    """Final position of a switch-walk-switch run on a dihedral spec."""
    spec = run.spec
    _require_dihedral(spec)
    S = run.base_path
    fac = sim.active_factors(spec, S)
    vals = [dict()]
    for s in range(1, spec.n_factors):
        if s not in fac:
            vals.append({})
            continue
        sites, sg, t = sim.dihedral_values(S, run.ia, run.ib, spec.ks[s], spec.dihedral_ls[s])
        vals.append({int(x): (int(a), int(b)) for x, a, b in zip(sites, sg, t)})
    bounds, Rg = sim.bounds_from_lamps(spec, int(S[-1]), {s: run.lamps(s) for s in fac})
    return DihedralConfig(spec.ks, spec.dihedral_ls, int(S[-1]), vals, Rg, bounds.upper)


def config_mul(u: DihedralConfig, v: DihedralConfig) -> DihedralConfig:
    """(f, z)(f', z') = (f * f'(. - z), z + z') factor by factor."""
    out = u.copy()
    out.range = out.length_upper = None
    for s in range(1, len(u.ks)):
        l = u.ls[s]
        f = out.values[s]
        for x, g in v.values[s].items():
            y = x + u.cursor
            h = dmul(f.get(y, (1, 0)), g, l)
            if h == (1, 0):
                f.pop(y, None)
            else:
                f[y] = h
    out.cursor = u.cursor + v.cursor
    return out


def apply_generator(u: DihedralConfig, gen) -> DihedralConfig:
    """Right multiplication by tau^{+-1}, alpha (a at the cursor) or beta (b at
    cursor + k_s) in every factor. Index 0 of alpha/beta is the identity."""
    kind, arg = gen
    out = u.copy()
    out.range = out.length_upper = None
    if kind == TAU:
        out.cursor += int(arg)
        return out
    if arg == 0:
        return out
    for s in range(1, len(u.ks)):
        l = u.ls[s]
        y = u.cursor + (u.ks[s] if kind == BETA else 0)
        letter = (-1, 1 % l) if kind == BETA else (-1, 0)
        h = dmul(out.values[s].get(y, (1, 0)), letter, l)
        if h == (1, 0):
            out.values[s].pop(y, None)
        else:
            out.values[s][y] = h
    return out


def random_config(spec: DiagGroupSpec, rng: np.random.Generator, width: int = 16,
                  density: float = 0.5) -> DihedralConfig:
    """Independent uniform lamp values on a window around 0 in each factor
    (not an element of the diagonal product; enough for per-factor checks)."""
    _require_dihedral(spec)
    vals = [dict()]
    for s in range(1, spec.n_factors):
        l = spec.dihedral_ls[s]
        d = {}
        for x in range(-width, width + 1):
            if rng.random() < density:
                g = (int(rng.choice([-1, 1])), int(rng.integers(l)))
                if g != (1, 0):
                    d[x] = g
        vals.append(d)
    return DihedralConfig(spec.ks, spec.dihedral_ls, int(rng.integers(-width, width + 1)), vals)


# the embedding

def _lamp_arrays(u: DihedralConfig, s: int):
    items = sorted(u.values[s].items())
    x = np.array([a for a, _ in items], np.int64)
    sg = np.array([g[0] for _, g in items], np.int64)
    t = np.array([g[1] for _, g in items], np.int64)
    return x, sg, t


def factor_blocks(u: DihedralConfig, s: int, q: float, aligned: bool = True):
    """Phi_{s,q}(u) - Phi_{s,q}(e) with e the identity at cursor 0, as (sites,
    planar vectors) on a finite set of sites outside which the difference is 0.
    Unaligned, that set is the support of f_s; aligned, identity lamps also
    contribute where the weights around the cursor and around 0 differ."""
    k, l = u.ks[s], u.ls[s]
    lx, lsg, lt = _lamp_arrays(u, s)
    sites = lx
    if aligned and u.cursor != 0:
        z = u.cursor
        sites = np.union1d(lx, np.arange(min(0, z) - k // 2, max(0, z) + (3 * k) // 2 + 1))
    if len(sites) == 0:
        return np.zeros(0, np.int64), np.zeros((0, 2))
    sg = np.ones(len(sites), np.int64)
    t = np.zeros(len(sites), np.int64)
    if len(lx):
        pos = np.searchsorted(sites, lx)
        sg[pos], t[pos] = lsg, lt
    ca = theta_l_a(1, 0, l)
    cb = theta_l_b(1, 0, l, aligned)
    w = weight_ws(k, sites - u.cursor)[:, None]
    w0 = weight_ws(k, sites)[:, None]
    vec = w * theta_l_a(sg, t, l) + (1 - w) * theta_l_b(sg, t, l, aligned) \
        - (w0 * ca + (1 - w0) * cb)
    return sites, k ** (1.0 - 1.0 / q) * vec


def _blocks_power(sites, vec, q):
    return float(np.sum(np.linalg.norm(vec, axis=1) ** q)) if len(sites) else 0.0


def factor_norm(u: DihedralConfig, s: int, q: float, aligned: bool = True) -> float:
    return _blocks_power(*factor_blocks(u, s, q, aligned), q) ** (1.0 / q)


def factor_diff_norm(u: DihedralConfig, v: DihedralConfig, s: int, q: float,
                     aligned: bool = True) -> float:
    """||Phi_{s,q}(u) - Phi_{s,q}(v)||_q over the union of block sites."""
    su, vu = factor_blocks(u, s, q, aligned)
    sv, vv = factor_blocks(v, s, q, aligned)
    allx = np.union1d(su, sv)
    if len(allx) == 0:
        return 0.0
    acc = np.zeros((len(allx), 2))
    acc[np.searchsorted(allx, su)] += vu
    acc[np.searchsorted(allx, sv)] -= vv
    return float(np.sum(np.linalg.norm(acc, axis=1) ** q)) ** (1.0 / q)


def b_gamma_lower(R: int, gamma: GammaSpec) -> float:
    """max over j with R > 2^{j+2} of 2^j / (sqrt(3) gamma(j)); 0 if none."""
    if R <= 4:
        return 0.0
    jmax = math.floor(math.log2(R)) - 2
    while 2 ** (jmax + 2) >= R:
        jmax -= 1
    j = np.arange(0, jmax + 1)
    return float(np.max(2.0 ** j / (math.sqrt(3.0) * gamma(j))))


def b_gamma_upper(length_upper: int, gamma: GammaSpec) -> float:
    return math.sqrt(2.0 * gamma.C) * length_upper


@dataclass
class EmbeddingValue:
    phi_blocks: dict           # s -> (sites, vectors), centered at the identity
    b_gamma_lower: float
    b_gamma_upper: float
    q: float
    gamma: GammaSpec
    weights: dict = field(default_factory=dict)   # s -> 1/gamma(s)
    aligned: bool = True

    def phi_power(self) -> float:
        """||Phi part||_q^q = sum_s gamma(s)^{-q} sum_y |block|^q."""
        return sum(self.weights[s] ** self.q * _blocks_power(si, ve, self.q)
                   for s, (si, ve) in self.phi_blocks.items())

    def phi_norm(self) -> float:
        return self.phi_power() ** (1.0 / self.q)

    def norm_lower(self) -> float:
        return (self.phi_power() + self.b_gamma_lower ** self.q) ** (1.0 / self.q)

    def norm_upper(self) -> float:
        return (self.phi_power() + self.b_gamma_upper ** self.q) ** (1.0 / self.q)

    def to_json(self) -> dict:
        return {"q": self.q, "gamma_eps": self.gamma.eps, "C_gamma": self.gamma.C,
                "aligned": self.aligned,
                "phi_norm": self.phi_norm(), "phi_source": "exact blocks",
                "b_gamma_lower": self.b_gamma_lower, "b_gamma_upper": self.b_gamma_upper,
                "b_gamma_source": "disjoint-support lower bracket / Lipschitz upper bracket"}


def embed(u: DihedralConfig, gamma: GammaSpec = GammaSpec(), q: float = 2.0,
          aligned: bool = True, factors=None) -> EmbeddingValue:
    """factors restricts the Phi part to a subset of s; the omitted terms are
    nonnegative, so the norms stay valid lower brackets."""
    if q < 1:
        raise InvalidParameter("q must be >= 1")
    factors = range(1, len(u.ks)) if factors is None else factors
    blocks = {s: factor_blocks(u, s, q, aligned) for s in factors}
    weights = {s: 1.0 / float(gamma(s)) for s in blocks}
    lo = b_gamma_lower(u.range, gamma) if u.range is not None else 0.0
    hi = b_gamma_upper(u.length_upper, gamma) if u.length_upper is not None else math.inf
    return EmbeddingValue(blocks, lo, hi, q, gamma, weights, aligned)


def phi_diff_power(u: DihedralConfig, v: DihedralConfig, gamma: GammaSpec, q: float,
                   aligned: bool = True) -> float:
    return sum(float(gamma(s)) ** -q * factor_diff_norm(u, v, s, q, aligned) ** q
               for s in range(1, len(u.ks)))


# checks

def b_step_norm(gen, gamma: GammaSpec) -> float:
    """||b_gamma(s)|| for a generator: 1 on A and B letters, sqrt(2 C(gamma)) on tau."""
    kind, arg = gen
    if kind == TAU:
        return math.sqrt(2.0 * gamma.C)
    return 0.0 if arg == 0 else 1.0


def _sample_configs(spec: DiagGroupSpec, samples: int, seed: int, n: int = 200):
    return [config_from_walk(sim.run_sws(spec, n, seed, i)) for i in range(samples)]


def lipschitz_check(spec: DiagGroupSpec, gamma: GammaSpec = GammaSpec(), q: float = 2.0,
                    samples: int = 10_000, seed: int = 0, n: int = 64,
                    aligned: bool = True) -> dict:
    """Every generator increment of the full embedding obeys
    ||.||_q^q <= 2C(gamma) + (2C(gamma))^{q/2}; alpha and beta leave the Phi part
    unchanged and tau moves each factor by at most 2 in ||.||_q^q."""
    C = gamma.C
    bound = 2 * C + (2 * C) ** (q / 2)
    gens = [(ALPHA, i) for i in range(spec.size_A)] + [(BETA, j) for j in range(spec.size_B)] \
        + [(TAU, 1), (TAU, -1)]
    viol = {"total": 0, "switch_phi": 0, "tau_factor": 0}
    worst = {"total": 0.0, "switch_phi": 0.0, "tau_factor": 0.0}
    rng = np.random.default_rng(seed)
    base = _sample_configs(spec, min(samples, 64), seed, n)
    count = 0
    for i in range(samples):
        u = base[i % len(base)]
        if i >= len(base):
            # walk forward from a base sample to diversify cursors and lamps
            for _ in range(int(rng.integers(1, 8))):
                u = apply_generator(u, gens[int(rng.integers(len(gens)))])
        gen = gens[int(rng.integers(len(gens)))]
        v = apply_generator(u, gen)
        per = [factor_diff_norm(v, u, s, q, aligned) ** q for s in range(1, len(spec.ks))]
        phi = sum(float(gamma(s)) ** -q * p for s, p in enumerate(per, 1))
        total = phi + b_step_norm(gen, gamma) ** q
        worst["total"] = max(worst["total"], total)
        if total > bound * (1 + 1e-12):
            viol["total"] += 1
        if gen[0] != TAU:
            worst["switch_phi"] = max(worst["switch_phi"], phi)
            if phi > 1e-20:
                viol["switch_phi"] += 1
        else:
            m = max(per, default=0.0)
            worst["tau_factor"] = max(worst["tau_factor"], m)
            if m > 2 * (1 + 1e-12):
                viol["tau_factor"] += 1
        count += 1
    return {"cases": count, "bound": bound, "violations": viol, "worst": worst,
            "aligned": aligned, "ok": not any(viol.values())}


def increment_lower_check(spec: DiagGroupSpec, q: float = 2.0, pairs: int = 10_000,
                          seed: int = 0, width: int = 24, n: int = 256,
                          aligned: bool = True) -> dict:
    """||Phi_s(uv) - Phi_s(u)||_q >= ||Phi_s(v)||_q - 2^{1/q} for every factor
    s >= 1. Even pairs are walk endpoints (elements of the diagonal product),
    odd pairs are independent random lamp configurations."""
    rng = np.random.default_rng(seed)
    pool = _sample_configs(spec, 64, seed, n)
    viol = 0
    margin = math.inf
    cases = 0
    example = None
    for i in range(pairs):
        if i % 2 == 0:
            u = pool[int(rng.integers(len(pool)))]
            v = pool[int(rng.integers(len(pool)))]
        else:
            u = random_config(spec, rng, width)
            v = random_config(spec, rng, width, density=float(rng.uniform(0.05, 1.0)))
        uv = config_mul(u, v)
        for s in range(1, len(spec.ks)):
            lhs = factor_diff_norm(uv, u, s, q, aligned)
            rhs = factor_norm(v, s, q, aligned) - 2.0 ** (1.0 / q)
            if lhs - rhs < margin:
                margin = lhs - rhs
            if lhs < rhs - 1e-9 * max(1.0, abs(rhs)):
                viol += 1
                if example is None:
                    example = {"pair": i, "s": s, "lhs": lhs, "rhs": rhs}
            cases += 1
    return {"pairs": pairs, "cases": cases, "violations": viol, "min_margin": margin,
            "first_violation": example, "aligned": aligned, "ok": viol == 0}


def compression_probe(spec: DiagGroupSpec, gamma: GammaSpec = GammaSpec(), q: float = 2.0,
                      n_grid=(2**8, 2**10, 2**12, 2**14, 2**16), samples: int = 20,
                      seed: int = 0, aligned: bool = True) -> dict:
    """Lower bracket of ||Phi_{gamma,q}(W_n)|| against the metric upper bound of
    |W_n| on sampled walk endpoints; the log-log slope of the per-n means is an
    empirical lower indication of the compression exponent."""
    from .walks.sim import fit_exponent
    rows = []
    for n in n_grid:
        num, den = [], []
        for i in range(samples):
            run = sim.run_sws(spec, int(n), seed, i)
            u = config_from_walk(run)
            # factors beyond the walk's span only see the cursor shift; skipping
            # them keeps a lower bracket
            e = embed(u, gamma, q, aligned, [s for s in sim.active_factors(spec, run.base_path) if s])
            num.append(e.norm_lower())
            den.append(u.length_upper)
        rows.append({"n": int(n), "embed_lower": float(np.mean(num)),
                     "length_upper": float(np.mean(den))})
    fit = fit_exponent([r["length_upper"] for r in rows], [r["embed_lower"] for r in rows])
    return {"rows": rows, "exponent": fit["slope"], "fit": fit,
            "source": "exact Phi blocks + b_gamma lower bracket over metric upper bound"}


def block_family_probe(spec: DiagGroupSpec, q: float = 2.0, aligned: bool = True) -> dict:
    """v in Pi_s^{k_s/2}: the farthest rotation (ab)^{l_s/2} at every site of
    [0, k_s/2) in factor s (with its shadows trivial, as in the kernel). Reports
    ||Phi_s(v)||_q / (k_s/2 * |v_s|) per s."""
    rows = []
    for s in range(1, spec.n_factors):
        k, l = spec.ks[s], spec.dihedral_ls[s]
        u = identity_config(spec)
        rot = (1, l // 2)        # cycle position l: the antipode
        for x in range(k // 2):
            u.values[s][x] = rot
        norm = factor_norm(u, s, q, aligned)
        size = (k // 2) * l
        rows.append({"s": s, "k": k, "l": l, "phi_norm": norm, "block_size": size,
                     "ratio": norm / size})
    return {"rows": rows}


# H wr Z with a per-lamp embedder

def tsp_length(sites, z: int) -> int:
    """Shortest path on Z from 0 through every site, ending at z."""
    pts = list(sites) + [0, z]
    L, R = min(pts), max(pts)
    return min(-L + (R - L) + abs(R - z), R + (R - L) + abs(L - z))


def hwrz_components(f: dict, z: int, l: int, gamma: GammaSpec = GammaSpec(), p: float = 2.0) -> dict:
    """Components of Phi(g) = b_gamma(g) + Xi(g) for g = (f, z) in D_{2l} wr Z with
    the polygon embedding theta_l at each site. f maps sites to (sigma, t)."""
    from .groups import dihedral_length
    items = [(x, g) for x, g in f.items() if tuple(g) != (1, 0)]
    if items:
        sg = np.array([g[0] for _, g in items])
        t = np.array([g[1] for _, g in items])
        diff = theta_l(sg, t, l) - theta_l(1, 0, l)
        xi = float(np.sum(np.linalg.norm(diff, axis=1) ** p)) ** (1.0 / p)
        lamp_len = int(np.sum(dihedral_length(sg, t, l)))
    else:
        xi, lamp_len = 0.0, 0
    w = tsp_length([x for x, _ in items], z)
    b_lo = w / (8.0 * float(gamma(math.log2(w)))) if w > 1 else 0.0
    length = w + lamp_len
    b_hi = (2.0 * gamma.C_p(p)) ** (1.0 / p) * length
    return {"xi": xi, "omega": w, "b_lower": b_lo, "b_upper": b_hi, "length": length,
            "norm_lower": (xi ** p + b_lo ** p) ** (1.0 / p)}


def hwrz_probe(l: int, t_list, gamma: GammaSpec = GammaSpec(), p: float = 2.0) -> dict:
    """Elements with rotations of length ~2 sqrt(t) at t consecutive sites (the
    balanced family for H = D_{2l} with l large); slope of log norm vs log length."""
    from .walks.sim import fit_exponent
    rows = []
    for t in t_list:
        m = max(1, int(round(math.sqrt(t))))
        if 2 * m > l:
            raise InvalidParameter("l too small for the requested t")
        f = {x: (1, (-m) % l) for x in range(t)}
        c = hwrz_components(f, 0, l, gamma, p)
        rows.append({"t": t, "length": c["length"], "norm_lower": c["norm_lower"]})
    fit = fit_exponent([r["length"] for r in rows], [r["norm_lower"] for r in rows])
    return {"rows": rows, "exponent": fit["slope"], "fit": fit}


# exponent formulas (exact for Fraction inputs)

def _frac(x):
    return Fraction(x) if isinstance(x, (int, Fraction)) else x


def alpha_wreath(p, alpha_H):
    """min{alpha / (alpha + 1 - 1/p), alpha}; alpha_H = 0 gives 0."""
    p, a = _frac(p), _frac(alpha_H)
    if not 1 <= p <= 2 or not 0 <= a <= 1:
        raise InvalidParameter("need p in [1, 2] and alpha in [0, 1]")
    if a == 0:
        return a
    return min(a / (a + 1 - 1 / p), a)


def alpha_dihedral(p, theta):
    """p in [1, 2]: max{1/(1+theta), 2/3}. q > 2: 1/(1+theta) if theta <= 1/q,
    else the bracket (max{lower, 2/3}, upper)."""
    p = _frac(p)
    if p < 1:
        raise InvalidParameter("need p >= 1")
    inf = isinstance(theta, float) and math.isinf(theta)
    th = None if inf else _frac(theta)
    two3 = Fraction(2, 3) if isinstance(p, Fraction) and (inf or isinstance(th, Fraction)) else 2 / 3
    if p <= 2:
        return two3 if inf else max(1 / (1 + th), two3)
    q = p
    if not inf and th <= 1 / q:
        return 1 / (1 + th)
    if inf:
        return (max(1 / (2 - 1 / q), two3), two3)
    lower = (th + 1 - 2 / q) / ((2 - 1 / q) * th + 1 - 2 / q)
    upper = (2 * th + 1 - 2 / q) / (3 * th + 1 - 2 / q)
    return (max(lower, two3), upper)


def figure_table(family: str, theta, p=2) -> dict:
    """Exponents of E|W_n|, H(W_n), -log mu^{2n}(e), Lambda_p o exp and alpha_p^#
    for k_s = 2^{2s}, l_s ~ 2^{2 theta s}."""
    th, p = _frac(theta), _frac(p)
    if not th > 0:
        raise InvalidParameter("theta must be positive")
    if family == "expanders":
        return {"speed": (1 + th) / (2 + th), "entropy": (1 + th) / (2 + th),
                "return": (1 + th) / (3 + th), "profile": -p / (1 + th),
                "compression": 1 / (1 + th)}
    if family == "dihedral":
        half = Fraction(1, 2) if isinstance(th, Fraction) else 0.5
        third = Fraction(1, 3) if isinstance(th, Fraction) else 1 / 3
        return {"speed": (1 + 3 * th) / (2 + 4 * th), "entropy": half, "return": third,
                "profile": -p, "compression": alpha_dihedral(min(p, 2), th)}
    raise InvalidParameter(f"unknown family {family}")


def c_increment_constant(gamma: GammaSpec, q: float) -> float:
    """The constant (2^{2+q} C(gamma))^{-1/q} of the increment comparison."""
    return (2.0 ** (2 + q) * gamma.C) ** (-1.0 / q)
