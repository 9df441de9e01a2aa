"""Approximation of prescribed growth functions by the piecewise constant/linear
functions built from parameter sequences (k_s), (l_s), snapping to admissible
value sets, and experiment plans derived from them."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ClassViolation, DensityError, DomainExceeded, InvalidParameter

INF = math.inf
REL_TOL = 1e-9
X_MAX = 1e12


# target functions

@dataclass
class TargetFunction:
    """A function on [1, inf): either a closed form or a grid of (x, f(x)) pairs
    interpolated linearly in log-log coordinates."""
    fn: Callable[[float], float] | None = None
    grid_x: np.ndarray | None = None
    grid_y: np.ndarray | None = None
    name: str = "f"

    def __post_init__(self):
        if self.fn is None:
            if self.grid_x is None or self.grid_y is None:
                raise InvalidParameter("need a closed form or a grid")
            self.grid_x = np.asarray(self.grid_x, float)
            self.grid_y = np.asarray(self.grid_y, float)
            if np.any(np.diff(self.grid_x) <= 0) or self.grid_x[0] > 1 or np.any(self.grid_y <= 0):
                raise InvalidParameter("grid must be strictly increasing, start at 1, positive")
            self._lx, self._ly = np.log(self.grid_x), np.log(self.grid_y)

    @classmethod
    def expr(cls, text: str) -> "TargetFunction":
        """Closed form from an expression in x using numpy names (sqrt, log, exp, ...)."""
        ns = {k: getattr(np, k) for k in ("sqrt", "log", "log2", "log1p", "exp", "e", "pi")}
        code = compile(text, "<target>", "eval")
        return cls(fn=lambda x: float(eval(code, {"__builtins__": {}}, dict(ns, x=x))), name=text)

    @property
    def x_max(self) -> float:
        return INF if self.fn is not None else float(self.grid_x[-1])

    def __call__(self, x: float) -> float:
        if self.fn is not None:
            return float(self.fn(x))
        if x > self.grid_x[-1] * (1 + 1e-12):
            raise DomainExceeded(f"x = {x} beyond the grid")
        return float(np.exp(np.interp(math.log(x), self._lx, self._ly)))

    def values(self, xs) -> np.ndarray:
        return np.array([self(float(x)) for x in xs])


def membership(f: TargetFunction, p1: float, p2: float, xs=None, tol: float = 1e-9) -> dict:
    """Check f(1) = 1, f / x^{p1} nondecreasing and f / x^{p2} nonincreasing
    (equivalently a^{p1} f(x) <= f(ax) <= a^{p2} f(x)) on a log grid."""
    if xs is None:
        xs = log_grid(1.0, min(f.x_max, X_MAX), 4000)
    y = f.values(xs)
    lx, ly = np.log(xs), np.log(y)
    d1 = np.diff(ly - p1 * lx)
    d2 = np.diff(ly - p2 * lx)
    bad = []
    if abs(y[0] - 1) > tol:
        bad.append("f(1) != 1")
    if np.any(d1 < -tol):
        bad.append(f"f/x^{p1} decreases near x = {xs[1:][d1 < -tol][0]:.6g}")
    if np.any(d2 > tol):
        bad.append(f"f/x^{p2} increases near x = {xs[1:][d2 > tol][0]:.6g}")
    return {"ok": not bad, "violations": bad}


def log_grid(a: float, b: float, n: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(a), math.log(b), n))


# parameter sequences

@dataclass
class PiecewiseParams:
    ks: list
    ls: list
    m0: float
    cases: list = field(default_factory=list)   # "I", "II", "I-terminal", "II-terminal"
    log_violations: list | None = None

    def validate(self):
        for s in range(len(self.ks) - 1):
            for seq, nm in ((self.ks, "k"), (self.ls, "l")):
                if math.isinf(self.ks[s + 1]) or math.isinf(self.ls[s + 1]):
                    continue
                a, b = seq[s], seq[s + 1]
                if math.isfinite(a) and math.isfinite(b) and b < self.m0 * a * (1 - 1e-12):
                    raise InvalidParameter(f"{nm}_{s + 1} < m0 {nm}_{s}")
        if sum(1 for v in (self.ks[-1], self.ls[-1]) if math.isinf(v)) > 1:
            raise InvalidParameter("at most one final entry may be infinite")
        return self

    def to_json(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else v
        return {"k": [enc(v) for v in self.ks], "l": [enc(v) for v in self.ls], "m0": self.m0,
                "cases": self.cases}

    @classmethod
    def from_json(cls, obj) -> "PiecewiseParams":
        dec = lambda v: INF if v == "inf" else v
        return cls([dec(v) for v in obj["k"]], [dec(v) for v in obj["l"]], obj["m0"],
                   obj.get("cases", []))


def _first_true(pred, lo: float, cap: float):
    """Smallest y in [lo, cap] with pred(y), for pred monotone false -> true; None if none."""
    if pred(lo):
        return lo
    hi = lo * 2
    while not pred(hi):
        if hi >= cap:
            return None
        lo, hi = hi, min(hi * 2, cap)
        if lo == cap:
            return None
    while hi - lo > REL_TOL * lo:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def approximate(f: TargetFunction, m0: float, x_max: float = X_MAX, check: bool = True,
                log_alpha: tuple | None = None) -> PiecewiseParams:
    """Sequences (k_s), (l_s) with f~ within a factor m0 of f on [1, x_max].

    From (k_s, l_s) with f(k_s l_s) = l_s, take the least y >= m0^2 k_s l_s with
    m0 l_s <= f(y) <= y / (m0 k_s). If f(y) = y / (m0 k_s) (Case I, also on ties)
    set k_{s+1} = m0 k_s, l_{s+1} = y / (m0 k_s); otherwise (Case II)
    l_{s+1} = m0 l_s, k_{s+1} = y / (m0 l_s). Without such y the family ends
    with an infinite entry."""
    if m0 <= 1:
        raise InvalidParameter("m0 must exceed 1")
    if check:
        rep = membership(f, 0.0, 1.0, log_grid(1.0, min(x_max, f.x_max), 4000))
        if not rep["ok"]:
            raise ClassViolation("; ".join(rep["violations"]))
        if log_alpha is not None:
            alpha, alpha0 = log_alpha
            if not alpha > alpha0:
                raise InvalidParameter("need alpha > alpha0")
            xs = log_grid(math.e, min(x_max, f.x_max), 4000)
            r = np.log(f.values(xs)) - alpha * np.log(np.log(xs))
            if np.any(np.diff(r) < -1e-9):
                raise ClassViolation(f"f / log^{alpha} is not nondecreasing")
    cap = min(f.x_max, x_max * m0 * m0)
    if cap < x_max:
        raise DomainExceeded(f"target known only up to {f.x_max}")
    ks, ls, cases = [1.0], [1.0], []
    while True:
        k, l = ks[-1], ls[-1]
        if k * l >= x_max:
            break
        y0 = m0 * m0 * k * l
        # both conditions are monotone in y: f nondecreasing, f(y)/y nonincreasing
        y1 = _first_true(lambda y: f(y) >= m0 * l * (1 - REL_TOL), y0, cap)
        y2 = _first_true(lambda y: f(y) <= y / (m0 * k) * (1 + REL_TOL), y0, cap)
        if y2 is None:
            # also taken when y1 is missing too: the tie goes to Case I
            ks.append(m0 * k), ls.append(INF), cases.append("I-terminal")
            break
        if y1 is None:
            ks.append(INF), ls.append(l), cases.append("II-terminal")
            break
        y = max(y1, y2)
        if y2 >= y1:
            ks.append(m0 * k), ls.append(y / (m0 * k)), cases.append("I")
        else:
            ls.append(m0 * l), ks.append(y / (m0 * l)), cases.append("II")
    out = PiecewiseParams(ks, ls, m0, cases).validate()
    if log_alpha is not None:
        out.log_violations = log_constraint_violations(out, log_alpha[1])
    return out


def log_constraint_violations(params: PiecewiseParams, alpha0: float) -> list:
    """Indices s with log k_s > l_s^{1/alpha0} (finite entries only)."""
    return [s for s, (k, l) in enumerate(zip(params.ks, params.ls))
            if math.isfinite(k) and math.isfinite(l) and math.log(k) > l ** (1 / alpha0)]


# evaluation

def _segment(params: PiecewiseParams, x: float) -> int:
    ks, ls = params.ks, params.ls
    if x < 1 - 1e-12:
        raise DomainExceeded(f"x = {x} below 1")
    # below the first knot (after snapping l_0 up) f~ stays at l_0
    for s in range(len(ks) - 1):
        if x <= ks[s + 1] * ls[s + 1]:
            return s
    return len(ks) - 1


def f_tilde(params: PiecewiseParams, x: float) -> float:
    s = _segment(params, x)
    ks, ls = params.ks, params.ls
    if s + 1 >= len(ks):
        return ls[s]
    k1 = ks[s + 1]
    if x <= k1 * ls[s]:
        return ls[s]
    return x / k1


def f_bar(params: PiecewiseParams, x: float) -> float:
    s = _segment(params, x)
    k1 = params.ks[s + 1] if s + 1 < len(params.ks) else INF
    return params.ls[s] + x / k1


def rho_bar(params: PiecewiseParams, x: float, p1: float, p2: float) -> float:
    """x^{p1} l_s + x^{p2} / k_{s+1} on the segment containing x^{p2 - p1}."""
    y = x ** (p2 - p1)
    s = _segment(params, y)
    k1 = params.ks[s + 1] if s + 1 < len(params.ks) else INF
    return x ** p1 * params.ls[s] + x ** p2 / k1


def eval_piecewise(params: PiecewiseParams, x: float, kind: str = "tilde", p1=0.0, p2=1.0):
    if kind == "tilde":
        return f_tilde(params, x)
    if kind == "bar":
        return f_bar(params, x)
    if kind == "rho":
        return rho_bar(params, x, p1, p2)
    raise InvalidParameter(f"unknown kind {kind}")


def max_grid_ratio(params: PiecewiseParams, f: TargetFunction, xs, kind: str = "tilde") -> float:
    """max over the grid of max(g/f, f/g) for g = f~ or f-bar."""
    g = np.array([eval_piecewise(params, float(x), kind) for x in xs])
    y = f.values(xs)
    return float(np.max(np.maximum(g / y, y / g)))


# admissible value sets

class AdmissibleSet:
    """Values allowed for k_s or l_s. kind: "integers", "even", "pow2", or an
    explicit sorted list. inf is always admissible."""

    def __init__(self, kind="integers", values: Sequence | None = None):
        self.kind = kind
        self.values = sorted(values) if values is not None else None

    def candidates(self, x: float) -> list:
        if self.values is not None:
            i = bisect_left(self.values, x)
            return [self.values[j] for j in (i - 1, i) if 0 <= j < len(self.values)]
        if self.kind == "integers":
            return [max(1, math.floor(x)), max(1, math.ceil(x))]
        if self.kind == "even":
            return [max(2, 2 * math.floor(x / 2)), max(2, 2 * math.ceil(x / 2))]
        if self.kind == "pow2":
            e = math.log2(x)
            return [2 ** max(0, math.floor(e)), 2 ** max(0, math.ceil(e))]
        raise InvalidParameter(f"unknown admissible set {self.kind}")

    def nearest(self, x: float):
        if math.isinf(x):
            return INF
        return min(self.candidates(x), key=lambda v: (abs(math.log(v / x)), v))


def quantize(f: TargetFunction, m0: float, K: AdmissibleSet, L: AdmissibleSet, C1: float,
             x_max: float = X_MAX, check: bool = True) -> tuple[PiecewiseParams, PiecewiseParams]:
    """Approximate with m0' = C1^2 m0 and snap each entry to K, L. Returns
    (raw, snapped); the snapped sequences grow by at least m0 and f~ of the
    snapped sequences is within m0 C1^5 of f."""
    raw = approximate(f, C1 * C1 * m0, x_max, check)
    ks, ls = [], []
    for s, (k, l) in enumerate(zip(raw.ks, raw.ls)):
        k2, l2 = K.nearest(k), L.nearest(l)
        for a, b, nm in ((k, k2, "k"), (l, l2, "l")):
            if math.isfinite(a) and not (a / C1 * (1 - 1e-12) <= b <= a * C1 * (1 + 1e-12)):
                raise DensityError(f"no admissible {nm} within factor {C1} of {a:.6g} ({nm}_{s})")
        ks.append(k2), ls.append(l2)
    snapped = PiecewiseParams(ks, ls, m0, list(raw.cases))
    snapped.validate()
    return raw, snapped


# change of exponents

def transform(f: TargetFunction, p1: float, p2: float) -> TargetFunction:
    """T f(x) = x^{p1} f(x^{p2 - p1}), a bijection from C_{0,1} onto C_{p1,p2}."""
    if not p2 > p1 >= 0:
        raise InvalidParameter("need p2 > p1 >= 0")
    return TargetFunction(fn=lambda x: x ** p1 * f(x ** (p2 - p1)), name=f"T[{f.name}]")


def inverse_transform(rho: TargetFunction, p1: float, p2: float) -> TargetFunction:
    """f(y) = rho(y^{1/(p2-p1)}) / y^{p1/(p2-p1)}."""
    if not p2 > p1 >= 0:
        raise InvalidParameter("need p2 > p1 >= 0")
    d = p2 - p1
    return TargetFunction(fn=lambda y: rho(y ** (1 / d)) / y ** (p1 / d), name=f"Tinv[{rho.name}]")


# exponent inversion for the tabulated families; k_s = 4^s throughout

def theta_for_speed_linear(e: float):
    """Solve (1 + theta)/(2 + theta) = e; None outside (1/2, 1).

    This exponent belongs to l_s = 2^{theta s}; with l_s = 4^{theta s} the
    linear-speed predictor gives (1 + 2 theta)/(2 + 2 theta) instead."""
    return (2 * e - 1) / (1 - e) if 0.5 <= e < 1 else None


def theta_for_speed_dihedral(e: float):
    """Solve (1 + 3 theta)/(2 + 4 theta) = e for l_s = 4^{theta s}; None outside [1/2, 3/4)."""
    return (1 - 2 * e) / (4 * e - 3) if 0.5 <= e < 0.75 else None


# plans

def _k_from_kappa(kappa: float) -> float:
    """Solve k / log k = kappa^2 for k >= e."""
    t = max(kappa * kappa, math.e)
    lo, hi = math.e, max(math.e * 2, 2 * t * math.log(t) + 10)
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if mid / math.log(mid) < t:
            lo = mid
        else:
            hi = mid
    return hi


def _dihedral_spec_json(ks: list, ls: list) -> dict:
    """Finite dihedral spec: k_0 = 0, even k with k_{s+1} > 2 k_s, even l >= 2;
    stops at the first infinite entry."""
    k_out, l_out = [0], [2]
    for k, l in zip(ks[1:], ls[1:]):
        if math.isinf(k) or math.isinf(l):
            break
        k2 = max(2, 2 * round(k / 2))
        l2 = max(2, 2 * round(l / 2))
        if k2 <= 2 * k_out[-1]:
            raise InvalidParameter("k_s do not grow by more than 2; use a larger m0")
        k_out.append(int(k2)), l_out.append(int(l2))
    return {"family": "dihedral", "k": k_out, "l": l_out}


def plan(target: str, fn: TargetFunction, m0: float = 3.0, K: AdmissibleSet | None = None,
         L: AdmissibleSet | None = None, C1: float = 2.0, p: float = 2.0,
         x_max: float | None = None, family: str = "dihedral") -> dict:
    """Experiment plan for a prescribed speed, profile, return or compression target.

    x_max bounds the planned range of n; the speed plans default to 1e24 because
    the sequences only see x^{p2 - p1} of it."""
    if x_max is None:
        x_max = 1e24 if target == "speed" else 1e8
    K = K or AdmissibleSet("even")
    L = L or AdmissibleSet("even")
    flags = []
    out = {"target": target, "fn": fn.name, "m0": m0, "C1": C1}
    if target == "speed":
        if family == "dihedral":
            p1, p2 = 0.5, 0.75
            # the regularity condition is asymptotic; test it on the upper half of the range
            xs = log_grid(math.sqrt(x_max), x_max, 200)
            r = np.log(fn.values(xs)) - 0.5 * np.log(xs) - 1.01 * np.log(np.log(xs))
            if np.any(np.diff(r) < -1e-9):
                flags.append("rho / (sqrt(x) log^{1+eps} x) not nondecreasing")
        else:
            p1, p2 = 0.5, 1.0
        rep = membership(fn, p1, p2, log_grid(1.0, x_max, 2000))
        if not rep["ok"]:
            raise ClassViolation("; ".join(rep["violations"]))
        f = inverse_transform(fn, p1, p2)
        raw, q = quantize(f, m0, K if family != "dihedral" else AdmissibleSet("integers"), L, C1,
                          x_max ** (p2 - p1))
        if family == "dihedral":
            # the sequence plays the role of kappa_s = (k_s / log k_s)^{1/2}
            ks = [0.0] + [_k_from_kappa(k) if math.isfinite(k) else INF for k in q.ks[1:]]
            out["spec"] = _dihedral_spec_json(ks, q.ls)
        else:
            out["spec"] = {"family": "expander", "k": [0] + q.to_json()["k"][1:],
                           "l": q.to_json()["l"]}
        out["params"] = q.to_json()
        ns = log_grid(16, x_max, 12)
        out["predicted"] = [[float(n), rho_bar(q, float(n), p1, p2)] for n in ns]
        out["recipe"] = {"command": "simulate speed", "n": [int(2 ** round(math.log2(n))) for n in ns
                                                              if n <= 2**18],
                         "samples": 100, "seed": 0}
        e = float(np.polyfit(np.log(ns), np.log([v for _, v in out["predicted"]]), 1)[0])
        th = theta_for_speed_dihedral(e) if family == "dihedral" else theta_for_speed_linear(e)
        y_hi = x_max ** (p2 - p1)
        if abs(f(y_hi) / y_hi - f(math.sqrt(y_hi)) / math.sqrt(y_hi)) <= 1e-9 * f(y_hi) / y_hi:
            # f linear: rho = x^{p2} itself
            th = INF
            flags.append("f linear: upper boundary of the family, theta -> infinity")
        elif th is None:
            flags.append(f"fitted exponent {e:.4g} at the boundary of the {family} family")
        out["exponent"], out["theta"] = e, th
    elif target == "profile":
        # rho(x) = (x / f(x))^p with f in C_{0,1}
        f = TargetFunction(fn=lambda x: x / fn(x) ** (1 / p), name=f"x/({fn.name})^(1/{p})")
        raw, q = quantize(f, m0, K, L, C1, x_max)
        out["params"] = q.to_json()
        out["spec"] = {"family": "expander", "k": [0] + q.to_json()["k"][1:],
                       "ell": q.to_json()["l"]}
        xs = log_grid(2, x_max, 12)
        out["predicted"] = [[float(x), (f_tilde(q, float(x)) / x) ** p] for x in xs]
    elif target == "return":
        xs = log_grid(1, x_max, 2000)
        g = fn.values(xs)
        lx, lg = np.log(xs), np.log(g)
        if np.any(np.diff(lg - lx / 3) < -1e-9) or np.any(np.diff(lx - lg) < -1e-9):
            raise ClassViolation("gamma(n)/n^{1/3} and n/gamma(n) must be nondecreasing")
        if np.allclose(np.diff(lg - lx / 3), 0, atol=1e-9):
            flags.append("gamma(n) = n^{1/3}: lower boundary of the class, constant profile regime")
        # rho(x) = gamma^{-1}(x) / x, then the profile plan with p = 2
        inv = lambda y: float(np.exp(np.interp(math.log(y), lg, lx)))
        rho = TargetFunction(fn=lambda y: inv(y) / y if y > 1 else 1.0, name=f"gamma^-1/x")
        sub = plan("profile", rho, m0, K, L, C1, 2.0, min(x_max, float(g[-1])), family)
        out.update({k: v for k, v in sub.items() if k in ("params", "spec", "predicted")})
    elif target == "compression":
        out["gamma"] = {"eps": 0.5, "C": None}
        flags.append("compression plans only fix gamma; factor families are predictor-only")
    else:
        raise InvalidParameter(f"unknown target {target}")
    out["flags"] = flags
    return out
