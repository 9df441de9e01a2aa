"""Closed-form speed and entropy predictors, up to multiplicative constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidParameter

INF = math.inf


@dataclass(frozen=True)
class SeqParams:
    """Parameter sequences (k_s), (l_s); a trailing inf in k ends the family."""
    ks: tuple
    ls: tuple

    def __post_init__(self):
        if len(self.ks) != len(self.ls) or not self.ks:
            raise InvalidParameter("k and l must have the same nonzero length")
        if self.ks[0] != 0:
            raise InvalidParameter("k_0 must be 0")

    @classmethod
    def geometric(cls, beta: float, iota: float, count: int, l0: float = 1.0) -> "SeqParams":
        """k_s = 2^{beta s}, l_s = 2^{iota s} (k_0 = 0, l_0 = l0)."""
        return cls(tuple([0] + [2.0 ** (beta * s) for s in range(1, count)]),
                   tuple([l0] + [2.0 ** (iota * s) for s in range(1, count)]))

    def k(self, s: int) -> float:
        return self.ks[s] if s < len(self.ks) else INF

    def l(self, s: int) -> float:
        return self.ls[s] if s < len(self.ls) else INF


def s0_index(p: SeqParams, n: float) -> int:
    """min{s : k_s^2 >= n}; len(ks) if none."""
    return next((s for s, k in enumerate(p.ks) if k * k >= n), len(p.ks))


def s1_index(p: SeqParams, n: float) -> int:
    """max{s >= 0 : sqrt(n) >= k_s l_s}."""
    r = math.sqrt(n)
    return max(s for s in range(len(p.ks)) if p.ks[s] * p.ls[s] <= r)


def predict_speed_linear(p: SeqParams, n: float) -> float:
    """sqrt(n) l_{s1} + n / k_{s1+1}, for factor groups with linear speed."""
    s1 = s1_index(p, n)
    return math.sqrt(n) * p.l(s1) + n / p.k(s1 + 1)


def t1_index(p: SeqParams, n: float) -> int:
    """max{s : l_s^2 k_s / log k_s < sqrt(n) and l_s k_s < sqrt(n)}; s = 0 always counts."""
    r = math.sqrt(n)
    best = 0
    for s in range(1, len(p.ks)):
        k, l = p.ks[s], p.ls[s]
        if k <= 1 or math.isinf(k):
            continue
        if l * l * k / math.log(k) < r and l * k < r:
            best = s
    return best


def predict_speed_dihedral(p: SeqParams, n: float) -> float:
    """sqrt(n) (l_{t1} + min{n^{1/4} (log k / k)^{1/2}, sqrt(n)/k}) with k = k_{t1+1}."""
    t1 = t1_index(p, n)
    k = p.k(t1 + 1)
    extra = 0.0 if math.isinf(k) else min(n ** 0.25 * math.sqrt(math.log(k) / k), math.sqrt(n) / k)
    return math.sqrt(n) * (p.l(t1) + extra)


def predict_entropy_dihedral(n: float) -> tuple[float, float]:
    """(sqrt(n), sqrt(n) log^2 n): the entropy sandwich up to constants."""
    r = math.sqrt(n)
    return r, r * math.log(n) ** 2 if n > 1 else r
