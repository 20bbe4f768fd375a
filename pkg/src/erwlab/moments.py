"""Exact finite-n moments of S_n, limit moments of L, and the exact pmf.

The linear recursions for E[S_n^k] are canonical: they have no singular
denominators. The gamma-function closed forms are cross-checks and refuse
to evaluate near their removable singularities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._dd import moment_sequences
from .errors import DomainError, InvalidStateError
from .special import RegimeTag, classify_regime, poch, rgamma
from .walk import check_state, step_probability

__all__ = [
    "MomentVector",
    "LimitMoments",
    "RegimeTag",
    "classify_regime",
    "exact_moments",
    "moment_table",
    "closed_form_moment",
    "limit_moments",
    "enumerate_distribution",
    "pmf_moments",
    "conditional_eps_moments",
    "SINGULAR_EPS",
    "symmetric_kurtosis",
]

SINGULAR_EPS = 1e-6


@dataclass(frozen=True)
class MomentVector:
    n: int
    m1: float
    m2: float
    m3: float
    m4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.m1, self.m2, self.m3, self.m4)

    @property
    def variance(self) -> float:
        return self.m2 - self.m1 * self.m1


def _check_probs(p: float, q: float) -> None:
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise DomainError(f"p and q must lie in [0, 1], got p={p}, q={q}")


def moment_table(n: int, p: float, q: float) -> np.ndarray:
    """Array of shape (n, 4); row k-1 holds E[S_k], ..., E[S_k^4]."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    _check_probs(p, q)
    return moment_sequences(2.0 * p - 1.0, 2.0 * q - 1.0, n)


def exact_moments(n: int, p: float, q: float) -> MomentVector:
    row = moment_table(n, p, q)[-1]
    return MomentVector(n, *(float(x) for x in row))


def _binomial_ratio(m: int, c: float) -> float:
    """(c)_m / m! = Γ(m+c) / (Γ(m+1) Γ(c)), finite for every real c."""
    if c <= 0.0 and c == math.floor(c):
        if m > -c:
            return 0.0
        out = 1.0
        for j in range(m):
            out *= (c + j) / (j + 1)
        return out
    return poch(m + 1.0, c - 1.0) * rgamma(c)


def _require_away(value: float, what: str) -> None:
    if abs(value) <= SINGULAR_EPS:
        raise DomainError(
            f"closed form is singular here ({what} = {value:.3g}); use exact_moments"
        )


def closed_form_moment(k: int, n: int, p: float, q: float) -> float:
    """E[S_n^k], k = 1..4, from the gamma-function closed forms."""
    if k not in (1, 2, 3, 4):
        raise DomainError(f"moment order must be 1..4, got {k}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    _check_probs(p, q)
    a = 2.0 * p - 1.0
    b = 2.0 * q - 1.0
    if k == 1:
        if p <= 0.0:
            raise DomainError("the first-moment closed form needs p > 0; use exact_moments")
        return b * _binomial_ratio(n - 1, a + 1.0)
    _require_away(4.0 * p - 3.0, "4p-3")
    if k == 2:
        return n / (2.0 * a - 1.0) * (_binomial_ratio(n, 2.0 * a) - 1.0)
    if k == 3:
        _require_away(a, "2p-1")
        return b / (2.0 * a - 1.0) * (
            3.0 * (a + 1.0) * _binomial_ratio(n - 1, 3.0 * a + 1.0)
            - (3.0 * n + a + 1.0) * _binomial_ratio(n - 1, a + 1.0)
        )
    _require_away(8.0 * p - 5.0, "8p-5")
    d1 = 2.0 * a - 1.0
    d2 = 4.0 * a - 1.0
    lead = 24.0 * a * (2.0 * a * (a + 1.0) - 1.0) / (d1 * d1 * d2)
    rest = (
        2.0 * (3.0 * n + 2.0 * (a + 1.0)) * 2.0 * a * _binomial_ratio(n - 1, 2.0 * a + 1.0)
        - n * (3.0 * n * d2 + 2.0 * (2.0 * a * a + 1.0)) / d2
    )
    return lead * _binomial_ratio(n - 1, 4.0 * a + 1.0) - rest / (d1 * d1)


@dataclass(frozen=True)
class LimitMoments:
    """Raw moments e1..e4 of L = lim S_n / n^(2p-1) and derived shape numbers."""

    p: float
    q: float
    e1: float
    e2: float
    e3: float
    e4: float

    @property
    def mu(self) -> float:
        return self.e1

    @property
    def sigma2(self) -> float:
        return self.e2 - self.e1**2

    @property
    def central3(self) -> float:
        m = self.e1
        return self.e3 - 3.0 * m * self.e2 + 2.0 * m**3

    @property
    def central4(self) -> float:
        m = self.e1
        return self.e4 - 4.0 * m * self.e3 + 6.0 * m * m * self.e2 - 3.0 * m**4

    @property
    def skewness(self) -> float:
        # L is degenerate (sigma2 = 0) only at p = 1 with q in {0, 1}
        return self.central3 / self.sigma2**1.5 if self.sigma2 > 0 else math.nan

    @property
    def kurtosis(self) -> float:
        return self.central4 / self.sigma2**2 if self.sigma2 > 0 else math.nan

    def raw(self, k: int) -> float:
        return (self.e1, self.e2, self.e3, self.e4)[k - 1]


def limit_moments(p: float, q: float) -> LimitMoments:
    _check_probs(p, q)
    if classify_regime(p) is not RegimeTag.SUPERDIFFUSIVE:
        raise DomainError(f"L exists only in the superdiffusive regime p > 3/4, got p={p}")
    a = 2.0 * p - 1.0
    b = 2.0 * q - 1.0
    e1 = b / math.gamma(2.0 * p)
    e2 = 1.0 / ((4.0 * p - 3.0) * math.gamma(2.0 * a))
    e3 = 2.0 * p * b / (a * (4.0 * p - 3.0) * math.gamma(3.0 * a))
    e4 = 6.0 * (8.0 * p * p - 4.0 * p - 1.0) / (
        (8.0 * p - 5.0) * (4.0 * p - 3.0) ** 2 * math.gamma(4.0 * a)
    )
    return LimitMoments(p, q, e1, e2, e3, e4)


def symmetric_kurtosis(p: float) -> float:
    """Kurtosis of L at q = 1/2 in its direct closed form."""
    if classify_regime(p) is not RegimeTag.SUPERDIFFUSIVE:
        raise DomainError(f"L exists only for p > 3/4, got p={p}")
    a = 2.0 * p - 1.0
    return (
        6.0 * (8.0 * p * p - 4.0 * p - 1.0) * math.gamma(2.0 * a) ** 2
        / ((8.0 * p - 5.0) * math.gamma(4.0 * a))
    )


def enumerate_distribution(n: int, p: float, q: float) -> dict[int, float]:
    """Exact pmf of S_n by dynamic programming over (k, S_k).

    Only the sufficient-statistic transition is used, so the cost is O(n^2).
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    _check_probs(p, q)
    # index i <-> position s = 2i - k at time k
    probs = np.array([1.0 - q, q])
    for k in range(1, n):
        nxt = np.zeros(k + 2)
        for i, w in enumerate(probs):
            if w == 0.0:
                continue
            up = step_probability(2 * i - k, k, p)
            nxt[i + 1] += w * up
            nxt[i] += w * (1.0 - up)
        probs = nxt
    return {2 * i - n: float(w) for i, w in enumerate(probs)}


def pmf_moments(pmf: dict[int, float]) -> tuple[float, float, float, float]:
    s = np.array(list(pmf.keys()), dtype=np.float64)
    w = np.array(list(pmf.values()))
    return tuple(float(math.fsum(w * s**k)) for k in (1, 2, 3, 4))


def conditional_eps_moments(s: int, n: int, p: float) -> tuple[float, float, float]:
    """E[ε^j | S_n = s] for j = 2, 3, 4, with ε_{n+1} = S_{n+1} - γ_n S_n."""
    if n < 1:
        raise InvalidStateError("conditional moments need n >= 1")
    check_state(s, n)
    x = (2.0 * p - 1.0) * s / n
    x2 = x * x
    return (1.0 - x2, 2.0 * x * (x2 - 1.0), 1.0 - 3.0 * x2 * x2 + 2.0 * x2)
