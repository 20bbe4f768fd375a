"""Gamma-function machinery for the ERW martingale normalizers.

Point queries go through log-gamma differences (exponentiated once); sequence
construction uses the multiplicative recursions. Ratios Γ(x)/Γ(y) are
evaluated so that poles in the denominator give 0 and matched poles give the
finite limit, which the moment closed forms rely on for negative 2p - 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import bernoulli, gammaln, zeta

from ._dd import weight_sequences
from .errors import DomainError

# B_2k / (2k (2k-1)) for the Stirling series of log Γ.
_STIRLING = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
]
_STIRLING_MIN = 10.0


class RegimeTag(enum.Enum):
    DIFFUSIVE = "diffusive"
    CRITICAL = "critical"
    SUPERDIFFUSIVE = "superdiffusive"


def classify_regime(p: float) -> RegimeTag:
    """Diffusive for p < 3/4, critical at exactly 3/4, superdiffusive above."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"memory p must lie in [0, 1], got {p}")
    if p < 0.75:
        return RegimeTag.DIFFUSIVE
    if p == 0.75:
        return RegimeTag.CRITICAL
    return RegimeTag.SUPERDIFFUSIVE


def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def gamma_sign(x: float) -> float:
    """Sign of Γ(x) away from the poles."""
    if x > 0.0:
        return 1.0
    return -1.0 if math.floor(-x) % 2 == 0 else 1.0


def rgamma(x: float) -> float:
    """1/Γ(x), exactly zero at the poles."""
    if _is_pole(x):
        return 0.0
    if x > 0.0 and x < 170.0:
        return 1.0 / math.gamma(x)
    return gamma_sign(x) * math.exp(-math.lgamma(x))


def _stirling_tail(z: float) -> float:
    zi = 1.0 / z
    zi2 = zi * zi
    acc = 0.0
    for coef in reversed(_STIRLING):
        acc = acc * zi2 + coef
    return acc * zi


def log_poch(z: float, m: float) -> float:
    """log|Γ(z+m)/Γ(z)| for non-pole z, z+m.

    The shift m is taken separately so it is never rounded into z + m; for
    large arguments the difference comes straight from the Stirling series
    and keeps full relative precision even when both log-gammas are ~1e7.
    """
    x = z + m
    if min(x, z) >= _STIRLING_MIN:
        return (
            (x - 0.5) * math.log1p(m / z)
            + m * (math.log(z) - 1.0)
            + _stirling_tail(x)
            - _stirling_tail(z)
        )
    return math.lgamma(x) - math.lgamma(z)


def poch(z: float, m: float) -> float:
    """Pochhammer ratio Γ(z+m)/Γ(z) with the pole conventions above."""
    x = z + m
    if m == round(m) and abs(m) <= 64:
        # Finite product; defined even when z and z+m are both poles.
        k = int(round(m))
        prod = 1.0
        if k >= 0:
            for j in range(k):
                prod *= z + j
            return prod
        for j in range(-k):
            prod *= x + j
        if prod == 0.0:
            raise DomainError(f"Γ({x})/Γ({z}) is infinite")
        return 1.0 / prod
    if _is_pole(z):
        if _is_pole(x):
            # Γ(-i+e)/Γ(-j+e) -> (-1)^(i-j) j!/i!
            i, j = int(-x), int(-z)
            sign = -1.0 if (i - j) % 2 else 1.0
            return sign * math.exp(math.lgamma(j + 1) - math.lgamma(i + 1))
        return 0.0
    if _is_pole(x):
        raise DomainError(f"Γ({x}) is infinite")
    return gamma_sign(x) * gamma_sign(z) * math.exp(log_poch(z, m))


def gamma_ratio(x: float, y: float) -> float:
    """Γ(x)/Γ(y) for exactly representable x and y."""
    return poch(y, x - y)


def gamma_coefficient(n: int, p: float) -> float:
    """γ_n = (n + 2p - 1)/n, the one-step growth factor of E[S_n]."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return (n + 2.0 * p - 1.0) / n


def _check_weight_domain(n: int, p: float) -> None:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 < p <= 1.0:
        raise DomainError(
            f"martingale weights need 0 < p <= 1 (Γ(2p) has a pole at p=0), got p={p}; "
            "p=0 runs are simulation-only"
        )


def martingale_weight(n: int, p: float) -> float:
    """a_n = Γ(n)Γ(2p)/Γ(n + 2p - 1), so that a_n S_n is a martingale."""
    _check_weight_domain(n, p)
    if n == 1:
        return 1.0
    return math.gamma(2.0 * p) / poch(float(n), 2.0 * p - 1.0)


def weight_variance(n: int, p: float) -> float:
    """v_n = a_1² + ... + a_n²."""
    _check_weight_domain(n, p)
    return float(WeightTable.build(p, n).v_seq[-1])


@dataclass(frozen=True)
class WeightTable:
    """Immutable γ_k, a_k, v_k sequences for one memory parameter.

    Index k-1 of each array holds the value at time k.
    """

    p: float
    gamma_seq: np.ndarray = field(repr=False)  # γ_1..γ_{n-1}
    a_seq: np.ndarray = field(repr=False)  # a_1..a_n
    v_seq: np.ndarray = field(repr=False)  # v_1..v_n

    @property
    def horizon(self) -> int:
        return len(self.a_seq)

    @classmethod
    def build(cls, p: float, n: int) -> "WeightTable":
        _check_weight_domain(n, p)
        k = np.arange(1, n, dtype=np.float64)
        gam = (k + (2.0 * p - 1.0)) / k
        a, v = weight_sequences(2.0 * p - 1.0, n)
        for arr in (gam, a, v):
            arr.setflags(write=False)
        return cls(p=p, gamma_seq=gam, a_seq=a, v_seq=v)


@dataclass(frozen=True)
class VAsymptote:
    """Growth of v_n: v_n ~ constant * scale(n), or v_n -> constant."""

    regime: RegimeTag
    constant: float
    scale: str  # "n^(3-4p)", "log n" or "1"

    def scale_at(self, n: int, p: float) -> float:
        if self.regime is RegimeTag.DIFFUSIVE:
            return float(n) ** (3.0 - 4.0 * p)
        if self.regime is RegimeTag.CRITICAL:
            return math.log(n)
        return 1.0


def v_asymptote(p: float) -> VAsymptote:
    if not 0.0 < p <= 1.0:
        raise DomainError(f"v_n asymptotics need 0 < p <= 1, got {p}")
    regime = classify_regime(p)
    if regime is RegimeTag.DIFFUSIVE:
        return VAsymptote(regime, math.gamma(2.0 * p) ** 2 / (3.0 - 4.0 * p), "n^(3-4p)")
    if regime is RegimeTag.CRITICAL:
        return VAsymptote(regime, math.pi / 4.0, "log n")
    return VAsymptote(regime, hyp3f2_unit(1.0, 1.0, 1.0, 2.0 * p, 2.0 * p), "1")


_BERN = bernoulli(48)
_TAIL_ORDER = 24


def _bernoulli_poly(m: int, x: float) -> float:
    return math.fsum(math.comb(m, k) * _BERN[k] * x ** (m - k) for k in range(m + 1))


def hyp3f2_unit(a: float, b: float, c: float, d: float, e: float) -> float:
    """₃F₂(a, b, c; d, e; 1) for d + e > a + b + c.

    The series converges only algebraically (terms ~ k^(-s-1) with
    s = d + e - a - b - c), so summing until the terms are small is hopeless
    when s is small. The first K terms are summed directly; the remainder is
    the asymptotic expansion of the term in powers of 1/k, integrated term by
    term with Hurwitz zeta functions.
    """
    for name, val in (("d", d), ("e", e)):
        if _is_pole(val):
            raise DomainError(f"lower parameter {name}={val} is a nonpositive integer")
    upper = (a, b, c)
    terminating = any(_is_pole(u) for u in upper)
    s = d + e - a - b - c
    if not terminating and s <= 0.0:
        raise DomainError(f"₃F₂ diverges at unit argument: d+e-a-b-c = {s} <= 0")

    big = max(abs(a), abs(b), abs(c), abs(d), abs(e), 1.0)
    K = max(200, int(math.ceil(20.0 * big)))
    if terminating:
        K = int(-max(u for u in upper if _is_pole(u))) + 1

    terms = np.empty(K)
    t = 1.0
    for k in range(K):
        terms[k] = t
        t *= (a + k) * (b + k) * (c + k) / ((d + k) * (e + k) * (k + 1))
    head = math.fsum(terms)
    if terminating:
        return head

    # t_k = C k^(-s-1) exp(sum_j c_j k^-j), using
    # log Γ(k+x) - log Γ(k+y) = (x-y) log k + sum_j (-1)^(j+1) (B_{j+1}(x)-B_{j+1}(y)) / (j(j+1) k^j)
    J = _TAIL_ORDER
    cj = [0.0] * (J + 1)
    for j in range(1, J + 1):
        bp = (
            _bernoulli_poly(j + 1, a)
            + _bernoulli_poly(j + 1, b)
            + _bernoulli_poly(j + 1, c)
            - _bernoulli_poly(j + 1, d)
            - _bernoulli_poly(j + 1, e)
            - _bernoulli_poly(j + 1, 1.0)
        )
        cj[j] = (-1) ** (j + 1) * bp / (j * (j + 1))
    h = [1.0] + [0.0] * J
    for m in range(1, J + 1):
        h[m] = math.fsum(j * cj[j] * h[m - j] for j in range(1, m + 1)) / m
    sign = gamma_sign(d) * gamma_sign(e) * gamma_sign(a) * gamma_sign(b) * gamma_sign(c)
    log_c = (
        gammaln(d) + gammaln(e) - math.lgamma(a) - math.lgamma(b) - math.lgamma(c)
    )
    tail = math.fsum(h[j] * zeta(s + 1.0 + j, K) for j in range(J + 1))
    return head + sign * math.exp(log_c) * tail


def gamma_ratio_sum(a: float, b: float, n: int) -> float:
    """Σ_{k=1}^n Γ(k+a)/Γ(k+b) by the telescoping closed form.

    Equivalent to [Γ(a+1)/Γ(b) - Γ(n+a+1)/Γ(n+b)] / (b - a - 1).
    """
    if a < 0.0 or b < 0.0:
        raise DomainError(f"gamma_ratio_sum needs a, b >= 0, got a={a}, b={b}")
    if b == a + 1.0:
        raise DomainError("gamma_ratio_sum is undefined for b = a + 1 (harmonic case)")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    head = gamma_ratio(a + 1.0, b)
    tail = poch(n + b, a + 1.0 - b)
    return (head - tail) / (b - a - 1.0)
