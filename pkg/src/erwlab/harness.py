"""Empirical checks of the ERW limit theorems.

Functionals follow the conventions of the ensemble kernel: the diffusive
quadratic sum starts at k = 1, the critical one at k = 2, and both LIL ratios
are maximised over k in [16, n] so that log log k and log log log k are
positive.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.special import ndtr

from ._kernels import LIL_START
from .errors import DomainError
from .moments import limit_moments
from .special import RegimeTag, WeightTable, classify_regime
from .walk import EnsembleResult, Trajectory


@dataclass
class RunningFunctionals:
    """Incrementally maintained path functionals up to time n."""

    n: int = 0
    qsl_diffusive_sum: float = 0.0
    qsl_critical_sum: float = 0.0
    lil_max_diffusive: float = 0.0
    lil_max_critical: float = 0.0

    def update(self, s: int) -> None:
        """Absorb S_{n+1} = s."""
        self.n += 1
        t = float(self.n)
        x2 = (s / t) ** 2
        self.qsl_diffusive_sum += x2
        if self.n >= 2:
            lt = math.log(t)
            self.qsl_critical_sum += x2 / (lt * lt)
            if self.n >= LIL_START:
                llt = math.log(lt)
                s2 = s * s
                self.lil_max_diffusive = max(self.lil_max_diffusive, s2 / (2.0 * t * llt))
                self.lil_max_critical = max(
                    self.lil_max_critical, s2 / (2.0 * t * lt * math.log(llt))
                )

    @classmethod
    def from_positions(cls, positions: Sequence[int] | np.ndarray) -> "RunningFunctionals":
        s = np.asarray(positions, dtype=np.float64)
        n = len(s)
        k = np.arange(1, n + 1, dtype=np.float64)
        x2 = (s / k) ** 2
        lk = np.log(k[1:])
        out = cls(n=n, qsl_diffusive_sum=float(np.sum(x2)),
                  qsl_critical_sum=float(np.sum(x2[1:] / lk**2)))
        if n >= LIL_START:
            kk = k[LIL_START - 1:]
            ss = s[LIL_START - 1:] ** 2
            lkk = np.log(kk)
            out.lil_max_diffusive = float(np.max(ss / (2.0 * kk * np.log(lkk))))
            out.lil_max_critical = float(np.max(ss / (2.0 * kk * lkk * np.log(np.log(lkk)))))
        return out

    @classmethod
    def accumulate(cls, positions) -> "RunningFunctionals":
        rf = cls()
        for s in positions:
            rf.update(int(s))
        return rf

    @property
    def qsl_diffusive(self) -> float:
        return self.qsl_diffusive_sum / math.log(self.n)

    @property
    def qsl_critical(self) -> float:
        return self.qsl_critical_sum / math.log(math.log(self.n))


@dataclass
class TestReport:
    """One checked statistic; ``passed`` is |observed - expected| <= tolerance."""

    name: str
    observed: float
    expected: float
    tolerance: float
    standard_error: float = 0.0
    passed: bool = field(init=False)
    sample_size: int = 0
    horizon: int = 0
    seed: int = 0
    gate: str = "hard"  # "hard" or "monitor"
    provenance: str = "empirical"
    detail: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        self.passed = bool(abs(self.observed - self.expected) <= self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# --- scaled statistics -------------------------------------------------------


def scale_factor(n: int, p: float) -> float:
    regime = classify_regime(p)
    if regime is RegimeTag.DIFFUSIVE:
        return math.sqrt(n)
    if regime is RegimeTag.CRITICAL:
        return math.sqrt(n * math.log(n))
    return float(n) ** (2.0 * p - 1.0)


def scaled_terminal(traj: Trajectory) -> float:
    """S_n / sqrt(n), S_n / sqrt(n log n) or S_n / n^(2p-1) by regime."""
    n = traj.horizon
    if n < 2:
        raise DomainError("scaled_terminal needs n >= 2")
    return traj.terminal / scale_factor(n, traj.params.memory_p)


def scale_terminals(terminal: np.ndarray, n: int, p: float) -> np.ndarray:
    if n < 2:
        raise DomainError("scaling needs n >= 2")
    return np.asarray(terminal, dtype=np.float64) / scale_factor(n, p)


def qsl_diffusive(traj: Trajectory) -> float:
    """(1/log n) Σ_{k<=n} (S_k/k)², whose a.s. limit is 1/(3-4p) for p < 3/4."""
    if traj.horizon < 2:
        raise DomainError("qsl_diffusive needs n >= 2")
    return RunningFunctionals.from_positions(traj.positions).qsl_diffusive


def qsl_critical(traj: Trajectory) -> float:
    """(1/log log n) Σ_{2<=k<=n} (S_k/(k log k))², a.s. limit 1 at p = 3/4."""
    if traj.horizon < LIL_START:
        raise DomainError(f"qsl_critical needs n >= {LIL_START}")
    return RunningFunctionals.from_positions(traj.positions).qsl_critical


def lil_statistic(traj: Trajectory, regime: RegimeTag | None = None) -> float:
    """Running maximum over k in [16, n] of the regime's LIL ratio."""
    if traj.horizon < LIL_START:
        raise DomainError(f"lil_statistic needs n >= {LIL_START}")
    if regime is None:
        regime = classify_regime(traj.params.memory_p)
    rf = RunningFunctionals.from_positions(traj.positions)
    if regime is RegimeTag.CRITICAL:
        return rf.lil_max_critical
    if regime is RegimeTag.DIFFUSIVE:
        return rf.lil_max_diffusive
    raise DomainError("the LIL functionals apply to the diffusive and critical regimes only")


# --- Kolmogorov-Smirnov -----------------------------------------------------


@dataclass(frozen=True)
class KSResult:
    D: float
    p_value: float
    n: int


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P(K > lam) for the Kolmogorov distribution.

    Uses the alternating series 2 Σ (-1)^(k-1) exp(-2 k² lam²) for lam >= 1
    and the Jacobi theta form for smaller lam, where the alternating series
    converges slowly.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        c = math.pi**2 / (8.0 * lam * lam)
        acc = math.fsum(math.exp(-((2 * k - 1) ** 2) * c) for k in range(1, terms + 1))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * acc))
    acc = math.fsum(
        (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam) for k in range(1, terms + 1)
    )
    return min(1.0, max(0.0, 2.0 * acc))


def kolmogorov_isf(alpha: float) -> float:
    """lam with kolmogorov_sf(lam) = alpha, by bisection."""
    lo, hi = 0.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kolmogorov_sf(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _effective_n(n: int) -> float:
    # Stephens' small-sample correction of the asymptotic scale.
    rn = math.sqrt(n)
    return rn + 0.12 + 0.11 / rn


def normal_cdf(variance: float) -> Callable[[np.ndarray], np.ndarray]:
    sd = math.sqrt(variance)
    return lambda x: ndtr(np.asarray(x, dtype=np.float64) / sd)


def ks_statistic(
    samples: Sequence[float] | np.ndarray,
    variance: float = 1.0,
    cdf: Callable[[np.ndarray], np.ndarray] | None = None,
) -> KSResult:
    """One-sample KS distance to N(0, variance), or to ``cdf`` when given."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if n == 0:
        raise DomainError("ks_statistic needs at least one sample")
    if cdf is None:
        if variance <= 0.0:
            raise DomainError(f"reference variance must be positive, got {variance}")
        cdf = normal_cdf(variance)
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    d = float(max(d_plus, d_minus, 0.0))
    return KSResult(d, kolmogorov_sf(_effective_n(n) * d), n)


def ks_critical_distance(n: int, alpha: float) -> float:
    """Largest D whose p-value is still >= alpha, for n samples."""
    return kolmogorov_isf(alpha) / _effective_n(n)


# --- martingale diagnostics --------------------------------------------------


def martingale_diagnostics(traj: Trajectory, weights: WeightTable) -> tuple[np.ndarray, np.ndarray]:
    """M_k = a_k S_k and the predictable quadratic variation <M>_k, k = 1..n."""
    n = traj.horizon
    if weights.horizon != n:
        raise DomainError(f"weight table horizon {weights.horizon} != path horizon {n}")
    if weights.p != traj.params.memory_p:
        raise DomainError("weight table built for a different memory parameter")
    s = traj.positions.astype(np.float64)
    a = weights.a_seq
    alpha = 2.0 * weights.p - 1.0
    cond_var = np.empty(n)
    cond_var[0] = 1.0
    k = np.arange(1, n, dtype=np.float64)
    cond_var[1:] = 1.0 - alpha * alpha * (s[:-1] / k) ** 2
    return a * s, np.cumsum(a * a * cond_var)


# --- moments of L ------------------------------------------------------------


@dataclass
class PowerSums:
    """Count and sums of x, x², x³, x⁴ with an associative, exact merge.

    Integer samples (terminal positions) are summed in Python ints, so merging
    partial results in any order gives bit-identical totals.
    """

    count: int = 0
    sums: tuple = (0, 0, 0, 0)

    @classmethod
    def from_integers(cls, values: np.ndarray) -> "PowerSums":
        vals = [int(v) for v in values]
        return cls(len(vals), tuple(sum(v**k for v in vals) for k in (1, 2, 3, 4)))

    def merge(self, other: "PowerSums") -> "PowerSums":
        return PowerSums(self.count + other.count,
                         tuple(a + b for a, b in zip(self.sums, other.sums)))

    def __sub__(self, other: "PowerSums") -> "PowerSums":
        return PowerSums(self.count - other.count,
                         tuple(a - b for a, b in zip(self.sums, other.sums)))

    def raw_moments(self, scale: float = 1.0) -> np.ndarray:
        """Raw moments of x / scale."""
        return np.array([float(s) / self.count / scale**k
                         for k, s in zip((1, 2, 3, 4), self.sums)])


def kurtosis_from_raw(m: np.ndarray) -> float:
    mu = m[0]
    var = m[1] - mu * mu
    if var <= 0.0:
        return math.nan  # degenerate sample, kurtosis undefined
    c4 = m[3] - 4 * mu * m[2] + 6 * mu * mu * m[1] - 3 * mu**4
    return c4 / (var * var)


def jackknife(blocks: list[PowerSums], scale: float, stat: Callable[[np.ndarray], Any]):
    """Delete-one-block jackknife: (full estimate, standard error)."""
    total = blocks[0]
    for b in blocks[1:]:
        total = total.merge(b)
    full = np.asarray(stat(total.raw_moments(scale)), dtype=np.float64)
    loo = np.array([stat((total - b).raw_moments(scale)) for b in blocks], dtype=np.float64)
    nb = len(blocks)
    se = np.sqrt((nb - 1) / nb * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return full, se


def block_power_sums(terminal: np.ndarray, n_blocks: int) -> list[PowerSums]:
    chunks = np.array_split(np.asarray(terminal), n_blocks)
    return [PowerSums.from_integers(c) for c in chunks]


def compare_L(
    terminal: np.ndarray,
    n: int,
    p: float,
    q: float,
    *,
    n_blocks: int = 100,
    sigmas: float = 3.0,
    seed: int = 0,
) -> list[TestReport]:
    """Empirical moments of S_n / n^(2p-1) against the moments of L.

    ``terminal`` holds the integer terminal positions of the ensemble. Reports
    the raw moments k = 1..4 (tolerance ``sigmas`` jackknife SE), the kurtosis
    against its limit, and the sub-Gaussian band 1 <= κ <= 3 - sigmas·SE.
    """
    if classify_regime(p) is not RegimeTag.SUPERDIFFUSIVE:
        raise DomainError(f"compare_L applies only for p > 3/4, got p={p}")
    lm = limit_moments(p, q)
    scale = float(n) ** (2.0 * p - 1.0)
    blocks = block_power_sums(terminal, min(n_blocks, len(terminal)))
    raw, raw_se = jackknife(blocks, scale, lambda m: m)
    kurt, kurt_se = jackknife(blocks, scale, kurtosis_from_raw)
    kurt, kurt_se = float(kurt), float(kurt_se)
    common = dict(sample_size=len(terminal), horizon=n, seed=seed)
    reports = []
    for k in (1, 2, 3, 4):
        se = float(raw_se[k - 1])
        reports.append(TestReport(
            f"L-moment-{k}", float(raw[k - 1]), lm.raw(k), sigmas * se, se, **common,
            detail={"sigmas": sigmas},
        ))
    reports.append(TestReport(
        "L-kurtosis", kurt, lm.kurtosis, sigmas * kurt_se, kurt_se, **common,
        detail={"sigmas": sigmas},
    ))
    upper = 3.0 - sigmas * kurt_se
    reports.append(TestReport(
        "L-sub-gaussian", kurt, 0.5 * (1.0 + upper), 0.5 * (upper - 1.0), kurt_se, **common,
        detail={"band": [1.0, upper], "rule": "1 <= kurtosis <= 3 - sigmas*SE"},
    ))
    return reports


def compare_finite_n(
    terminal: np.ndarray, n: int, p: float, q: float, *, n_blocks: int = 100,
    sigmas: float = 3.0, seed: int = 0,
) -> list[TestReport]:
    """Empirical moments of S_n / n^(2p-1) against the exact finite-n moments.

    Unlike :func:`compare_L` this carries no horizon bias, so it isolates the
    sampler from the slow approach of S_n / n^(2p-1) to its limit.
    """
    from .moments import exact_moments

    scale = float(n) ** (2.0 * p - 1.0)
    exact = np.array(exact_moments(n, p, q).as_tuple()) / scale ** np.arange(1, 5)
    blocks = block_power_sums(terminal, min(n_blocks, len(terminal)))
    raw, raw_se = jackknife(blocks, scale, lambda m: m)
    return [
        TestReport(
            f"finite-n-moment-{k}", float(raw[k - 1]), float(exact[k - 1]),
            sigmas * float(raw_se[k - 1]), float(raw_se[k - 1]),
            sample_size=len(terminal), horizon=n, seed=seed, gate="monitor",
            detail={"reference": "exact E[S_n^k] / n^(k(2p-1))"},
        )
        for k in (1, 2, 3, 4)
    ]


def ensemble_qsl_diffusive(res: EnsembleResult) -> np.ndarray:
    return res.qsl_diffusive_sum / math.log(res.params.horizon_n)


def ensemble_qsl_critical(res: EnsembleResult) -> np.ndarray:
    n = res.params.horizon_n
    if n < LIL_START:
        raise DomainError(f"qsl_critical needs n >= {LIL_START}")
    return res.qsl_critical_sum / math.log(math.log(n))


def clt_samples(res: EnsembleResult, dither: bool = True) -> np.ndarray:
    """Scaled terminals; optionally smoothed over the lattice cell.

    S_n lives on a lattice of spacing 2, so a KS test against a continuous
    law sees an extra discrepancy of half an atom (~pmf(0)/2) at every
    point. Adding an independent U(-1, 1) removes it while changing the
    variance only by 1/(3 Var S_n).
    """
    x = res.terminal.astype(np.float64)
    if dither:
        x = x + res.dither()
    return scale_terminals(x, res.params.horizon_n, res.params.memory_p)
