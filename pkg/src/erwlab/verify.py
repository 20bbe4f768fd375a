"""Catalogue of named verification runs.

Each entry reproduces one acceptance protocol at fixed scale and returns
TestReport records. Hard-gated reports decide the exit status of
``erwlab verify``; monitored ones are reported only. Every run is a pure
function of the base seed, so a bundle's config reproduces its numbers.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .harness import (
    TestReport,
    clt_samples,
    compare_finite_n,
    compare_L,
    ensemble_qsl_critical,
    ensemble_qsl_diffusive,
    ks_critical_distance,
    ks_statistic,
    martingale_diagnostics,
)
from .moments import (
    closed_form_moment,
    enumerate_distribution,
    moment_table,
    pmf_moments,
    SINGULAR_EPS,
)
from .special import (
    WeightTable,
    gamma_ratio_sum,
    hyp3f2_unit,
    martingale_weight,
    v_asymptote,
)
from .walk import WalkParams, history_distribution, simulate, simulate_ensemble

DEFAULT_SEED = 20170329

GRID5 = (0.0, 0.25, 0.5, 0.75, 1.0)
GRID11 = tuple(round(0.1 * i, 1) for i in range(11))

# Fixed-seed regression values of the monitored LIL maxima at DEFAULT_SEED,
# pinned from the first run of the protocol below.
LIL_REGRESSION = {
    "lil-diffusive": 4.1663798017465865,
    "lil-critical": 112.77769679328274,
}
LIL_REGRESSION_RTOL = 1e-9


@dataclass
class Context:
    seed: int = DEFAULT_SEED
    scale: float = 1.0  # shrinks path counts for smoke runs; 1.0 = protocol size

    def paths(self, n_paths: int) -> int:
        return max(2, int(round(n_paths * self.scale)))


def _max_abs(a: dict[int, float], b: dict[int, float]) -> float:
    return max(abs(a[s] - b.get(s, 0.0)) for s in a)


def sampler_equivalence(ctx: Context) -> list[TestReport]:
    worst = 0.0
    for p in GRID5:
        for q in GRID5:
            for n in range(1, 13):
                worst = max(worst, _max_abs(history_distribution(n, p, q),
                                            enumerate_distribution(n, p, q)))
    return [TestReport("sampler-equivalence", worst, 0.0, 1e-12, provenance="analytic",
                       horizon=12, detail={"grid": list(GRID5), "max_n": 12})]


def _clt(ctx: Context, name: str, p: float, n: int, n_paths: int, seed: int,
         variance: float, alpha: float, gate: str) -> TestReport:
    res = simulate_ensemble(WalkParams(p, 0.5, n, seed), n_paths, functionals=False)
    ks = ks_statistic(clt_samples(res), variance)
    crit = ks_critical_distance(n_paths, alpha)
    return TestReport(name, ks.D, 0.0, crit, sample_size=n_paths, horizon=n, seed=seed,
                      gate=gate, detail={"p": p, "p_value": ks.p_value, "alpha": alpha,
                                         "variance": variance, "dithered": True})


def clt_diffusive(ctx: Context) -> list[TestReport]:
    n, n_paths = 10_000, ctx.paths(10_000)
    reports = []
    for p in (0.25, 0.5):
        runs = [
            _clt(ctx, f"clt-diffusive-p{p}-seed{j}", p, n, n_paths, ctx.seed + j,
                 1.0 / (3.0 - 4.0 * p), 0.01, "monitor")
            for j in range(10)
        ]
        passes = sum(r.passed for r in runs)
        reports.extend(runs)
        reports.append(TestReport(f"clt-diffusive-p{p}", passes, 10, 1, sample_size=n_paths,
                                  horizon=n, seed=ctx.seed,
                                  detail={"rule": "KS p-value > 0.01 on >= 9 of 10 seeds"}))
    return reports


def clt_critical(ctx: Context) -> list[TestReport]:
    return [_clt(ctx, "clt-critical", 0.75, 100_000, ctx.paths(10_000), ctx.seed,
                 1.0, 0.001, "hard")]


def moment_oracle(ctx: Context) -> list[TestReport]:
    worst_enum = 0.0
    for p in GRID11:
        for q in GRID11:
            table = moment_table(12, p, q)
            for n in range(1, 13):
                em = pmf_moments(enumerate_distribution(n, p, q))
                worst_enum = max(worst_enum, float(np.max(np.abs(table[n - 1] - em))))
    worst_cf = 0.0
    ns = (1, 2, 3, 5, 10, 100, 1000, 10_000)
    for p in (0.05, 0.1, 0.2, 0.25, 0.3, 0.4, 0.45, 0.55, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 1.0):
        for q in (0.0, 0.3, 0.5, 1.0):
            table = moment_table(max(ns), p, q)
            for n in ns:
                for k in (1, 2, 3, 4):
                    ref = table[n - 1, k - 1]
                    cf = closed_form_moment(k, n, p, q)
                    err = abs(cf - ref) / abs(ref) if ref != 0.0 else abs(cf)
                    worst_cf = max(worst_cf, err)
    return [
        TestReport("moment-oracle-enumeration", worst_enum, 0.0, 1e-10, provenance="analytic",
                   horizon=12, detail={"grid": list(GRID11)}),
        TestReport("moment-oracle-closed-form", worst_cf, 0.0, 1e-8, provenance="analytic",
                   horizon=max(ns), detail={"metric": "max relative difference",
                                            "singular_eps": SINGULAR_EPS}),
    ]


def martingale_identities(ctx: Context) -> list[TestReport]:
    n = 1_000_000
    worst = 0.0
    for p in (0.1, 0.25, 0.5, 0.6, 0.75, 0.9, 1.0):
        a = WeightTable.build(p, n).a_seq
        for q in (0.0, 0.7, 1.0):
            m1 = moment_table(n, p, q)[:, 0]
            worst = max(worst, float(np.max(np.abs(a * m1 - (2.0 * q - 1.0)))))
    reports = [TestReport("martingale-mean", worst, 0.0, 1e-10, provenance="analytic",
                          horizon=n, detail={"identity": "a_n E[S_n] = 2q - 1"})]
    horizon, n_paths = 10_000, ctx.paths(1000)
    excess = 0.0
    for p in (0.25, 0.5, 0.75, 0.9):
        w = WeightTable.build(p, horizon)
        params = WalkParams(p, 0.5, horizon, ctx.seed)
        for i in range(n_paths):
            _, br = martingale_diagnostics(simulate(params, i), w)
            excess = max(excess, float(np.max((br - w.v_seq) / w.v_seq)))
    reports.append(TestReport("bracket-below-v", max(excess, 0.0), 0.0, 1e-12,
                              sample_size=n_paths, horizon=horizon, seed=ctx.seed,
                              detail={"metric": "max_k (<M>_k - v_k)/v_k over all paths"}))
    return reports


def superdiffusive_limit(ctx: Context) -> list[TestReport]:
    p, q, n, n_paths = 0.85, 0.5, 100_000, ctx.paths(100_000)
    res = simulate_ensemble(WalkParams(p, q, n, ctx.seed), n_paths, functionals=False)
    reports = compare_L(res.terminal, n, p, q, seed=ctx.seed)
    for r in reports:
        if r.name not in ("L-moment-2", "L-moment-4", "L-sub-gaussian"):
            r.gate = "monitor"
    reports.extend(compare_finite_n(res.terminal, n, p, q, seed=ctx.seed))
    return reports


def qsl_diffusive(ctx: Context) -> list[TestReport]:
    n, n_paths = 1_000_000, ctx.paths(200)
    out = []
    for p in (0.25, 0.5):
        res = simulate_ensemble(WalkParams(p, 0.5, n, ctx.seed), n_paths)
        med = float(np.median(ensemble_qsl_diffusive(res)))
        target = 1.0 / (3.0 - 4.0 * p)
        out.append(TestReport(f"qsl-diffusive-p{p}", med, target, 0.15 * target,
                              sample_size=n_paths, horizon=n, seed=ctx.seed,
                              detail={"statistic": "median over paths"}))
    return out


def qsl_critical(ctx: Context) -> list[TestReport]:
    n, n_paths = 1_000_000, ctx.paths(200)
    res = simulate_ensemble(WalkParams(0.75, 0.5, n, ctx.seed), n_paths)
    med = float(np.median(ensemble_qsl_critical(res)))
    return [TestReport("qsl-critical", med, 1.0, 0.15, sample_size=n_paths, horizon=n,
                       seed=ctx.seed, gate="monitor",
                       detail={"statistic": "median over paths",
                               "note": "log log convergence; monitored only"})]


def lil(ctx: Context) -> list[TestReport]:
    n, n_paths = 1_000_000, ctx.paths(100)
    out = []
    for name, p, attr, theory in (
        ("lil-diffusive", 0.5, "lil_max_diffusive", 1.0 / (3.0 - 4.0 * 0.5)),
        ("lil-critical", 0.75, "lil_max_critical", 1.0),
    ):
        res = simulate_ensemble(WalkParams(p, 0.5, n, ctx.seed), n_paths)
        observed = float(np.max(getattr(res, attr)))
        pinned = LIL_REGRESSION.get(name)
        regression = ctx.seed == DEFAULT_SEED and ctx.scale == 1.0 and pinned is not None
        expected = pinned if regression else theory
        tol = LIL_REGRESSION_RTOL * abs(pinned) if regression else math.inf
        out.append(TestReport(name, observed, expected, tol, sample_size=n_paths, horizon=n,
                              seed=ctx.seed, gate="monitor",
                              detail={"theoretical_limsup": theory,
                                      "band": "fixed-seed regression" if regression else "none"}))
    return out


def special_functions(ctx: Context) -> list[TestReport]:
    reports = [TestReport("hyp3f2-zeta2", hyp3f2_unit(1, 1, 1, 2, 2), math.pi**2 / 6, 1e-10,
                          provenance="analytic")]
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(1000):
        a, b = rng.uniform(0.0, 5.0, size=2)
        while abs(b - a - 1.0) <= 0.1:
            a, b = rng.uniform(0.0, 5.0, size=2)
        n = int(rng.integers(1, 1001))
        got = gamma_ratio_sum(a, b, n)
        t = math.gamma(1.0 + a) / math.gamma(1.0 + b)
        terms = []
        for k in range(1, n + 1):
            terms.append(t)
            t *= (k + a) / (k + b)
        ref = math.fsum(terms)
        worst = max(worst, abs(got - ref) / abs(ref))
    reports.append(TestReport("gamma-ratio-sum", worst, 0.0, 1e-12, sample_size=1000,
                              seed=ctx.seed, provenance="analytic"))
    n = 1_000_000
    for p in (0.25, 0.5, 0.6):
        ell = v_asymptote(p).constant
        ratio = WeightTable.build(p, n).v_seq[-1] / n ** (3.0 - 4.0 * p) / ell
        reports.append(TestReport(f"v-scaling-p{p}", ratio, 1.0, 0.01, horizon=n,
                                  provenance="analytic"))
    ratio = n * martingale_weight(n, 0.75) ** 2 / (math.pi / 4.0)
    reports.append(TestReport("critical-weight-scaling", ratio, 1.0, 0.005, horizon=n,
                              provenance="analytic"))
    return reports


CATALOGUE: dict[str, Callable[[Context], list[TestReport]]] = {
    "sampler-equivalence": sampler_equivalence,
    "clt-diffusive": clt_diffusive,
    "clt-critical": clt_critical,
    "moment-oracle": moment_oracle,
    "martingale-identities": martingale_identities,
    "superdiffusive-limit": superdiffusive_limit,
    "qsl-diffusive": qsl_diffusive,
    "qsl-critical": qsl_critical,
    "special-functions": special_functions,
    "lil": lil,
}


def run(names: list[str], ctx: Context) -> list[TestReport]:
    unknown = [n for n in names if n not in CATALOGUE]
    if unknown:
        raise KeyError(", ".join(unknown))
    out = []
    for name in names:
        out.extend(CATALOGUE[name](ctx))
    return out


def gate_passed(reports: list[TestReport]) -> bool:
    return all(r.passed for r in reports if r.gate == "hard")
