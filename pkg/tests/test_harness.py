import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from erwlab.errors import DomainError
from erwlab.harness import (
    PowerSums,
    RunningFunctionals,
    TestReport,
    block_power_sums,
    clt_samples,
    compare_finite_n,
    compare_L,
    ensemble_qsl_critical,
    ensemble_qsl_diffusive,
    jackknife,
    kolmogorov_isf,
    kolmogorov_sf,
    ks_critical_distance,
    ks_statistic,
    kurtosis_from_raw,
    lil_statistic,
    martingale_diagnostics,
    qsl_critical,
    qsl_diffusive,
    scale_terminals,
    scaled_terminal,
)
from erwlab.moments import conditional_eps_moments, limit_moments
from erwlab.special import RegimeTag, WeightTable
from erwlab.walk import Trajectory, WalkParams, simulate, simulate_ensemble


def fixed_path(positions, p=0.5):
    return Trajectory(WalkParams(p, 0.5, len(positions)), np.asarray(positions, dtype=np.int64))


def zigzag(n):
    # S_k alternates 1, 0, 1, 0, ...
    return [1 if k % 2 else 0 for k in range(1, n + 1)]


# --- reports ---


def test_report_pass_rule():
    assert TestReport("a", 1.0, 1.5, 0.5).passed
    assert not TestReport("a", 1.0, 1.5, 0.4999).passed
    assert not TestReport("a", math.nan, 0.0, 1.0).passed
    d = TestReport("a", 1.0, 1.0, 0.0, seed=7).to_dict()
    assert d["passed"] and d["seed"] == 7 and d["gate"] == "hard"


# --- scaling ---


def test_scaled_terminal_examples():
    assert scaled_terminal(simulate(WalkParams(1.0, 1.0, 100))) == 1.0
    assert scale_terminals(np.array([30]), 900, 0.5)[0] == 1.0
    assert scale_terminals(np.array([0]), 1000, 0.75)[0] == 0.0
    assert scale_terminals(np.array([60]), 1000, 0.75)[0] == pytest.approx(60 / math.sqrt(1000 * math.log(1000)))
    with pytest.raises(DomainError):
        scaled_terminal(simulate(WalkParams(0.5, 0.5, 1)))


# --- functionals ---


def test_qsl_all_up_path():
    n = 500
    assert qsl_diffusive(fixed_path(range(1, n + 1), p=1.0)) == pytest.approx(n / math.log(n), rel=1e-14)


def test_qsl_critical_upper_bound():
    n = 2000
    traj = simulate(WalkParams(0.75, 0.5, n, 4))
    bound = math.fsum(1 / math.log(k) ** 2 for k in range(2, n + 1)) / math.log(math.log(n))
    assert qsl_critical(traj) <= bound
    assert qsl_critical(fixed_path(range(1, n + 1), p=1.0)) == pytest.approx(bound, rel=1e-12)


def test_qsl_critical_fixed_seed_regression():
    traj = simulate(WalkParams(0.75, 0.5, 10**5, 20170329))
    assert qsl_critical(traj) == pytest.approx(4.706570225738069, rel=1e-12)


def test_functional_domains():
    short = simulate(WalkParams(0.75, 0.5, 15))
    with pytest.raises(DomainError):
        qsl_critical(short)
    with pytest.raises(DomainError):
        lil_statistic(short)
    with pytest.raises(DomainError):
        qsl_diffusive(simulate(WalkParams(0.5, 0.5, 1)))
    with pytest.raises(DomainError):
        lil_statistic(simulate(WalkParams(0.9, 0.5, 100)))


def test_lil_zero_after_cutoff():
    # S_k = 0 at every even k, 1 at odd k: only odd k >= 17 contribute
    traj = fixed_path(zigzag(200))
    expected = max(1 / (2 * k * math.log(math.log(k))) for k in range(17, 201, 2))
    assert lil_statistic(traj, RegimeTag.DIFFUSIVE) == pytest.approx(expected, rel=1e-15)
    # values before the cutoff never enter the maxima
    rf = RunningFunctionals.from_positions(list(range(1, 16)) + [0] * 100)
    assert rf.lil_max_diffusive == 0.0 and rf.lil_max_critical == 0.0


def test_lil_running_max_monotone():
    params = WalkParams(0.5, 0.5, 5000, 12)
    traj = simulate(params)
    prev = 0.0
    for n in (16, 100, 1000, 5000):
        cut = Trajectory(WalkParams(0.5, 0.5, n, 12), traj.positions[:n])
        val = lil_statistic(cut)
        assert val >= prev
        prev = val


@given(st.integers(0, 2**32), st.floats(0.0, 1.0), st.integers(1, 400))
def test_incremental_equals_recomputed(seed, p, n):
    traj = simulate(WalkParams(p, 0.5, n, seed))
    inc = RunningFunctionals.accumulate(traj.positions)
    ref = RunningFunctionals.from_positions(traj.positions)
    assert inc.n == ref.n == n
    for name in ("qsl_diffusive_sum", "qsl_critical_sum", "lil_max_diffusive", "lil_max_critical"):
        assert getattr(inc, name) == pytest.approx(getattr(ref, name), rel=1e-12, abs=1e-300)


def test_running_functionals_nondecreasing():
    traj = simulate(WalkParams(0.7, 0.5, 3000, 5))
    rf = RunningFunctionals()
    last = (0.0, 0.0, 0.0, 0.0)
    for s in traj.positions:
        rf.update(int(s))
        cur = (rf.qsl_diffusive_sum, rf.qsl_critical_sum, rf.lil_max_diffusive, rf.lil_max_critical)
        assert all(c >= l for c, l in zip(cur, last))
        last = cur


def test_ensemble_functionals_match_per_path():
    params = WalkParams(0.75, 0.5, 4000, 31)
    res = simulate_ensemble(params, 12)
    for j in range(12):
        rf = RunningFunctionals.from_positions(simulate(params, j).positions)
        assert res.qsl_diffusive_sum[j] == pytest.approx(rf.qsl_diffusive_sum, rel=1e-12)
        assert res.qsl_critical_sum[j] == pytest.approx(rf.qsl_critical_sum, rel=1e-12)
        assert res.lil_max_diffusive[j] == pytest.approx(rf.lil_max_diffusive, rel=1e-12)
        assert res.lil_max_critical[j] == pytest.approx(rf.lil_max_critical, rel=1e-12)
    assert ensemble_qsl_diffusive(res)[0] == pytest.approx(qsl_diffusive(simulate(params, 0)), rel=1e-12)
    assert ensemble_qsl_critical(res)[3] == pytest.approx(qsl_critical(simulate(params, 3)), rel=1e-12)


# --- Kolmogorov-Smirnov ---


def test_ks_examples():
    n = 1000
    q = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_statistic(q).D <= 0.0005 + 1e-15
    assert ks_statistic([0.0]).D == 0.5
    assert ks_statistic(np.full(50, 10.0)).D == pytest.approx(1.0, abs=1e-20)
    with pytest.raises(DomainError):
        ks_statistic([])


@given(st.lists(st.floats(-6, 6), min_size=2, max_size=300), st.floats(0.2, 5.0))
def test_ks_matches_scipy_distance(xs, var):
    ours = ks_statistic(xs, var)
    ref = stats.kstest(xs, stats.norm(scale=math.sqrt(var)).cdf, method="asymp")
    assert ours.D == pytest.approx(ref.statistic, abs=1e-12)
    assert 0.0 <= ours.D <= 1.0 and 0.0 <= ours.p_value <= 1.0


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=200))
def test_ks_invariant_under_monotone_transform(xs):
    base = ks_statistic(xs)
    # exp is strictly increasing; push the reference forward with it
    ys = np.exp(xs)
    assert ks_statistic(ys, cdf=lambda y: stats.norm.cdf(np.log(y))).D == pytest.approx(base.D, abs=1e-12)


@pytest.mark.parametrize("lam", [0.2, 0.5, 0.8, 0.99, 1.0, 1.2, 1.5, 2.5])
def test_kolmogorov_sf_against_scipy(lam):
    assert kolmogorov_sf(lam) == pytest.approx(stats.kstwobign.sf(lam), abs=1e-10)


def test_kolmogorov_isf_roundtrip():
    for a in (0.5, 0.05, 0.01, 0.001):
        assert kolmogorov_sf(kolmogorov_isf(a)) == pytest.approx(a, rel=1e-9)
    assert ks_critical_distance(10_000, 0.01) == pytest.approx(
        stats.kstwobign.isf(0.01) / (100 + 0.12 + 0.0011), rel=1e-9)


def test_ks_p_value_matches_scipy_for_large_samples():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(5000)
    ours = ks_statistic(x)
    ref = stats.kstest(x, "norm", method="asymp")
    assert ours.p_value == pytest.approx(ref.pvalue, abs=0.02)


def test_clt_samples_dither_is_small():
    res = simulate_ensemble(WalkParams(0.5, 0.5, 10_000, 3), 200, functionals=False)
    raw = clt_samples(res, dither=False)
    smooth = clt_samples(res)
    assert np.array_equal(raw, res.terminal / 100.0)
    assert np.all(np.abs(smooth - raw) < 0.01)


# --- martingale diagnostics ---


def test_martingale_memoryless():
    traj = simulate(WalkParams(0.5, 0.5, 1000, 1))
    m, br = martingale_diagnostics(traj, WeightTable.build(0.5, 1000))
    assert np.array_equal(br, np.arange(1, 1001, dtype=float))
    assert np.array_equal(m, traj.positions.astype(float))


@pytest.mark.parametrize("p", [0.1, 0.6, 0.75, 0.95, 1.0])
def test_bracket_below_v(p):
    n = 5000
    w = WeightTable.build(p, n)
    for i in range(20):
        _, br = martingale_diagnostics(simulate(WalkParams(p, 0.3, n, 9), i), w)
        assert np.all(br <= w.v_seq * (1 + 1e-12))


def test_bracket_uses_conditional_variance():
    p, n = 0.8, 300
    traj = simulate(WalkParams(p, 0.5, n, 2))
    w = WeightTable.build(p, n)
    _, br = martingale_diagnostics(traj, w)
    ref = [1.0] + [conditional_eps_moments(int(traj.positions[k - 1]), k, p)[0] for k in range(1, n)]
    assert br == pytest.approx(np.cumsum(w.a_seq**2 * np.array(ref)), rel=1e-13)


def test_bracket_ratio_memoryless_ensemble():
    n, w = 10_000, WeightTable.build(0.5, 10_000)
    res = simulate_ensemble(WalkParams(0.5, 0.5, n, 6), 1000, functionals=False, weights=w)
    assert np.mean(res.bracket / w.v_seq[-1]) == pytest.approx(1.0, rel=0.02)


def test_ensemble_bracket_matches_diagnostics():
    p, n = 0.85, 2000
    w = WeightTable.build(p, n)
    params = WalkParams(p, 0.5, n, 77)
    res = simulate_ensemble(params, 8, weights=w)
    for j in range(8):
        _, br = martingale_diagnostics(simulate(params, j), w)
        assert res.bracket[j] == pytest.approx(br[-1], rel=1e-12)


def test_martingale_mismatch():
    traj = simulate(WalkParams(0.6, 0.5, 100))
    with pytest.raises(DomainError):
        martingale_diagnostics(traj, WeightTable.build(0.6, 99))
    with pytest.raises(DomainError):
        martingale_diagnostics(traj, WeightTable.build(0.7, 100))


# --- moment comparison ---


def test_power_sums_merge_is_associative_and_exact():
    rng = np.random.default_rng(1)
    x = rng.integers(-10**5, 10**5, size=3000)
    parts = [PowerSums.from_integers(c) for c in np.array_split(x, 7)]
    left = parts[0]
    for p in parts[1:]:
        left = left.merge(p)
    right = parts[-1]
    for p in reversed(parts[:-1]):
        right = p.merge(right)
    whole = PowerSums.from_integers(x)
    assert left == right == whole
    assert (whole - parts[0]).count == 3000 - len(np.array_split(x, 7)[0])


def test_jackknife_mean_standard_error():
    rng = np.random.default_rng(2)
    x = rng.integers(-50, 50, size=10_000)
    blocks = block_power_sums(x, 100)
    est, se = jackknife(blocks, 1.0, lambda m: m)
    assert est[0] == pytest.approx(x.mean(), rel=1e-12)
    means = np.array([b.sums[0] / b.count for b in blocks])
    assert se[0] == pytest.approx(means.std(ddof=1) / 10, rel=1e-9)


def test_kurtosis_from_raw_normal_and_degenerate():
    assert kurtosis_from_raw(np.array([0.0, 1.0, 0.0, 3.0])) == 3.0
    assert math.isnan(kurtosis_from_raw(np.array([1.0, 1.0, 1.0, 1.0])))


def test_compare_L_persistent():
    n = 100
    res = simulate_ensemble(WalkParams(1.0, 1.0, n, 3), 500, functionals=False)
    reports = {r.name: r for r in compare_L(res.terminal, n, 1.0, 1.0)}
    for k in (1, 2, 3, 4):
        r = reports[f"L-moment-{k}"]
        assert r.observed == 1.0 and r.expected == 1.0 and r.passed


def test_compare_L_symmetry_and_domain():
    n, p = 2000, 0.9
    res = simulate_ensemble(WalkParams(p, 0.5, n, 13), 20_000, functionals=False)
    reports = {r.name: r for r in compare_L(res.terminal, n, p, 0.5)}
    for k in (1, 3):
        r = reports[f"L-moment-{k}"]
        assert abs(r.observed) <= 4 * r.standard_error
    assert reports["L-kurtosis"].expected == pytest.approx(limit_moments(p, 0.5).kurtosis)
    with pytest.raises(DomainError):
        compare_L(res.terminal, n, 0.75, 0.5)


def test_compare_finite_n_unbiased():
    n, p = 1000, 0.85
    res = simulate_ensemble(WalkParams(p, 0.3, n, 21), 20_000, functionals=False)
    for r in compare_finite_n(res.terminal, n, p, 0.3):
        assert abs(r.observed - r.expected) <= 4 * r.standard_error
