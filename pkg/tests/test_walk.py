import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from erwlab.errors import InvalidStateError
from erwlab.moments import enumerate_distribution
from erwlab.rng import CounterStream
from erwlab.walk import (
    Trajectory,
    WalkParams,
    WalkState,
    advance,
    advance_with_history,
    copy_outcomes,
    first_step,
    history_distribution,
    iter_trajectories,
    set_threads,
    simulate,
    simulate_ensemble,
    simulate_stepwise,
    step_probability,
)

probs = st.floats(0.0, 1.0)


@st.composite
def reachable(draw):
    n = draw(st.integers(1, 10**9))
    s = draw(st.integers(-n, n))
    if (n - s) % 2:
        s += 1 if s < n else -1
    return s, n


# --- parameters and states ---


@pytest.mark.parametrize("kw", [
    dict(memory_p=-0.1, first_q=0.5, horizon_n=5),
    dict(memory_p=0.5, first_q=1.5, horizon_n=5),
    dict(memory_p=0.5, first_q=0.5, horizon_n=0),
    dict(memory_p=0.5, first_q=0.5, horizon_n=5, seed=-1),
    dict(memory_p=0.5, first_q=0.5, horizon_n=5, seed=2**64),
])
def test_params_rejected(kw):
    with pytest.raises(ValueError):
        WalkParams(**kw)


def test_params_alpha():
    assert WalkParams(0.85, 0.5, 10).alpha == pytest.approx(0.7)


@pytest.mark.parametrize("n,s", [(3, 4), (3, 2), (2, -3), (-1, -1)])
def test_state_invariants(n, s):
    with pytest.raises(InvalidStateError):
        WalkState(n, s)


def test_trajectory_invariants():
    params = WalkParams(0.5, 0.5, 3)
    Trajectory(params, np.array([1, 2, 1]))
    with pytest.raises(InvalidStateError):
        Trajectory(params, np.array([1, 3, 2]))
    with pytest.raises(InvalidStateError):
        Trajectory(params, np.array([0, 1, 2]))
    with pytest.raises(InvalidStateError):
        Trajectory(params, np.array([1, 2]))


# --- first step ---


def test_first_step_degenerate():
    rng = CounterStream(123)
    assert all(first_step(1.0, rng) == 1 for _ in range(1000))
    assert all(first_step(0.0, rng) == -1 for _ in range(1000))


def test_first_step_fair_mean():
    rng = CounterStream(99)
    total = sum(first_step(0.5, rng) for _ in range(10**6))
    assert abs(total / 10**6) <= 4 / math.sqrt(10**6)


# --- step probability ---


def test_step_probability_examples():
    assert step_probability(2, 4, 0.75) == 0.625
    assert step_probability(7, 7, 1.0) == 1.0
    for s, n in [(1, 1), (-3, 5), (10, 20)]:
        assert step_probability(s, n, 0.5) == 0.5


@given(reachable(), probs)
def test_step_probability_in_unit_interval(sn, p):
    s, n = sn
    v = step_probability(s, n, p)
    assert 0.0 <= v <= 1.0
    assert 2.0 * v - 1.0 == pytest.approx((2 * p - 1) * s / n, abs=1e-15)


@pytest.mark.parametrize("s,n", [(1, 0), (0, 0), (3, 2), (2, 3)])
def test_step_probability_invalid_state(s, n):
    with pytest.raises(InvalidStateError):
        step_probability(s, n, 0.5)


# --- advance ---


def test_advance_persistent():
    assert advance(WalkState(3, 3), 1.0, CounterStream(5)) == WalkState(4, 4)


@pytest.mark.parametrize("p,expected", [(0.5, {0: 0.5, 2: 0.5}), (0.75, {2: 0.75, 0: 0.25})])
def test_advance_law_from_first_step(p, expected):
    # the step law is P(u < prob) for u uniform on the 2^-53 grid
    prob = step_probability(1, 1, p)
    assert prob == expected[2]
    rng = CounterStream(2024)
    draws = [advance(WalkState(1, 1), p, rng).s for _ in range(200_000)]
    frac = np.mean(np.array(draws) == 2)
    assert abs(frac - expected[2]) < 4 * math.sqrt(prob * (1 - prob) / len(draws))


@given(st.integers(0, 2**63), probs, st.integers(1, 60))
def test_parity_preserved(key, p, steps):
    rng = CounterStream(key)
    state = WalkState(1, first_step(0.5, rng))
    for _ in range(steps):
        state = advance(state, p, rng)
        assert (state.n - state.s) % 2 == 0 and abs(state.s) <= state.n


# --- history sampler ---


def test_history_sampler_examples():
    assert advance_with_history([1], 1.0, CounterStream(1)) == 1
    out = copy_outcomes([1, 1, 1, -1], 0.75)
    assert math.fsum(w for w, x in out if x == 1) == pytest.approx(0.625, abs=1e-15)
    rng = CounterStream(77)
    draws = np.array([advance_with_history([1, 1, 1, -1], 0.75, rng) for _ in range(200_000)])
    assert abs(np.mean(draws == 1) - 0.625) < 4 * math.sqrt(0.625 * 0.375 / len(draws))


def test_history_sampler_empty():
    with pytest.raises(InvalidStateError):
        advance_with_history([], 0.5, CounterStream(1))
    with pytest.raises(InvalidStateError):
        copy_outcomes([], 0.5)


def test_copy_outcomes_reproduce_step_probability():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        hist = rng.choice([-1, 1], size=n)
        p = float(rng.uniform())
        up = math.fsum(w for w, x in copy_outcomes(list(hist), p) if x == 1)
        assert up == pytest.approx(step_probability(int(hist.sum()), n, p), abs=1e-14)


@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
@pytest.mark.parametrize("q", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_sampler_equivalence(p, q):
    for n in range(1, 13):
        a = history_distribution(n, p, q)
        b = enumerate_distribution(n, p, q)
        assert a.keys() == b.keys()
        assert max(abs(a[s] - b[s]) for s in a) <= 1e-12
        assert math.fsum(a.values()) == pytest.approx(1.0, abs=1e-12)


def test_history_distribution_limits():
    with pytest.raises(ValueError):
        history_distribution(25, 0.5, 0.5)


# --- simulate ---


def test_simulate_degenerate():
    assert list(simulate(WalkParams(1.0, 1.0, 10, 5)).positions) == list(range(1, 11))
    assert list(simulate(WalkParams(1.0, 0.0, 10, 5)).positions) == list(range(-1, -11, -1))


def test_simulate_deterministic_and_matches_stepwise():
    params = WalkParams(0.6, 0.3, 2000, 11)
    a = simulate(params, 4)
    b = simulate(params, 4)
    c = simulate_stepwise(params, 4)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.positions, c.positions)
    assert not np.array_equal(a.positions, simulate(params, 5).positions)


def test_iter_trajectories_uses_path_index():
    params = WalkParams(0.3, 0.5, 50, 8)
    trajs = list(iter_trajectories(params, 3, start=2))
    assert [t.stream for t in trajs] == [2, 3, 4]
    assert np.array_equal(trajs[0].positions, simulate(params, 2).positions)


# --- ensembles ---


def test_ensemble_single_path_equals_simulate():
    params = WalkParams(0.8, 0.4, 500, 17)
    res = simulate_ensemble(params, 1)
    assert res.terminal[0] == simulate(params, 0).terminal


def test_ensemble_serial_parallel_chunked_identical():
    params = WalkParams(0.7, 0.5, 3000, 99)
    ser = simulate_ensemble(params, 64, parallel=False)
    par = simulate_ensemble(params, 64, parallel=True)
    chunks = [simulate_ensemble(params, 16, start=s) for s in (48, 0, 32, 16)]
    chunks.sort(key=lambda r: r.start)
    for name in ("terminal", "qsl_diffusive_sum", "qsl_critical_sum",
                 "lil_max_diffusive", "lil_max_critical"):
        assert np.array_equal(getattr(ser, name), getattr(par, name))
        assert np.array_equal(getattr(ser, name), np.concatenate([getattr(c, name) for c in chunks]))
    terms = [simulate(params, i).terminal for i in range(64)]
    assert list(ser.terminal) == terms


def test_ensemble_independent_of_thread_count():
    params = WalkParams(0.5, 0.5, 1000, 3)
    set_threads(1)
    one = simulate_ensemble(params, 40).terminal
    set_threads(0)
    assert np.array_equal(one, simulate_ensemble(params, 40).terminal)


def test_ensemble_mean_symmetric():
    res = simulate_ensemble(WalkParams(0.5, 0.5, 1000, 2024), 10**5, functionals=False)
    assert abs(res.terminal.mean()) <= 4 * math.sqrt(1000 / 10**5)


def test_ensemble_rejects_empty():
    with pytest.raises(ValueError):
        simulate_ensemble(WalkParams(0.5, 0.5, 10), 0)


def test_dither_range_and_determinism():
    res = simulate_ensemble(WalkParams(0.5, 0.5, 10, 1), 5000, functionals=False)
    d = res.dither()
    assert np.all((d >= -1) & (d < 1))
    assert np.array_equal(d, res.dither())
    assert abs(d.mean()) < 4 * math.sqrt(1 / 3 / len(d))
