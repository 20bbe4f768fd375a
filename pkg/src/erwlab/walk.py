"""Exact ERW samplers and ensemble generation.

The canonical sampler uses the sufficient statistic S_n: given the past, the
next step is +1 with probability 1/2 + (2p - 1) S_n / (2n). The full-history
sampler (recall a uniformly chosen past step, keep it with probability p,
flip it otherwise) is kept only as a test oracle.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels
from .errors import InvalidStateError
from .rng import MASK64, CounterStream, stream_key
from .special import WeightTable

MAX_HORIZON = 2**62


@dataclass(frozen=True)
class WalkParams:
    """Memory p, first-step bias q, horizon n and base seed of an experiment."""

    memory_p: float
    first_q: float
    horizon_n: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.memory_p <= 1.0:
            raise ValueError(f"memory_p must lie in [0, 1], got {self.memory_p}")
        if not 0.0 <= self.first_q <= 1.0:
            raise ValueError(f"first_q must lie in [0, 1], got {self.first_q}")
        if not 1 <= self.horizon_n <= MAX_HORIZON:
            raise ValueError(f"horizon_n must lie in [1, 2**62], got {self.horizon_n}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def alpha(self) -> float:
        return 2.0 * self.memory_p - 1.0


@dataclass(frozen=True)
class WalkState:
    n: int
    s: int

    def __post_init__(self):
        check_state(self.s, self.n)


def check_state(s: int, n: int) -> None:
    if n < 0 or abs(s) > n or (n - s) % 2:
        raise InvalidStateError(f"unreachable state (n={n}, s={s})")


@dataclass(frozen=True)
class Trajectory:
    params: WalkParams
    positions: np.ndarray = field(repr=False)  # S_1..S_n, int64
    stream: int = 0

    def __post_init__(self):
        pos = self.positions
        if len(pos) != self.params.horizon_n:
            raise InvalidStateError(
                f"expected {self.params.horizon_n} positions, got {len(pos)}"
            )
        if abs(int(pos[0])) != 1 or np.any(np.abs(np.diff(pos)) != 1):
            raise InvalidStateError("positions must start at ±1 and move by ±1")

    @property
    def horizon(self) -> int:
        return self.params.horizon_n

    @property
    def terminal(self) -> int:
        return int(self.positions[-1])


def first_step(q: float, rng: CounterStream) -> int:
    """X_1: +1 with probability q."""
    return 1 if rng.uniform() < q else -1


def step_probability(s: int, n: int, p: float) -> float:
    """P(X_{n+1} = +1 | S_n = s)."""
    if n < 1:
        raise InvalidStateError("step_probability is undefined before the first step")
    check_state(s, n)
    return 0.5 + (2.0 * p - 1.0) * s / (2.0 * n)


def advance(state: WalkState, p: float, rng: CounterStream) -> WalkState:
    prob = step_probability(state.s, state.n, p)
    step = 1 if rng.uniform() < prob else -1
    return WalkState(state.n + 1, state.s + step)


def copy_outcomes(history: Sequence[int], p: float) -> list[tuple[float, int]]:
    """All (probability, spin) outcomes of one history-sampler step.

    Enumerates the recalled index β (uniform on 1..n) and the keep/flip coin α.
    """
    if len(history) == 0:
        raise InvalidStateError("history must contain at least the first step")
    n = len(history)
    out = []
    for x in history:
        out.append((p / n, int(x)))
        out.append(((1.0 - p) / n, -int(x)))
    return out


def advance_with_history(history: Sequence[int], p: float, rng: CounterStream) -> int:
    """Draw X_{n+1} = α X_β from the full history X_1..X_n."""
    if len(history) == 0:
        raise InvalidStateError("history must contain at least the first step")
    n = len(history)
    beta = min(int(rng.uniform() * n), n - 1)
    keep = rng.uniform() < p
    x = int(history[beta])
    return x if keep else -x


def simulate(params: WalkParams, stream: int = 0) -> Trajectory:
    """One path using substream ``stream`` of ``params.seed``."""
    key = np.uint64(stream_key(params.seed, stream))
    pos = _kernels.path_positions(key, params.memory_p, params.first_q, params.horizon_n)
    return Trajectory(params, pos, stream)


def simulate_stepwise(params: WalkParams, stream: int = 0) -> Trajectory:
    """Same path as :func:`simulate`, composed from the step-level API."""
    rng = CounterStream.for_path(params.seed, stream)
    state = WalkState(1, first_step(params.first_q, rng))
    pos = np.empty(params.horizon_n, dtype=np.int64)
    pos[0] = state.s
    for k in range(1, params.horizon_n):
        state = advance(state, params.memory_p, rng)
        pos[k] = state.s
    return Trajectory(params, pos, stream)


def iter_trajectories(params: WalkParams, n_paths: int, start: int = 0) -> Iterator[Trajectory]:
    for i in range(start, start + n_paths):
        yield simulate(params, i)


@dataclass
class EnsembleResult:
    """Terminal values and per-path functionals, indexed by path number."""

    params: WalkParams
    start: int
    terminal: np.ndarray
    qsl_diffusive_sum: np.ndarray | None = None
    qsl_critical_sum: np.ndarray | None = None
    lil_max_diffusive: np.ndarray | None = None
    lil_max_critical: np.ndarray | None = None
    bracket: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return len(self.terminal)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.n_paths)

    def dither(self) -> np.ndarray:
        """U(-1, 1) per path from an auxiliary stream, for lattice smoothing."""
        return _kernels.dither(np.uint64(self.params.seed), self.start, self.n_paths)


def set_threads(threads: int) -> int:
    """Apply a parallelism degree (0 = all available); returns the count used."""
    avail = numba.config.NUMBA_NUM_THREADS
    used = avail if threads <= 0 else min(threads, avail)
    numba.set_num_threads(used)
    return used


def simulate_ensemble(
    params: WalkParams,
    n_paths: int,
    *,
    start: int = 0,
    functionals: bool = True,
    weights: WeightTable | None = None,
    parallel: bool = True,
) -> EnsembleResult:
    """Simulate paths ``start .. start + n_paths - 1`` without storing them.

    Path i always uses substream i of ``params.seed``, so the result does not
    depend on chunking or on the number of threads. Passing ``weights``
    additionally accumulates the predictable quadratic variation <M>_n.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    n = params.horizon_n
    if weights is not None:
        if weights.horizon != n or weights.p != params.memory_p:
            raise ValueError("weight table does not match the walk parameters")
        a2 = np.ascontiguousarray(weights.a_seq * weights.a_seq)
    else:
        a2 = np.empty(0)
    terminal = np.empty(n_paths, dtype=np.int64)
    size = n_paths if functionals else 0
    qd, qc, ld, lc = (np.zeros(size) for _ in range(4))
    bracket = np.zeros(n_paths if weights is not None else 0)
    kernel = _kernels.ensemble_parallel if parallel else _kernels.ensemble_serial
    kernel(
        np.uint64(params.seed), start, n_paths, params.memory_p, params.first_q, n,
        functionals, a2, terminal, qd, qc, ld, lc, bracket,
    )
    res = EnsembleResult(params, start, terminal)
    if functionals:
        res.qsl_diffusive_sum, res.qsl_critical_sum = qd, qc
        res.lil_max_diffusive, res.lil_max_critical = ld, lc
    if weights is not None:
        res.bracket = bracket
    return res


def history_distribution(n: int, p: float, q: float) -> dict[int, float]:
    """Exact pmf of S_n from the full-history rule, enumerating every history.

    Each of the 2^(n-1) histories carries its own probability; the next-step
    law is obtained by enumerating the recalled index and the keep/flip coin,
    so nothing here assumes that S_n is a sufficient statistic.
    """
    if not 1 <= n <= 24:
        raise ValueError(f"history enumeration supports 1 <= n <= 24, got {n}")
    hist = np.array([[1], [-1]], dtype=np.int8)
    prob = np.array([q, 1.0 - q])
    for k in range(1, n):
        # P(X_{k+1} = +1 | history): sum over β of (1/k)(p·[X_β=+1] + (1-p)·[X_β=-1])
        up = (p * (hist == 1) + (1.0 - p) * (hist == -1)).sum(axis=1) / k
        hist = np.concatenate(
            [np.hstack([hist, np.ones((len(hist), 1), np.int8)]),
             np.hstack([hist, -np.ones((len(hist), 1), np.int8)])]
        )
        prob = np.concatenate([prob * up, prob * (1.0 - up)])
    final = hist.sum(axis=1, dtype=np.int64)
    out: dict[int, float] = {s: 0.0 for s in range(-n, n + 1, 2)}
    for s in out:
        out[s] = float(np.sum(prob[final == s]))
    return out
