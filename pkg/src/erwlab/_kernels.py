"""Compiled per-path simulation kernels.

Every path is a pure function of (seed, path index), so the parallel and
serial variants produce identical per-index outputs.
"""

import math

import numba
import numpy as np

from .rng import DITHER_SALT, nb_mix64, nb_stream_key, nb_uniform_at

LIL_START = 16

_U_SALT = np.uint64(DITHER_SALT)


@numba.njit(inline="always", cache=True)
def _spin(u, s, k, alpha):
    # P(X_{k+1} = +1 | S_k = s) = 1/2 + alpha * s / (2k)
    if u < 0.5 + alpha * s / (2.0 * k):
        return 1
    return -1


@numba.njit(cache=True)
def path_positions(key, p, q, n):
    alpha = 2.0 * p - 1.0
    out = np.empty(n, dtype=np.int64)
    s = 1 if nb_uniform_at(key, np.uint64(0)) < q else -1
    out[0] = s
    for k in range(1, n):
        s += _spin(nb_uniform_at(key, np.uint64(k)), s, k, alpha)
        out[k] = s
    return out


def _ensemble_body(seed, start, count, p, q, n, functionals, a2, terminal, qd, qc, ld, lc, bracket):
    alpha = 2.0 * p - 1.0
    alpha2 = alpha * alpha
    with_bracket = a2.shape[0] > 0
    for j in numba.prange(count):
        key = nb_stream_key(seed, np.uint64(start + j))
        s = 1 if nb_uniform_at(key, np.uint64(0)) < q else -1
        sum_d = 1.0
        sum_c = 0.0
        max_d = 0.0
        max_c = 0.0
        br = a2[0] if with_bracket else 0.0
        for k in range(1, n):
            if with_bracket:
                r = s / k
                br += a2[k] * (1.0 - alpha2 * r * r)
            s += _spin(nb_uniform_at(key, np.uint64(k)), s, k, alpha)
            if functionals:
                t = k + 1.0
                x = s / t
                x2 = x * x
                sum_d += x2
                lt = math.log(t)
                sum_c += x2 / (lt * lt)
                if k + 1 >= LIL_START:
                    llt = math.log(lt)
                    s2 = s * s
                    vd = s2 / (2.0 * t * llt)
                    vc = s2 / (2.0 * t * lt * math.log(llt))
                    if vd > max_d:
                        max_d = vd
                    if vc > max_c:
                        max_c = vc
        terminal[j] = s
        if functionals:
            qd[j] = sum_d
            qc[j] = sum_c
            ld[j] = max_d
            lc[j] = max_c
        if with_bracket:
            bracket[j] = br


ensemble_serial = numba.njit(cache=True)(_ensemble_body)
ensemble_parallel = numba.njit(cache=True, parallel=True)(_ensemble_body)


@numba.njit(cache=True)
def dither(seed, start, count):
    """U(-1, 1) per path from an auxiliary stream independent of the walk."""
    out = np.empty(count)
    for j in range(count):
        key = nb_mix64(nb_stream_key(seed, np.uint64(start + j)) ^ _U_SALT)
        out[j] = 2.0 * nb_uniform_at(key, np.uint64(0)) - 1.0
    return out
