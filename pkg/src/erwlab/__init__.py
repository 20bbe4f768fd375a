"""Simulation and verification laboratory for the elephant random walk."""

import numba as _numba

# The bundled TBB is too old for numba; the workqueue layer is always present.
_numba.config.THREADING_LAYER = "workqueue"

__version__ = "0.1.0"
