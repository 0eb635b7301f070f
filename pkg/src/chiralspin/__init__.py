"""Exact diagonalization, chirality witnesses and mean-field theory for
Heisenberg plus scalar-chirality spin-1/2 models on triangular geometries."""

import numba as _numba

# the bundled TBB is too old for numba; fall back quietly
_numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

__version__ = "0.1.0"
