"""Kernel dispatch: numba-compiled loops by default, pure numpy on request.

Set BIFLAB_PURE_NUMPY=1 to force the numpy path (also taken automatically when
numba is unavailable). Both backends expose the same three entry points:

    potential_points(lams, d, pnum, pden, anum, aden, iter_budget, tol)
    orbit_batch(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
                n_max, checks, crit)
    hn_forward(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden, n)

benchmarks/bench_kernels.py compares the two.
"""

import os

_FLAG = os.environ.get("BIFLAB_PURE_NUMPY", "").strip().lower()
_FORCE_NUMPY = _FLAG in ("1", "true", "yes", "on")


def load_impl(name):
    """Explicit backend loader ('numba' or 'numpy'), used by tests/benchmarks."""
    if name == "numba":
        from . import numba_impl
        return numba_impl
    if name == "numpy":
        from . import numpy_impl
        return numpy_impl
    raise ValueError(f"unknown kernel backend {name!r}")


if _FORCE_NUMPY:
    _impl = load_impl("numpy")
    BACKEND = "numpy"
else:
    try:
        _impl = load_impl("numba")
        BACKEND = "numba"
    except ImportError:
        _impl = load_impl("numpy")
        BACKEND = "numpy"

potential_points = _impl.potential_points
orbit_batch = _impl.orbit_batch
hn_forward = _impl.hn_forward


def set_threads(n):
    """Cap worker threads for the compiled backend (no-op on numpy)."""
    if BACKEND == "numba":
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
