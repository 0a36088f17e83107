"""Backend selection for the hot numeric kernels.

The numba-compiled kernels are used by default. Set the environment
variable ``INSTASCOPE_NO_NUMBA=1`` before import to force the pure-numpy
path (also taken automatically when numba is not importable). The active
backend name is exposed as ``BACKEND`` and recorded in experiment
metadata sidecars; results are deterministic within a backend but may
differ between backends at rounding level.

``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

import os

_DISABLED = os.environ.get("INSTASCOPE_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

if not _DISABLED:
    try:
        from .numba_impl import (  # noqa: F401
            BACKEND,
            kde_gaussian,
            nearest_and_better,
            nn_tour_order,
            pairwise_distances,
            tasy,
            tosz,
        )
    except ImportError:
        _DISABLED = True

if _DISABLED:
    from .numpy_impl import (  # noqa: F401
        BACKEND,
        kde_gaussian,
        nearest_and_better,
        nn_tour_order,
        pairwise_distances,
        tasy,
        tosz,
    )
