"""Backend selection for the hot numeric kernels.

Two interchangeable implementations exist for every hot loop: a numba
``@njit`` version and a pure-numpy version.  The default is chosen once at
import time from the ``RAMPFLOW_BACKEND`` environment variable ("numba" or
"numpy"; numba is used when the variable is unset and numba imports).
Callers can override per run via the ``backend=`` keyword threaded through
the solver and experiment entry points.
"""

import os
import warnings

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_requested = os.environ.get("RAMPFLOW_BACKEND", "").strip().lower()

if _requested == "numpy":
    DEFAULT_BACKEND = "numpy"
elif _requested in ("", "numba"):
    DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"
    if _requested == "numba" and not HAVE_NUMBA:
        warnings.warn(
            "RAMPFLOW_BACKEND=numba requested but numba could not be imported; "
            "using the pure-numpy kernels",
            RuntimeWarning,
        )
else:
    warnings.warn(
        f"unknown RAMPFLOW_BACKEND={_requested!r}; expected 'numba' or 'numpy', "
        "using the default",
        RuntimeWarning,
    )
    DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"


def resolve_backend(name: str | None) -> str:
    """Map a requested backend name (or None) to an available backend."""
    if name is None:
        return DEFAULT_BACKEND
    name = name.strip().lower()
    if name == "numpy":
        return "numpy"
    if name == "numba":
        if HAVE_NUMBA:
            return "numba"
        warnings.warn(
            "numba backend requested but numba is unavailable; using numpy",
            RuntimeWarning,
        )
        return "numpy"
    raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
