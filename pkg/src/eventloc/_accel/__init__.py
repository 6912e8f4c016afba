"""Backend selection for the phase-sum kernel.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``EVENTLOC_FORCE_FALLBACK`` (to anything non-empty)
before import forces the numpy implementation.  Both backends implement the
same contract, see :func:`eventloc._accel._phase_np.phase_sum`.
"""

import os

from . import _phase_np

try:
    from . import _phase_cy
except ImportError:
    _phase_cy = None

if os.environ.get("EVENTLOC_FORCE_FALLBACK") or _phase_cy is None:
    _impl = _phase_np
    BACKEND = "numpy"
else:
    _impl = _phase_cy
    BACKEND = "cython"


def phase_sum(k, amps, x):
    return _impl.phase_sum(k, amps, x)


def available_backends():
    """Names of the importable backends, fallback first."""
    names = ["numpy"]
    if _phase_cy is not None:
        names.append("cython")
    return names


def get_backend(name):
    """Return the module implementing ``phase_sum`` for an explicit backend."""
    if name == "numpy":
        return _phase_np
    if name == "cython":
        if _phase_cy is None:
            raise ValueError("compiled backend not available in this install")
        return _phase_cy
    raise ValueError(f"unknown backend {name!r}")
