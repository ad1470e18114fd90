"""Propagation kernel backends.

Two interchangeable implementations of segment propagation with forward
sensitivities: a Cython extension (`_core`) and a pure-numpy fallback
(`pure`). The compiled one is picked when it imports cleanly unless
``AEROREACH_PURE=1`` forces the fallback. Both share the packed parameter
and table layouts from `common`.
"""

import importlib
import os

from . import pure

_forced_pure = os.environ.get("AEROREACH_PURE", "") == "1"
_core = None
if not _forced_pure:
    try:
        _core = importlib.import_module(__name__ + "._core")
    except ImportError:
        _core = None

BACKEND = "pure" if _core is None else "compiled"


def propagate_segment_raw(*args, **kwargs):
    """Dispatch to the active backend; signature documented in kernels.pure."""
    if _core is not None:
        return _core.propagate_segment_raw(*args, **kwargs)
    return pure.propagate_segment_raw(*args, **kwargs)


def get_backend(name: str):
    """Explicit backend access for parity tests and benchmarks."""
    if name == "pure":
        return pure
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled kernel unavailable")
        return _core
    raise ValueError(name)
