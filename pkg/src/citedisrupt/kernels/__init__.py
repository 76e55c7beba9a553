"""Hot loops of the indicator engine, with a numba and a pure-numpy backend.

The numba backend is used when numba imports and ``CITEDISRUPT_NUMBA`` is not
set to ``0``. Both backends expose the same functions and must return
identical integers; the test-suite runs every kernel test against each.
"""
import os
import types

from . import _numpy as numpy_backend
from ._numpy import (  # noqa: F401
    COL_CITERS,
    COL_COUPLING_SUM,
    COL_NK,
    COL_UNKNOWN,
    COL_ZERO,
    N_FIXED_COLS,
    YEAR_MISSING,
)

ENV_FLAG = "CITEDISRUPT_NUMBA"

_KERNEL_NAMES = ("merge_count", "citer_couplings", "count_nk", "batch_counts")


def _load_numba():
    try:
        from . import _numba
    except ImportError:
        return None
    return _numba


def _wanted():
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in ("0", "false", "no", "off")


numba_backend = _load_numba() if _wanted() else None


def available_backends():
    names = ["numpy"]
    if numba_backend is not None or _load_numba() is not None:
        names.append("numba")
    return names


def get_backend(name=None):
    """Return a namespace of kernel functions for ``name`` (default: active)."""
    if name is None:
        name = BACKEND
    if name == "numpy":
        mod = numpy_backend
    elif name == "numba":
        mod = numba_backend or _load_numba()
        if mod is None:
            raise ImportError("numba backend requested but numba is not importable")
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return types.SimpleNamespace(name=name, **{k: getattr(mod, k) for k in _KERNEL_NAMES})


BACKEND = "numba" if numba_backend is not None else "numpy"
