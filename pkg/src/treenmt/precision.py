"""Global numeric precision mode.

Training defaults to float32.  Gradient checking needs float64: central
finite differences lose too many digits in single precision.  The active
dtype is consulted when new parameter blocks or state vectors are
allocated; existing arrays keep the dtype they were created with.
"""
from contextlib import contextmanager

import numpy as np

FLOAT32 = np.float32
FLOAT64 = np.float64

_ACTIVE = {"dtype": FLOAT32}

_NAMES = {
    "float32": FLOAT32,
    "float64": FLOAT64,
    "f4": FLOAT32,
    "f8": FLOAT64,
}


def resolve_dtype(spec):
    """Map a dtype or mode name to one of the two supported dtypes."""
    if spec is None:
        return active_dtype()
    if isinstance(spec, str):
        try:
            return _NAMES[spec]
        except KeyError:
            raise ValueError(f"unknown precision {spec!r}; use float32 or float64") from None
    dt = np.dtype(spec)
    if dt == np.float32:
        return FLOAT32
    if dt == np.float64:
        return FLOAT64
    raise ValueError(f"unsupported dtype {dt}; use float32 or float64")


def active_dtype():
    return _ACTIVE["dtype"]


def set_precision(spec):
    _ACTIVE["dtype"] = resolve_dtype(spec)


@contextmanager
def precision(spec):
    """Temporarily switch the active dtype (used by tests and grad checks)."""
    prev = _ACTIVE["dtype"]
    _ACTIVE["dtype"] = resolve_dtype(spec)
    try:
        yield
    finally:
        _ACTIVE["dtype"] = prev


def zeros(shape, dtype=None):
    return np.zeros(shape, dtype=resolve_dtype(dtype))
