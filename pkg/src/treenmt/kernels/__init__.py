"""Backend selection for the recurrent cell kernels.

The compiled extension is preferred when it imported cleanly; otherwise the
numpy fallback is used.  Callers go through this module's attributes
(``kernels.lstm_forward`` etc.) so ``set_backend`` can swap implementations
at runtime, which the benchmark relies on.  The ``TREENMT_BACKEND``
environment variable ("ext", "pure" or "auto") pins the choice at import.
"""
import os

from . import pure

_BACKENDS = {"pure": pure}
try:
    from . import _core as _ext_module

    _BACKENDS["ext"] = _ext_module
except ImportError:
    _ext_module = None

BACKEND = None
lstm_forward = None
lstm_backward = None
tree_forward = None
tree_backward = None


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    global BACKEND, lstm_forward, lstm_backward, tree_forward, tree_backward
    try:
        mod = _BACKENDS[name]
    except KeyError:
        raise RuntimeError(
            f"kernel backend {name!r} not available; choices: {available_backends()}"
        ) from None
    lstm_forward = mod.lstm_forward
    lstm_backward = mod.lstm_backward
    tree_forward = mod.tree_forward
    tree_backward = mod.tree_backward
    BACKEND = name
    return name


_requested = os.environ.get("TREENMT_BACKEND", "auto")
if _requested == "auto":
    set_backend("ext" if "ext" in _BACKENDS else "pure")
else:
    set_backend(_requested)
