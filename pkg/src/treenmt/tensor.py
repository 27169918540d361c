"""Dense numeric primitives shared by every model component.

Tensors are plain numpy arrays (1-D vectors, 2-D row-major matrices) in the
active precision.  Log-probabilities are always produced through
log-sum-exp; softmax subtracts the max before exponentiating so inputs of
magnitude 1e3 stay finite.
"""
import numpy as np


def _shape_error(op, a, b):
    raise ValueError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def affine(w, x, b):
    """w @ x + b with explicit conformance checks."""
    w = np.asarray(w)
    x = np.asarray(x)
    b = np.asarray(b)
    if w.ndim != 2 or w.shape[1] != x.shape[0]:
        _shape_error("affine(w, x)", w, x)
    if b.shape != (w.shape[0],):
        _shape_error("affine(w, b)", w, b)
    return w @ x + b


def sigmoid(x):
    # expit-style split keeps exp() off the overflowing side for |x| ~ 1e3
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x):
    return np.tanh(x)


def hadamard(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        _shape_error("hadamard", a, b)
    return a * b


def logsumexp(v):
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("logsumexp of an empty vector")
    m = v.max()
    return m + np.log(np.exp(v - m).sum())


def softmax(v):
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("softmax of an empty vector")
    e = np.exp(v - v.max())
    return e / e.sum()


def log_softmax(v):
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("log_softmax of an empty vector")
    return v - logsumexp(v)


class GradientStore:
    """Named gradient buffers mirroring a parameter collection.

    Accumulation across examples is additive, so per-example stores can be
    merged with ``add`` at minibatch boundaries.
    """

    def __init__(self, named_arrays):
        self._data = {name: np.zeros_like(arr) for name, arr in named_arrays}

    @classmethod
    def for_params(cls, params):
        return cls(params.named_arrays())

    def __getitem__(self, name):
        return self._data[name]

    def __setitem__(self, name, value):
        current = self._data[name]
        if value is not current:
            if value.shape != current.shape:
                _shape_error(f"gradient[{name}]", current, value)
            np.copyto(current, value)

    def __contains__(self, name):
        return name in self._data

    def items(self):
        return self._data.items()

    def zero(self):
        for arr in self._data.values():
            arr.fill(0.0)

    def add(self, other):
        for name, arr in self._data.items():
            arr += other[name]

    def scale(self, factor):
        for arr in self._data.values():
            arr *= factor

    def global_norm(self):
        total = 0.0
        for arr in self._data.values():
            total += float(np.dot(arr.ravel(), arr.ravel()))
        return float(np.sqrt(total))


def clip_global_norm(grads, threshold):
    """Jointly rescale all gradients so their L2 norm is at most threshold.

    The norm is taken over every buffer together, matching a single clipped
    update of the whole parameter vector.  Returns the (in-place updated)
    store.
    """
    if threshold <= 0:
        raise ValueError("clip threshold must be positive")
    norm = grads.global_norm()
    if norm > threshold:
        grads.scale(threshold / norm)
    return grads
