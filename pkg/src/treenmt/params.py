"""Model parameters: embeddings, recurrent cells, attention combiner, output layer.

Gate weights are stored packed (one matrix per input, gate rows stacked) in
the layouts the kernels expect.  ``named_arrays`` fixes a stable order used
for initialization, gradient stores, checkpoints and gradient checks.
"""
import numpy as np

from .precision import resolve_dtype

# row ranges of the packed chain-cell bias holding the forget gate
LSTM_FORGET = slice(1, 2)  # of 4 gate blocks [i, f, o, g]
TREE_FORGET = slice(1, 3)  # of 5 gate blocks [i, fl, fr, o, g]


class LstmCellParams:
    """Packed weights of one chain LSTM cell (input width may exceed d)."""

    def __init__(self, in_dim, d, dtype):
        self.in_dim = in_dim
        self.d = d
        self.W = np.zeros((4 * d, in_dim), dtype=dtype)
        self.U = np.zeros((4 * d, d), dtype=dtype)
        self.b = np.zeros(4 * d, dtype=dtype)

    def named_arrays(self, prefix):
        return [(f"{prefix}.W", self.W), (f"{prefix}.U", self.U), (f"{prefix}.b", self.b)]

    def set_forget_bias(self, value):
        d = self.d
        self.b[LSTM_FORGET.start * d : LSTM_FORGET.stop * d] = value


class TreeCellParams:
    """Packed weights of one binary tree cell (two children, two forget gates)."""

    def __init__(self, d, dtype):
        self.d = d
        self.Ul = np.zeros((5 * d, d), dtype=dtype)
        self.Ur = np.zeros((5 * d, d), dtype=dtype)
        self.b = np.zeros(5 * d, dtype=dtype)

    def named_arrays(self, prefix):
        return [(f"{prefix}.Ul", self.Ul), (f"{prefix}.Ur", self.Ur), (f"{prefix}.b", self.b)]

    def set_forget_bias(self, value):
        d = self.d
        self.b[TREE_FORGET.start * d : TREE_FORGET.stop * d] = value


class ModelParams:
    """Every trainable array of the translation model.

    d is the hidden size, e the embedding size.  The decoder cell reads
    e + d wide inputs (previous word embedding concatenated with the
    carried attentional state); the bridge cell fuses the final chain
    state with the tree root to seed the decoder.
    """

    def __init__(self, src_vocab_size, tgt_vocab_size, d, e=None, dtype=None):
        e = d if e is None else e
        dtype = resolve_dtype(dtype)
        self.d = d
        self.e = e
        self.src_vocab_size = src_vocab_size
        self.tgt_vocab_size = tgt_vocab_size
        self.src_embed = np.zeros((src_vocab_size, e), dtype=dtype)
        self.tgt_embed = np.zeros((tgt_vocab_size, e), dtype=dtype)
        self.enc = LstmCellParams(e, d, dtype)
        self.tree = TreeCellParams(d, dtype)
        self.bridge = TreeCellParams(d, dtype)
        self.dec = LstmCellParams(e + d, d, dtype)
        self.combine_W = np.zeros((d, 2 * d), dtype=dtype)
        self.combine_b = np.zeros(d, dtype=dtype)
        self.out_W = np.zeros((tgt_vocab_size, d), dtype=dtype)
        self.out_b = np.zeros(tgt_vocab_size, dtype=dtype)

    @property
    def dtype(self):
        return self.src_embed.dtype

    def named_arrays(self):
        items = [("src_embed", self.src_embed), ("tgt_embed", self.tgt_embed)]
        items += self.enc.named_arrays("enc")
        items += self.tree.named_arrays("tree")
        items += self.bridge.named_arrays("bridge")
        items += self.dec.named_arrays("dec")
        items += [
            ("combine_W", self.combine_W),
            ("combine_b", self.combine_b),
            ("out_W", self.out_W),
            ("out_b", self.out_b),
        ]
        return items

    def copy(self):
        dup = ModelParams(self.src_vocab_size, self.tgt_vocab_size, self.d, self.e, self.dtype)
        for (_, dst), (_, src) in zip(dup.named_arrays(), self.named_arrays()):
            np.copyto(dst, src)
        return dup

    def assert_finite(self):
        for name, arr in self.named_arrays():
            if not np.isfinite(arr).all():
                raise FloatingPointError(f"non-finite values in parameter {name}")


def _is_zero_init(name):
    # output layer entirely, plus every bias vector
    return name in ("out_W", "out_b") or name.endswith(".b") or name.endswith("_b")


def init_params(config, src_vocab_size, tgt_vocab_size, rng=None, dtype=None):
    """Fresh parameters: output layer and biases zero, forget-gate biases 1.0,
    everything else i.i.d. uniform on [-0.1, 0.1].  Deterministic given the
    config seed."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    params = ModelParams(src_vocab_size, tgt_vocab_size, config.d, config.e, dtype)
    for name, arr in params.named_arrays():
        if _is_zero_init(name):
            continue
        arr[...] = rng.uniform(-0.1, 0.1, size=arr.shape).astype(params.dtype)
    for cell in (params.enc, params.dec, params.tree, params.bridge):
        cell.set_forget_bias(1.0)
    return params


def randomize_params(params, rng, scale=0.5):
    """Put every array (biases and output layer included) at a generic point.

    Gradient checks need this: the paper-style zero init leaves symmetric
    directions with exactly zero gradient.
    """
    for _, arr in params.named_arrays():
        arr[...] = rng.uniform(-scale, scale, size=arr.shape).astype(params.dtype)
    return params


def sgd_update(params, grads, lr):
    for name, arr in params.named_arrays():
        arr -= lr * grads[name]
