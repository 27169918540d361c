"""Source-side encoding: a chain LSTM over the tokens (eos included) and a
bottom-up tree composition whose leaf states are taken from the chain.

Encoder modes:
  tree            chain states + phrase states (the full model)
  seq             chain states only, trees ignored
  tree_nocontext  ablation: per-token states are computed from a zero
                  state, so leaves carry no left context

A pair without a usable tree falls back to chain-only encoding with a
zeroed root for the decoder bridge; the zero root is never an attention
candidate.
"""
import numpy as np

from . import kernels
from . import trees as treelib

ENCODER_MODES = ("tree", "seq", "tree_nocontext")


class EncoderOutput:
    """Chain states (one per token plus eos), phrase states (root last),
    and the stacked attention candidate matrix with span labels."""

    def __init__(self, seq_h, seq_c, phr_h, phr_c, fallback, spans, trace=None):
        self.seq_h = seq_h  # (T, d), T = n tokens + eos
        self.seq_c = seq_c
        self.phr_h = phr_h  # (P, d), P = n - 1 or 0
        self.phr_c = phr_c
        self.fallback = fallback
        self.spans = spans  # one label per attention candidate
        self.trace = trace
        if phr_h.shape[0]:
            self.cand_h = np.concatenate([seq_h, phr_h], axis=0)
        else:
            self.cand_h = seq_h

    @property
    def n_candidates(self):
        return self.cand_h.shape[0]

    @property
    def final_h(self):
        return self.seq_h[-1]

    @property
    def final_c(self):
        return self.seq_c[-1]

    @property
    def root_h(self):
        return self.phr_h[-1]

    @property
    def root_c(self):
        return self.phr_c[-1]


class EncoderTrace:
    """Activations kept for the backward pass."""

    def __init__(self, src_ids, seq_gates, node_caches, chained):
        self.src_ids = src_ids
        self.seq_gates = seq_gates  # (T, 4d)
        self.node_caches = node_caches  # per phrase node: (left_ref, right_ref, gates)
        self.chained = chained  # False in the no-context ablation


def encode_sequence(ids, params, chained=True):
    """Run the chain cell over embedded ids; h_0 = c_0 = 0.

    With chained=False every step starts from the zero state (leaf-only
    ablation).  Returns (H, C, gates) stacked per step.
    """
    if not ids:
        raise ValueError("encode_sequence needs at least one id (eos)")
    d = params.d
    dtype = params.dtype
    T = len(ids)
    H = np.zeros((T, d), dtype=dtype)
    C = np.zeros((T, d), dtype=dtype)
    G = np.zeros((T, 4 * d), dtype=dtype)
    h = np.zeros(d, dtype=dtype)
    c = np.zeros(d, dtype=dtype)
    zero = np.zeros(d, dtype=dtype)
    for t, idx in enumerate(ids):
        if not 0 <= idx < params.src_vocab_size:
            raise IndexError(f"source id {idx} outside vocabulary of {params.src_vocab_size}")
        x = params.src_embed[idx]
        if chained:
            h, c, g = kernels.lstm_forward(x, h, c, params.enc.W, params.enc.U, params.enc.b)
        else:
            h, c, g = kernels.lstm_forward(x, zero, zero, params.enc.W, params.enc.U, params.enc.b)
        H[t] = h
        C[t] = c
        G[t] = g
    return H, C, G


def encode_tree(tree, seq_h, seq_c, params):
    """Compose phrase states bottom-up (post order, root last).

    Leaf k reuses the chain state at token position k, so the phrase
    vectors see each word in its sentence context.  Returns the stacked
    phrase states, the per-node caches for backward, and the token span
    (start, end) each node covers.
    """
    order = treelib.internal_nodes(tree)
    n = treelib.n_leaves(tree)
    if n != seq_h.shape[0] - 1:
        raise ValueError(f"tree has {n} leaves but the sentence has {seq_h.shape[0] - 1} tokens")
    d = params.d
    P = len(order)
    phr_h = np.zeros((P, d), dtype=params.dtype)
    phr_c = np.zeros((P, d), dtype=params.dtype)
    caches = []
    spans = []
    node_slot = {}

    def resolve(child):
        if child.is_leaf():
            return ("seq", child.index), seq_h[child.index], seq_c[child.index], (child.index, child.index)
        k = node_slot[id(child)]
        return ("phr", k), phr_h[k], phr_c[k], spans[k]

    for k, node in enumerate(order):
        lref, hl, cl, lspan = resolve(node.left)
        rref, hr, cr, rspan = resolve(node.right)
        h, c, gates = kernels.tree_forward(
            hl, cl, hr, cr, params.tree.Ul, params.tree.Ur, params.tree.b
        )
        phr_h[k] = h
        phr_c[k] = c
        caches.append((lref, rref, gates))
        spans.append((lspan[0], rspan[1]))
        node_slot[id(node)] = k
    return phr_h, phr_c, caches, spans


def candidate_spans(n_tokens, phrase_spans):
    labels = [str(i) for i in range(n_tokens)] + ["eos"]
    labels += [f"{a}-{b}" for a, b in phrase_spans]
    return labels


def encode(pair, params, mode="tree", collect=False):
    """Full source encoding of one sentence pair under the given mode."""
    if mode not in ENCODER_MODES:
        raise ValueError(f"unknown encoder mode {mode!r}; choices: {ENCODER_MODES}")
    chained = mode != "tree_nocontext"
    seq_h, seq_c, seq_gates = encode_sequence(pair.src_ids, params, chained=chained)
    tree = pair.tree if mode != "seq" else None
    d = params.d
    if tree is not None:
        phr_h, phr_c, node_caches, phrase_spans = encode_tree(tree, seq_h, seq_c, params)
        fallback = False
    else:
        phr_h = np.zeros((0, d), dtype=params.dtype)
        phr_c = np.zeros((0, d), dtype=params.dtype)
        node_caches = []
        phrase_spans = []
        fallback = True
    spans = candidate_spans(pair.src_len, phrase_spans)
    trace = None
    if collect:
        trace = EncoderTrace(list(pair.src_ids), seq_gates, node_caches, chained)
    return EncoderOutput(seq_h, seq_c, phr_h, phr_c, fallback, spans, trace)


def encoder_backward(enc, d_seq_h, d_seq_c, d_phr_h, d_phr_c, params, grads):
    """Backpropagate accumulated state gradients through tree and chain.

    d_* buffers hold the upstream gradient for every emitted state
    (attention, decoder bridge, tree-leaf reuse all add into them before
    this call).  Tree nodes are processed in reverse post order so each
    node's gradient is complete before its children receive theirs.
    """
    trace = enc.trace
    if trace is None:
        raise ValueError("encoder output was built without collect=True")
    tree_grads = (grads["tree.Ul"], grads["tree.Ur"], grads["tree.b"])
    for k in range(len(trace.node_caches) - 1, -1, -1):
        lref, rref, gates = trace.node_caches[k]
        hl, cl = _state_of(enc, lref)
        hr, cr = _state_of(enc, rref)
        dhl, dcl, dhr, dcr = kernels.tree_backward(
            d_phr_h[k], d_phr_c[k], hl, cl, hr, cr, gates, enc.phr_c[k],
            params.tree.Ul, params.tree.Ur, *tree_grads,
        )
        _add_state_grad(d_seq_h, d_seq_c, d_phr_h, d_phr_c, lref, dhl, dcl)
        _add_state_grad(d_seq_h, d_seq_c, d_phr_h, d_phr_c, rref, dhr, dcr)

    d = params.d
    dtype = params.dtype
    zero = np.zeros(d, dtype=dtype)
    dh_chain = np.zeros(d, dtype=dtype)
    dc_chain = np.zeros(d, dtype=dtype)
    demb = grads["src_embed"]
    for t in range(len(trace.src_ids) - 1, -1, -1):
        dh = d_seq_h[t] + dh_chain
        dc = d_seq_c[t] + dc_chain
        if trace.chained and t > 0:
            h_prev, c_prev = enc.seq_h[t - 1], enc.seq_c[t - 1]
        else:
            h_prev, c_prev = zero, zero
        x = params.src_embed[trace.src_ids[t]]
        dx, dh_prev, dc_prev = kernels.lstm_backward(
            dh, dc, x, h_prev, c_prev, trace.seq_gates[t], enc.seq_c[t],
            params.enc.W, params.enc.U,
            grads["enc.W"], grads["enc.U"], grads["enc.b"],
        )
        demb[trace.src_ids[t]] += dx
        if trace.chained:
            dh_chain, dc_chain = dh_prev, dc_prev


def _state_of(enc, ref):
    kind, idx = ref
    if kind == "seq":
        return enc.seq_h[idx], enc.seq_c[idx]
    return enc.phr_h[idx], enc.phr_c[idx]


def _add_state_grad(d_seq_h, d_seq_c, d_phr_h, d_phr_c, ref, dh, dc):
    kind, idx = ref
    if kind == "seq":
        d_seq_h[idx] += dh
        d_seq_c[idx] += dc
    else:
        d_phr_h[idx] += dh
        d_phr_c[idx] += dc
