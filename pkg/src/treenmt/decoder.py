"""Decoder: LSTM with input feeding, joint attention over word and phrase
states, the combined attentional layer, and the output distribution.

The first decoder state comes from a dedicated tree cell (the "bridge")
fusing the final chain state with the tree root (zeros on fallback).  Each
step feeds the previous target embedding concatenated with the previous
combined layer into the decoder cell, attends over all candidate states
with plain dot-product scores in one joint softmax, and predicts through
tanh(combine_W [s; ctx] + combine_b) followed by the output layer.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .tensor import affine, log_softmax, softmax


@dataclass
class DecoderState:
    s: np.ndarray  # hidden
    c: np.ndarray  # memory cell
    s_tilde: np.ndarray  # carried combined layer (zeros before the first step)


@dataclass
class AttentionResult:
    alpha: np.ndarray  # distribution over n_seq + n_phr candidates
    context: np.ndarray


def init_decoder(enc, params):
    """Seed (s_1, c_1) from the bridge cell; the attentional carry starts at 0.

    On fallback the right child is the zero pair, so the result depends
    only on the final chain state and bridge weights.
    """
    d = params.d
    zero = np.zeros(d, dtype=params.dtype)
    if enc.fallback:
        right_h, right_c = zero, zero
    else:
        right_h, right_c = enc.root_h, enc.root_c
    h, c, gates = kernels.tree_forward(
        enc.final_h, enc.final_c, right_h, right_c,
        params.bridge.Ul, params.bridge.Ur, params.bridge.b,
    )
    state = DecoderState(h, c, np.zeros(d, dtype=params.dtype))
    cache = (right_h, right_c, gates, c)
    return state, cache


def attention(s, enc):
    """Dot-product attention over every chain and phrase candidate jointly."""
    scores = enc.cand_h @ s
    alpha = softmax(scores)
    context = enc.cand_h.T @ alpha
    return AttentionResult(alpha, context)


def attention_backward(d_context, alpha, s, enc, d_cand):
    """Gradients of the attention read; accumulates into d_cand (n_cand, d)."""
    d_alpha = enc.cand_h @ d_context
    d_scores = alpha * (d_alpha - float(alpha @ d_alpha))
    ds = enc.cand_h.T @ d_scores
    d_cand += np.outer(alpha, d_context)
    d_cand += np.outer(d_scores, s)
    return ds


def combine(s, context, params):
    return np.tanh(affine(params.combine_W, np.concatenate([s, context]), params.combine_b))


def output_logits(s_tilde, params):
    return affine(params.out_W, s_tilde, params.out_b)


def output_distribution(s_tilde, params):
    """Log-probabilities over the full target vocabulary (evaluation path)."""
    return log_softmax(output_logits(s_tilde, params))


def decoder_step(y_prev, state, enc, params):
    """Advance one step: cell -> attention -> combine -> full log-probs.

    Used at decode time; training uses the stepwise pieces directly so the
    output layer can be restricted to sampled rows.
    """
    new_state, att, s_tilde, _ = advance(y_prev, state, enc, params)
    log_probs = output_distribution(s_tilde, params)
    return new_state, att, s_tilde, log_probs


def advance(y_prev, state, enc, params):
    """Shared cell/attention/combine part of one decoder step."""
    if not 0 <= y_prev < params.tgt_vocab_size:
        raise IndexError(f"target id {y_prev} outside vocabulary of {params.tgt_vocab_size}")
    x = np.concatenate([params.tgt_embed[y_prev], state.s_tilde])
    s, c, gates = kernels.lstm_forward(
        x, state.s, state.c, params.dec.W, params.dec.U, params.dec.b
    )
    att = attention(s, enc)
    s_tilde = combine(s, att.context, params)
    new_state = DecoderState(s, c, s_tilde)
    cache = (x, state.s, state.c, gates, c, s, att, s_tilde)
    return new_state, att, s_tilde, cache


def dump_attention(fh, sent_idx, src_tokens, spans, steps):
    """Append one sentence's step-by-candidate attention to a text file.

    steps is a sequence of (emitted_token, alpha).  Each line: step index,
    the token, then span:weight entries for every candidate.
    """
    fh.write(f"# {sent_idx}\t{' '.join(src_tokens)}\n")
    for j, (token, alpha) in enumerate(steps):
        cells = "\t".join(f"{span}:{w:.6f}" for span, w in zip(spans, alpha))
        fh.write(f"{j}\t{token}\t{cells}\n")
