"""Pure numpy implementations of the recurrent cell kernels.

This is the fallback backend and the readable reference for the compiled
one.  Both backends share the same call signatures and gate layout:

  chain cell    pre-activation rows [input | forget | output | candidate]
  tree cell     pre-activation rows [input | forget-left | forget-right |
                output | candidate]

``gates`` caches hold the post-activation gate values needed by the
backward passes; backward functions accumulate (+=) into the dW/dU/db
buffers and return gradients for their inputs.
"""
import numpy as np

from ..tensor import sigmoid

BACKEND_NAME = "pure"


def lstm_forward(x, h_prev, c_prev, W, U, b):
    """One chain LSTM step.

    x        input vector (may be wider than the hidden size)
    h_prev   previous hidden state (d,)
    c_prev   previous memory cell (d,)
    W, U, b  packed weights: (4d, len(x)), (4d, d), (4d,)

    Returns (h, c, gates) with gates = activated [i, f, o, g] rows (4d,).
    """
    d = h_prev.shape[0]
    pre = W @ x
    pre += U @ h_prev
    pre += b
    gates = np.empty_like(pre)
    gates[: 3 * d] = sigmoid(pre[: 3 * d])
    gates[3 * d :] = np.tanh(pre[3 * d :])
    i = gates[:d]
    f = gates[d : 2 * d]
    o = gates[2 * d : 3 * d]
    g = gates[3 * d :]
    c = i * g + f * c_prev
    h = o * np.tanh(c)
    return h, c, gates


def lstm_backward(dh, dc, x, h_prev, c_prev, gates, c, W, U, dW, dU, db):
    """Backward of lstm_forward.

    dh, dc are the loss gradients flowing into this step's h and c.
    Accumulates into dW, dU, db; returns (dx, dh_prev, dc_prev).
    """
    d = h_prev.shape[0]
    i = gates[:d]
    f = gates[d : 2 * d]
    o = gates[2 * d : 3 * d]
    g = gates[3 * d :]
    tc = np.tanh(c)
    dct = dc + dh * o * (1.0 - tc * tc)
    dpre = np.empty_like(gates)
    dpre[:d] = (dct * g) * i * (1.0 - i)
    dpre[d : 2 * d] = (dct * c_prev) * f * (1.0 - f)
    dpre[2 * d : 3 * d] = (dh * tc) * o * (1.0 - o)
    dpre[3 * d :] = (dct * i) * (1.0 - g * g)
    dW += np.outer(dpre, x)
    dU += np.outer(dpre, h_prev)
    db += dpre
    dx = W.T @ dpre
    dh_prev = U.T @ dpre
    dc_prev = dct * f
    return dx, dh_prev, dc_prev


def tree_forward(h_left, c_left, h_right, c_right, Ul, Ur, b):
    """Compose one parent node from two child (h, c) pairs.

    Ul, Ur, b  packed weights: (5d, d), (5d, d), (5d,)
    Returns (h, c, gates) with gates = activated [i, fl, fr, o, g] (5d,).
    """
    d = h_left.shape[0]
    pre = Ul @ h_left
    pre += Ur @ h_right
    pre += b
    gates = np.empty_like(pre)
    gates[: 4 * d] = sigmoid(pre[: 4 * d])
    gates[4 * d :] = np.tanh(pre[4 * d :])
    i = gates[:d]
    fl = gates[d : 2 * d]
    fr = gates[2 * d : 3 * d]
    o = gates[3 * d : 4 * d]
    g = gates[4 * d :]
    c = i * g + fl * c_left + fr * c_right
    h = o * np.tanh(c)
    return h, c, gates


def tree_backward(dh, dc, h_left, c_left, h_right, c_right, gates, c, Ul, Ur, dUl, dUr, db):
    """Backward of tree_forward; returns (dh_left, dc_left, dh_right, dc_right)."""
    d = h_left.shape[0]
    i = gates[:d]
    fl = gates[d : 2 * d]
    fr = gates[2 * d : 3 * d]
    o = gates[3 * d : 4 * d]
    g = gates[4 * d :]
    tc = np.tanh(c)
    dct = dc + dh * o * (1.0 - tc * tc)
    dpre = np.empty_like(gates)
    dpre[:d] = (dct * g) * i * (1.0 - i)
    dpre[d : 2 * d] = (dct * c_left) * fl * (1.0 - fl)
    dpre[2 * d : 3 * d] = (dct * c_right) * fr * (1.0 - fr)
    dpre[3 * d : 4 * d] = (dh * tc) * o * (1.0 - o)
    dpre[4 * d :] = (dct * i) * (1.0 - g * g)
    dUl += np.outer(dpre, h_left)
    dUr += np.outer(dpre, h_right)
    db += dpre
    dh_left = Ul.T @ dpre
    dh_right = Ur.T @ dpre
    dc_left = dct * fl
    dc_right = dct * fr
    return dh_left, dc_left, dh_right, dc_right
