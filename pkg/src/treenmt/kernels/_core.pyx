# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recurrent cell kernels.

Fuses the gate math of one chain-LSTM or tree-LSTM step (forward and
backward) into a single call: matrix work goes through BLAS gemv/ger, the
elementwise gate arithmetic runs in plain C loops.  Signatures, gate
layout and cache contents match treenmt.kernels.pure exactly; float32 and
float64 are both supported through a fused type.
"""
import numpy as np

from libc.math cimport exp, expf, tanh as dtanh_c, tanhf
from scipy.linalg.cython_blas cimport dgemv, dger, sgemv, sger

ctypedef fused real:
    float
    double

BACKEND_NAME = "ext"


cdef inline real _sig(real v) noexcept nogil:
    cdef real e
    if real is float:
        if v >= 0:
            return <float>1.0 / (<float>1.0 + expf(-v))
        e = expf(v)
        return e / (<float>1.0 + e)
    else:
        if v >= 0:
            return 1.0 / (1.0 + exp(-v))
        e = exp(v)
        return e / (1.0 + e)


cdef inline real _tanh(real v) noexcept nogil:
    if real is float:
        return tanhf(v)
    else:
        return dtanh_c(v)


cdef inline void _matvec(bint transpose, int rows, int cols, real *a,
                         real *x, real beta, real *y) noexcept nogil:
    # y = A @ x + beta*y for row-major A(rows, cols); A.T @ x if transpose.
    # BLAS sees the row-major buffer as the Fortran (cols, rows) transpose.
    cdef int m = cols
    cdef int n = rows
    cdef int inc = 1
    cdef real alpha = 1
    cdef real bt = beta
    cdef char t_char = b'N' if transpose else b'T'
    if real is float:
        sgemv(&t_char, &m, &n, &alpha, a, &m, x, &inc, &bt, y, &inc)
    else:
        dgemv(&t_char, &m, &n, &alpha, a, &m, x, &inc, &bt, y, &inc)


cdef inline void _rank1_update(int rows, int cols, real *dvec, real *ivec,
                               real *a) noexcept nogil:
    # A(rows, cols) += outer(dvec, ivec), row-major A
    cdef int m = cols
    cdef int n = rows
    cdef int inc = 1
    cdef real alpha = 1
    if real is float:
        sger(&m, &n, &alpha, ivec, &inc, dvec, &inc, a, &m)
    else:
        dger(&m, &n, &alpha, ivec, &inc, dvec, &inc, a, &m)


def lstm_forward(real[::1] x, real[::1] h_prev, real[::1] c_prev,
                 real[:, ::1] W, real[:, ::1] U, real[::1] b):
    cdef int d = h_prev.shape[0]
    cdef int nin = x.shape[0]
    cdef int k
    if W.shape[0] != 4 * d or W.shape[1] != nin or U.shape[0] != 4 * d \
            or U.shape[1] != d or b.shape[0] != 4 * d or c_prev.shape[0] != d:
        raise ValueError("lstm_forward: weight shapes do not match inputs")
    dtype = np.float32 if real is float else np.float64
    gates_np = np.empty(4 * d, dtype=dtype)
    h_np = np.empty(d, dtype=dtype)
    c_np = np.empty(d, dtype=dtype)
    cdef real[::1] gates = gates_np
    cdef real[::1] h = h_np
    cdef real[::1] c = c_np
    with nogil:
        for k in range(4 * d):
            gates[k] = b[k]
        _matvec(0, 4 * d, nin, &W[0, 0], &x[0], 1, &gates[0])
        _matvec(0, 4 * d, d, &U[0, 0], &h_prev[0], 1, &gates[0])
        for k in range(3 * d):
            gates[k] = _sig(gates[k])
        for k in range(3 * d, 4 * d):
            gates[k] = _tanh(gates[k])
        for k in range(d):
            c[k] = gates[k] * gates[3 * d + k] + gates[d + k] * c_prev[k]
            h[k] = gates[2 * d + k] * _tanh(c[k])
    return h_np, c_np, gates_np


def lstm_backward(real[::1] dh, real[::1] dc, real[::1] x, real[::1] h_prev,
                  real[::1] c_prev, real[::1] gates, real[::1] c,
                  real[:, ::1] W, real[:, ::1] U,
                  real[:, ::1] dW, real[:, ::1] dU, real[::1] db):
    cdef int d = h_prev.shape[0]
    cdef int nin = x.shape[0]
    cdef int k
    cdef real tc, dct
    dtype = np.float32 if real is float else np.float64
    dpre_np = np.empty(4 * d, dtype=dtype)
    dx_np = np.empty(nin, dtype=dtype)
    dh_prev_np = np.empty(d, dtype=dtype)
    dc_prev_np = np.empty(d, dtype=dtype)
    cdef real[::1] dpre = dpre_np
    cdef real[::1] dx = dx_np
    cdef real[::1] dh_prev = dh_prev_np
    cdef real[::1] dc_prev = dc_prev_np
    with nogil:
        for k in range(d):
            tc = _tanh(c[k])
            dct = dc[k] + dh[k] * gates[2 * d + k] * (1 - tc * tc)
            dpre[k] = dct * gates[3 * d + k] * gates[k] * (1 - gates[k])
            dpre[d + k] = dct * c_prev[k] * gates[d + k] * (1 - gates[d + k])
            dpre[2 * d + k] = dh[k] * tc * gates[2 * d + k] * (1 - gates[2 * d + k])
            dpre[3 * d + k] = dct * gates[k] * (1 - gates[3 * d + k] * gates[3 * d + k])
            dc_prev[k] = dct * gates[d + k]
        _rank1_update(4 * d, nin, &dpre[0], &x[0], &dW[0, 0])
        _rank1_update(4 * d, d, &dpre[0], &h_prev[0], &dU[0, 0])
        for k in range(4 * d):
            db[k] += dpre[k]
        _matvec(1, 4 * d, nin, &W[0, 0], &dpre[0], 0, &dx[0])
        _matvec(1, 4 * d, d, &U[0, 0], &dpre[0], 0, &dh_prev[0])
    return dx_np, dh_prev_np, dc_prev_np


def tree_forward(real[::1] h_left, real[::1] c_left, real[::1] h_right,
                 real[::1] c_right, real[:, ::1] Ul, real[:, ::1] Ur,
                 real[::1] b):
    cdef int d = h_left.shape[0]
    cdef int k
    if Ul.shape[0] != 5 * d or Ul.shape[1] != d or Ur.shape[0] != 5 * d \
            or Ur.shape[1] != d or b.shape[0] != 5 * d:
        raise ValueError("tree_forward: weight shapes do not match inputs")
    dtype = np.float32 if real is float else np.float64
    gates_np = np.empty(5 * d, dtype=dtype)
    h_np = np.empty(d, dtype=dtype)
    c_np = np.empty(d, dtype=dtype)
    cdef real[::1] gates = gates_np
    cdef real[::1] h = h_np
    cdef real[::1] c = c_np
    with nogil:
        for k in range(5 * d):
            gates[k] = b[k]
        _matvec(0, 5 * d, d, &Ul[0, 0], &h_left[0], 1, &gates[0])
        _matvec(0, 5 * d, d, &Ur[0, 0], &h_right[0], 1, &gates[0])
        for k in range(4 * d):
            gates[k] = _sig(gates[k])
        for k in range(4 * d, 5 * d):
            gates[k] = _tanh(gates[k])
        for k in range(d):
            c[k] = gates[k] * gates[4 * d + k] \
                + gates[d + k] * c_left[k] + gates[2 * d + k] * c_right[k]
            h[k] = gates[3 * d + k] * _tanh(c[k])
    return h_np, c_np, gates_np


def tree_backward(real[::1] dh, real[::1] dc, real[::1] h_left,
                  real[::1] c_left, real[::1] h_right, real[::1] c_right,
                  real[::1] gates, real[::1] c, real[:, ::1] Ul,
                  real[:, ::1] Ur, real[:, ::1] dUl, real[:, ::1] dUr,
                  real[::1] db):
    cdef int d = h_left.shape[0]
    cdef int k
    cdef real tc, dct
    dtype = np.float32 if real is float else np.float64
    dpre_np = np.empty(5 * d, dtype=dtype)
    dhl_np = np.empty(d, dtype=dtype)
    dhr_np = np.empty(d, dtype=dtype)
    dcl_np = np.empty(d, dtype=dtype)
    dcr_np = np.empty(d, dtype=dtype)
    cdef real[::1] dpre = dpre_np
    cdef real[::1] dhl = dhl_np
    cdef real[::1] dhr = dhr_np
    cdef real[::1] dcl = dcl_np
    cdef real[::1] dcr = dcr_np
    with nogil:
        for k in range(d):
            tc = _tanh(c[k])
            dct = dc[k] + dh[k] * gates[3 * d + k] * (1 - tc * tc)
            dpre[k] = dct * gates[4 * d + k] * gates[k] * (1 - gates[k])
            dpre[d + k] = dct * c_left[k] * gates[d + k] * (1 - gates[d + k])
            dpre[2 * d + k] = dct * c_right[k] * gates[2 * d + k] * (1 - gates[2 * d + k])
            dpre[3 * d + k] = dh[k] * tc * gates[3 * d + k] * (1 - gates[3 * d + k])
            dpre[4 * d + k] = dct * gates[k] * (1 - gates[4 * d + k] * gates[4 * d + k])
            dcl[k] = dct * gates[d + k]
            dcr[k] = dct * gates[2 * d + k]
        _rank1_update(5 * d, d, &dpre[0], &h_left[0], &dUl[0, 0])
        _rank1_update(5 * d, d, &dpre[0], &h_right[0], &dUr[0, 0])
        for k in range(5 * d):
            db[k] += dpre[k]
        _matvec(1, 5 * d, d, &Ul[0, 0], &dpre[0], 0, &dhl[0])
        _matvec(1, 5 * d, d, &Ur[0, 0], &dpre[0], 0, &dhr[0])
    return dhl_np, dcl_np, dhr_np, dcr_np
