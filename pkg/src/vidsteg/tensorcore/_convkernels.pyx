# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled conv2d kernels: im2col/col2im plus BLAS sgemm.

Same contract as the numpy fallback in ``_kernels_np``: stride-1
zero-padded cross-correlation on contiguous float32 arrays.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport sgemm

cnp.import_array()


cdef void _gemm_cc(float* a, float* b, float* c, int m, int n, int k) noexcept nogil:
    # c (m,n) = a (m,k) @ b (k,n), all row-major: computed as the
    # column-major product c^T = b^T a^T.
    cdef char tn = b'N'
    cdef float one = 1.0, zero = 0.0
    sgemm(&tn, &tn, &n, &m, &k, &one, b, &n, a, &k, &zero, c, &n)


cdef void _im2col(const float* x, float* cols, int B, int C, int H, int W,
                  int k, int pad, int Ho, int Wo) noexcept nogil:
    # cols is (C*k*k, B*Ho*Wo); rows ordered (c, kh, kw), columns (b, oh, ow).
    cdef Py_ssize_t n_cols = <Py_ssize_t> B * Ho * Wo
    cdef int c, kh, kw, b, oh, ow, ih, iw, ow_lo, ow_hi
    cdef Py_ssize_t row, dst_base, src_base
    for c in range(C):
        for kh in range(k):
            for kw in range(k):
                row = (<Py_ssize_t> c * k + kh) * k + kw
                ow_lo = pad - kw if pad - kw > 0 else 0
                ow_hi = W + pad - kw if W + pad - kw < Wo else Wo
                for b in range(B):
                    for oh in range(Ho):
                        ih = oh + kh - pad
                        dst_base = row * n_cols + (<Py_ssize_t> b * Ho + oh) * Wo
                        if ih < 0 or ih >= H:
                            for ow in range(Wo):
                                cols[dst_base + ow] = 0.0
                            continue
                        src_base = ((<Py_ssize_t> b * C + c) * H + ih) * W + (kw - pad)
                        for ow in range(ow_lo):
                            cols[dst_base + ow] = 0.0
                        for ow in range(ow_lo, ow_hi):
                            cols[dst_base + ow] = x[src_base + ow]
                        for ow in range(ow_hi, Wo):
                            cols[dst_base + ow] = 0.0


cdef void _col2im(const float* cols, float* x, int B, int C, int H, int W,
                  int k, int pad, int Ho, int Wo) noexcept nogil:
    # Scatter-add the (C*k*k, B*Ho*Wo) columns back into x (assumed zeroed).
    cdef Py_ssize_t n_cols = <Py_ssize_t> B * Ho * Wo
    cdef int c, kh, kw, b, oh, ow, ih, ow_lo, ow_hi
    cdef Py_ssize_t row, src_base, dst_base
    for c in range(C):
        for kh in range(k):
            for kw in range(k):
                row = (<Py_ssize_t> c * k + kh) * k + kw
                ow_lo = pad - kw if pad - kw > 0 else 0
                ow_hi = W + pad - kw if W + pad - kw < Wo else Wo
                for b in range(B):
                    for oh in range(Ho):
                        ih = oh + kh - pad
                        if ih < 0 or ih >= H:
                            continue
                        src_base = row * n_cols + (<Py_ssize_t> b * Ho + oh) * Wo
                        dst_base = ((<Py_ssize_t> b * C + c) * H + ih) * W + (kw - pad)
                        for ow in range(ow_lo, ow_hi):
                            x[dst_base + ow] += cols[src_base + ow]


def conv2d_forward(cnp.ndarray[cnp.float32_t, ndim=4] x,
                   cnp.ndarray[cnp.float32_t, ndim=4] w,
                   int padding):
    cdef int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef int Co = w.shape[0], k = w.shape[2]
    cdef int Ho = H + 2 * padding - k + 1
    cdef int Wo = W + 2 * padding - k + 1
    cdef int ckk = C * k * k
    cdef cnp.ndarray[cnp.float32_t, ndim=2] cols = np.empty((ckk, B * Ho * Wo), dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=2] ymat = np.empty((Co, B * Ho * Wo), dtype=np.float32)
    cdef float* xp = <float*> cnp.PyArray_DATA(x)
    cdef float* wp = <float*> cnp.PyArray_DATA(w)
    cdef float* cp = <float*> cnp.PyArray_DATA(cols)
    cdef float* yp = <float*> cnp.PyArray_DATA(ymat)
    with nogil:
        _im2col(xp, cp, B, C, H, W, k, padding, Ho, Wo)
        _gemm_cc(wp, cp, yp, Co, B * Ho * Wo, ckk)
    return np.ascontiguousarray(
        ymat.reshape(Co, B, Ho, Wo).transpose(1, 0, 2, 3))


def conv2d_grad_input(cnp.ndarray[cnp.float32_t, ndim=4] gy,
                      cnp.ndarray[cnp.float32_t, ndim=4] w,
                      int padding):
    cdef int B = gy.shape[0], Co = gy.shape[1], Ho = gy.shape[2], Wo = gy.shape[3]
    cdef int C = w.shape[1], k = w.shape[2]
    cdef int H = Ho + k - 1 - 2 * padding
    cdef int W = Wo + k - 1 - 2 * padding
    cdef int ckk = C * k * k
    cdef Py_ssize_t n = <Py_ssize_t> B * Ho * Wo
    # grad_cols (C*k*k, n) = w_mat^T (ckk, Co) @ gy_mat (Co, n)
    cdef cnp.ndarray[cnp.float32_t, ndim=2] wt = np.ascontiguousarray(
        w.reshape(Co, ckk).T)
    cdef cnp.ndarray[cnp.float32_t, ndim=2] gmat = np.ascontiguousarray(
        gy.transpose(1, 0, 2, 3).reshape(Co, n))
    cdef cnp.ndarray[cnp.float32_t, ndim=2] gcols = np.empty((ckk, n), dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=4] gx = np.zeros((B, C, H, W), dtype=np.float32)
    cdef float* wtp = <float*> cnp.PyArray_DATA(wt)
    cdef float* gp = <float*> cnp.PyArray_DATA(gmat)
    cdef float* gc = <float*> cnp.PyArray_DATA(gcols)
    cdef float* gxp = <float*> cnp.PyArray_DATA(gx)
    with nogil:
        _gemm_cc(wtp, gp, gc, ckk, <int> n, Co)
        _col2im(gc, gxp, B, C, H, W, k, padding, Ho, Wo)
    return gx


def conv2d_grad_weight(cnp.ndarray[cnp.float32_t, ndim=4] x,
                       cnp.ndarray[cnp.float32_t, ndim=4] gy,
                       int padding):
    cdef int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef int Co = gy.shape[1], Ho = gy.shape[2], Wo = gy.shape[3]
    cdef int k = H + 2 * padding - Ho + 1
    cdef int ckk = C * k * k
    cdef Py_ssize_t n = <Py_ssize_t> B * Ho * Wo
    cdef cnp.ndarray[cnp.float32_t, ndim=2] cols = np.empty((ckk, n), dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=2] gmat = np.ascontiguousarray(
        gy.transpose(1, 0, 2, 3).reshape(Co, n))
    # gw (Co, ckk) = gy_mat (Co, n) @ cols^T (n, ckk); do it as a row-major
    # gemm on cols laid out transposed.
    cdef cnp.ndarray[cnp.float32_t, ndim=2] gw = np.empty((Co, ckk), dtype=np.float32)
    cdef float* xp = <float*> cnp.PyArray_DATA(x)
    cdef float* cp = <float*> cnp.PyArray_DATA(cols)
    cdef float* gp = <float*> cnp.PyArray_DATA(gmat)
    cdef float* gwp = <float*> cnp.PyArray_DATA(gw)
    cdef char tt = b'T', tn = b'N'
    cdef float one = 1.0, zero = 0.0
    cdef int ni = <int> n
    with nogil:
        _im2col(xp, cp, B, C, H, W, k, padding, Ho, Wo)
        # Row-major gw (Co,ckk) = gmat (Co,n) @ cols^T.  In column-major
        # terms: gw_f (ckk,Co) = cols_f^T (ckk,n) @ gmat_f (n,Co), where the
        # row-major buffers reinterpret as their own transposes.
        sgemm(&tt, &tn, &ckk, &Co, &ni, &one, cp, &ni, gp, &ni, &zero, gwp, &ckk)
    return gw.reshape(Co, C, k, k)
