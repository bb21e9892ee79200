# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from scipy.linalg.cython_blas cimport zgemv

cnp.import_array()


def propagate(step, x0, Py_ssize_t nsteps):
    cdef const double complex[:, ::1] S = np.ascontiguousarray(step, dtype=np.complex128)
    cdef const double complex[::1] x = np.ascontiguousarray(x0, dtype=np.complex128)
    cdef Py_ssize_t m = x.shape[0]
    if S.shape[0] != m or S.shape[1] != m:
        raise ValueError("step matrix and state have incompatible shapes")
    out_arr = np.empty((nsteps + 1, m), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t k, i, j
    cdef double complex acc
    cdef double complex one = 1.0, zero = 0.0
    cdef int im = <int>m, inc = 1
    cdef char trans = b'T'
    for i in range(m):
        out[0, i] = x[i]
    if m > 16 and nsteps > 0:
        # row-major S read as column-major is S^T, so 'T' applies S
        for k in range(1, nsteps + 1):
            zgemv(&trans, &im, &im, &one, <double complex*>&S[0, 0], &im,
                  &out[k - 1, 0], &inc, &zero, &out[k, 0], &inc)
        return out_arr
    for k in range(1, nsteps + 1):
        for i in range(m):
            acc = 0
            for j in range(m):
                acc = acc + S[i, j] * out[k - 1, j]
            out[k, i] = acc
    return out_arr


def ball_mask(states, center, double radius):
    cdef const double complex[:, ::1] X = np.ascontiguousarray(states, dtype=np.complex128)
    cdef const double complex[::1] c = np.ascontiguousarray(center, dtype=np.complex128)
    cdef Py_ssize_t T = X.shape[0], m = X.shape[1], k, i
    if c.shape[0] != m:
        raise ValueError("center has the wrong length")
    dist_arr = np.empty(T, dtype=np.float64)
    mask_arr = np.empty(T, dtype=np.bool_)
    cdef double[::1] dist = dist_arr
    cdef cnp.npy_bool[::1] mask = mask_arr
    cdef double s, re, im
    for k in range(T):
        s = 0.0
        for i in range(m):
            re = X[k, i].real - c[i].real
            im = X[k, i].imag - c[i].imag
            s += re * re + im * im
        dist[k] = sqrt(s)
        mask[k] = dist[k] < radius
    return mask_arr, dist_arr


def weight_worst_log_ratio(log_rho, s, double log_m, double omega):
    cdef const double[::1] lr = np.ascontiguousarray(log_rho, dtype=np.float64)
    cdef const double[::1] x = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t N = lr.shape[0], i, j, bi = 0, bj = 0
    cdef double best = -1e300, r
    for i in range(N):
        for j in range(N):
            r = lr[i] - log_m - omega * fabs(x[j] - x[i]) - lr[j]
            if r > best:
                best = r
                bi = i
                bj = j
    return best, bi, bj
