# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels: rank-one inverse updates and weight solves.

Mirrors ``lrmvdr._kernels_py``; see that module for the contracts.
"""

import numpy as np


def sm_update(double complex[:, ::1] ainv, double complex[::1] x,
              double alpha, double min_denom):
    cdef Py_ssize_t n = ainv.shape[0]
    cdef double complex[::1] u = np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t i, j
    cdef double complex acc, avg
    cdef double quad = 0.0

    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + ainv[i, j] * x[j]
        u[i] = acc
        quad += (x[i].conjugate() * acc).real
    cdef double denom = alpha + (1.0 - alpha) * quad
    if denom <= min_denom:
        return denom

    cdef double scale = (1.0 - alpha) / denom
    cdef double inv_alpha = 1.0 / alpha
    for i in range(n):
        for j in range(n):
            ainv[i, j] = (ainv[i, j] - scale * u[i] * u[j].conjugate()) * inv_alpha
    # enforce exact Hermitian symmetry
    for i in range(n):
        ainv[i, i] = ainv[i, i].real
        for j in range(i + 1, n):
            avg = 0.5 * (ainv[i, j] + ainv[j, i].conjugate())
            ainv[i, j] = avg
            ainv[j, i] = avg.conjugate()
    return denom


def rank_one_update(double complex[:, ::1] r, double complex[::1] x, double alpha):
    cdef Py_ssize_t n = r.shape[0]
    cdef double w = 1.0 - alpha
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            r[i, j] = alpha * r[i, j] + w * x[i] * x[j].conjugate()


def project_conj(double complex[:, ::1] u, double complex[::1] x):
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t k = u.shape[1]
    out_arr = np.zeros(k, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double complex xi
    for i in range(m):
        xi = x[i]
        for j in range(k):
            out[j] = out[j] + u[i, j].conjugate() * xi
    return out_arr


def mvdr_numerator(double complex[:, ::1] ainv, double complex[::1] a):
    cdef Py_ssize_t n = ainv.shape[0]
    num_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] num = num_arr
    cdef Py_ssize_t i, j
    cdef double complex acc
    cdef double denom = 0.0
    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + ainv[i, j] * a[j]
        num[i] = acc
        denom += (a[i].conjugate() * acc).real
    return num_arr, denom


def lowrank_numerator(double complex[:, ::1] u, double complex[:, ::1] core_inv,
                      double complex[::1] a):
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t k = u.shape[1]
    at_arr = project_conj(u, a)
    cdef double complex[::1] at = at_arr
    cdef double complex[::1] y = np.empty(k, dtype=np.complex128)
    num_arr = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] num = num_arr
    cdef Py_ssize_t i, j
    cdef double complex acc
    cdef double denom = 0.0
    for i in range(k):
        acc = 0
        for j in range(k):
            acc = acc + core_inv[i, j] * at[j]
        y[i] = acc
        denom += (at[i].conjugate() * acc).real
    for i in range(m):
        acc = 0
        for j in range(k):
            acc = acc + u[i, j] * y[j]
        num[i] = acc
    return num_arr, denom
