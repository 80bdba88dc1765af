# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ARMA recursion kernels.

The moving-average part of the recursions is inherently sequential, so these
loops are the hot path of likelihood evaluation, simulation and per-draw
pointwise density computation. ``tsproj.kernels`` falls back to the NumPy
implementations in ``tsproj.kernels._ref`` when this module is unavailable.
All recursions use zero initial conditions for pre-sample values.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def simulate_core(double c, double[::1] phi, double[::1] theta,
                  double[::1] innovations):
    """Generate y_t = c + sum(phi_i y_{t-i}) + e_t + sum(theta_j e_{t-j})."""
    cdef Py_ssize_t n = innovations.shape[0]
    cdef Py_ssize_t p = phi.shape[0]
    cdef Py_ssize_t q = theta.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t t, i, j
    cdef double acc
    for t in range(n):
        acc = c + innovations[t]
        for i in range(p):
            if t - 1 - i >= 0:
                acc += phi[i] * y[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc += theta[j] * innovations[t - 1 - j]
        y[t] = acc
    return out


def residuals_core(double[::1] y, double c, double[::1] phi,
                   double[::1] theta):
    """Invert the ARMA recursion: eps_t = y_t - c - AR part - MA feedback."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t p = phi.shape[0]
    cdef Py_ssize_t q = theta.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] eps = out
    cdef Py_ssize_t t, i, j
    cdef double acc
    for t in range(n):
        acc = y[t] - c
        for i in range(p):
            if t - 1 - i >= 0:
                acc -= phi[i] * y[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc -= theta[j] * eps[t - 1 - j]
        eps[t] = acc
    return out


def batch_residuals_core(double[::1] y, double[::1] cs, double[:, ::1] phis,
                         double[:, ::1] thetas):
    """Residual recursion for S parameter draws at once; returns (S, T)."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t S = cs.shape[0]
    cdef Py_ssize_t p = phis.shape[1]
    cdef Py_ssize_t q = thetas.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((S, n), dtype=np.float64)
    cdef double[:, ::1] eps = out
    cdef Py_ssize_t s, t, i, j
    cdef double acc
    with nogil:
        for s in range(S):
            for t in range(n):
                acc = y[t] - cs[s]
                for i in range(p):
                    if t - 1 - i >= 0:
                        acc -= phis[s, i] * y[t - 1 - i]
                for j in range(q):
                    if t - 1 - j >= 0:
                        acc -= thetas[s, j] * eps[s, t - 1 - j]
                eps[s, t] = acc
    return out
