# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise kernels.  Inputs are contiguous float64 arrays; see kernels.py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


def heis_log_pair_sum(const double[::1] x, const double[::1] y, const double[::1] t,
                      const double[::1] m, const double[::1] diag):
    """sum_{i != j} m_i m_j ln d(x_i, x_j) + sum_i m_i^2 diag_i for the Koranyi gauge."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double xi, yi, ti, dx, dy, dt, r2, row, total = 0.0, self_part = 0.0
    for i in range(n):
        xi = x[i]
        yi = y[i]
        ti = t[i]
        row = 0.0
        for j in range(i + 1, n):
            dx = xi - x[j]
            dy = yi - y[j]
            dt = ti - t[j] - 2.0 * (yi * x[j] - xi * y[j])
            r2 = dx * dx + dy * dy
            row += m[j] * log(r2 * r2 + dt * dt)
        # ln d = ln(d^4) / 4, and each unordered pair counts twice
        total += 0.5 * m[i] * row
        self_part += m[i] * m[i] * diag[i]
    return total + self_part


def sphere_ball_masses(const double[::1] c1r, const double[::1] c1i,
                       const double[::1] c2r, const double[::1] c2i,
                       const double[::1] z1r, const double[::1] z1i,
                       const double[::1] z2r, const double[::1] z2i,
                       const double[::1] w, double thresh):
    """For each centre c, the sum of w over nodes q with |1 - c . conj(q)| < thresh."""
    cdef Py_ssize_t nc = c1r.shape[0], n = z1r.shape[0]
    cdef Py_ssize_t i, j
    cdef double re, im, acc, t2 = thresh * thresh
    out = np.zeros(nc)
    cdef double[::1] o = out
    for i in range(nc):
        acc = 0.0
        for j in range(n):
            re = 1.0 - (c1r[i] * z1r[j] + c1i[i] * z1i[j] + c2r[i] * z2r[j] + c2i[i] * z2i[j])
            im = c1i[i] * z1r[j] - c1r[i] * z1i[j] + c2i[i] * z2r[j] - c2r[i] * z2i[j]
            if re * re + im * im < t2:
                acc += w[j]
        o[i] = acc
    return out
