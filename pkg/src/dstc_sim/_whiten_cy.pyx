# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled whitened-metric kernel.

Forward-substitutes all candidates through the lower Cholesky factor at
once and accumulates the squared norms, so no (dim x candidates) solve is
materialized beyond two small scratch planes.  This is the inner loop of
ML decoding: one call per received block scans the whole codebook.

The substitution recurrence is sequential in the dimension index but
independent across candidates, so the candidate loop is innermost over
contiguous storage and auto-vectorizes; arithmetic is spelled out on
real/imaginary parts because compilers optimize that far better than C99
complex operations.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def whitened_metrics(cnp.complex128_t[:, ::1] lower,
                     cnp.complex128_t[::1] y,
                     cnp.complex128_t[:, ::1] means):
    cdef Py_ssize_t n_cand = means.shape[0]
    cdef Py_ssize_t dim = y.shape[0]
    if lower.shape[0] != dim or lower.shape[1] != dim or means.shape[1] != dim:
        raise ValueError("factor, observation, and means have inconsistent shapes")

    out_arr = np.zeros(n_cand, dtype=np.float64)
    cdef double[::1] out = out_arr
    # w holds the running solution plane, split into real and imaginary parts
    w_nd = np.empty((2, dim, n_cand), dtype=np.float64)
    cdef double[:, :, ::1] w = w_nd
    cdef Py_ssize_t k, i, j
    cdef double lr, li, rr, ri, ar, ai, wr, wi, dr, di, mag

    # residuals start at y - mean, transposed to candidate-contiguous planes
    for i in range(dim):
        ar = y[i].real
        ai = y[i].imag
        for k in range(n_cand):
            w[0, i, k] = ar - means[k, i].real
            w[1, i, k] = ai - means[k, i].imag

    for i in range(dim):
        for j in range(i):
            lr = lower[i, j].real
            li = lower[i, j].imag
            for k in range(n_cand):
                wr = w[0, j, k]
                wi = w[1, j, k]
                w[0, i, k] -= lr * wr - li * wi
                w[1, i, k] -= lr * wi + li * wr
        dr = lower[i, i].real
        di = lower[i, i].imag
        mag = dr * dr + di * di
        rr = dr / mag
        ri = -di / mag
        for k in range(n_cand):
            ar = w[0, i, k]
            ai = w[1, i, k]
            wr = ar * rr - ai * ri
            wi = ar * ri + ai * rr
            w[0, i, k] = wr
            w[1, i, k] = wi
            out[k] += wr * wr + wi * wi
    return out_arr
