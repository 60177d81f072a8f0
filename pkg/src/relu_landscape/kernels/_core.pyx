# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loops for batched loss evaluation and gap counting."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def relu_loss_batch(const double[:, ::1] X, const double[::1] y, const double[:, ::1] Z,
                    const double[:, :, ::1] W):
    """Mean squared loss of ``G`` networks; ``Z`` is (G, K), ``W`` is (G, K, d)."""
    cdef Py_ssize_t G = W.shape[0], K = W.shape[1], d = W.shape[2], N = X.shape[0]
    cdef Py_ssize_t g, i, j, k
    cdef double pred, act, e, acc
    out = np.empty(G, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for g in range(G):
            acc = 0.0
            for i in range(N):
                pred = 0.0
                for j in range(K):
                    act = 0.0
                    for k in range(d):
                        act = act + W[g, j, k] * X[i, k]
                    if act > 0.0:
                        pred = pred + Z[g, j] * act
                e = pred - y[i]
                acc = acc + e * e
            res[g] = acc / N
    return out


def count_trapped(const double[:, ::1] x, const double[::1] lo, const double[::1] hi):
    """Rows of ``x`` with no entry strictly inside any ``(lo[g], hi[g])``."""
    cdef Py_ssize_t T = x.shape[0], N = x.shape[1], G = lo.shape[0]
    cdef Py_ssize_t t, i, g
    cdef long count = 0
    cdef bint hit
    cdef double v
    with nogil:
        for t in range(T):
            hit = False
            for i in range(N):
                v = x[t, i]
                for g in range(G):
                    if lo[g] < v and v < hi[g]:
                        hit = True
                        break
                if hit:
                    break
            if not hit:
                count += 1
    return count
