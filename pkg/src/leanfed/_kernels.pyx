# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled softmax-regression kernels.

Drop-in replacement for ``_kernels_py``. The mini-batch SGD loop runs
without the GIL so client workers on threads train concurrently.
"""

import numpy as np

from libc.math cimport exp, log
from libc.stdlib cimport free, malloc


cdef inline double _logit(const double[:, ::1] W, const double[:, ::1] X,
                          Py_ssize_t i, Py_ssize_t c) noexcept nogil:
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t j
    cdef double z = W[c, d]
    for j in range(d):
        z += W[c, j] * X[i, j]
    return z


cdef inline void _batch_grad(const double[:, ::1] W, const double[:, ::1] X,
                             const long long[::1] y, const long long[::1] order,
                             Py_ssize_t start, Py_ssize_t stop,
                             double* grad, double* probs, double* loss_sum) noexcept nogil:
    cdef Py_ssize_t C = W.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t stride = d + 1
    cdef Py_ssize_t t, i, c, j
    cdef double z, zmax, zy, total
    for t in range(start, stop):
        i = order[t]
        zmax = -1e308
        for c in range(C):
            z = W[c, d]
            for j in range(d):
                z += W[c, j] * X[i, j]
            probs[c] = z
            if z > zmax:
                zmax = z
        zy = probs[y[i]]
        total = 0.0
        for c in range(C):
            probs[c] = exp(probs[c] - zmax)
            total += probs[c]
        loss_sum[0] += log(total) + zmax - zy
        for c in range(C):
            probs[c] /= total
        probs[y[i]] -= 1.0
        for c in range(C):
            z = probs[c]
            for j in range(d):
                grad[c * stride + j] += z * X[i, j]
            grad[c * stride + d] += z


def loss_and_grad(W, X, y, double weight_decay):
    cdef const double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const long long[::1] yv = np.ascontiguousarray(y, dtype=np.int64)
    cdef Py_ssize_t m = Xv.shape[0]
    cdef Py_ssize_t C = Wv.shape[0]
    cdef Py_ssize_t cols = Wv.shape[1]
    cdef const long long[::1] order = np.arange(m, dtype=np.int64)
    grad = np.zeros((C, cols))
    cdef double[:, ::1] G = grad
    cdef double* probs = <double*> malloc(C * sizeof(double))
    cdef double loss_sum = 0.0
    cdef double sq = 0.0
    cdef Py_ssize_t c, j
    if probs == NULL:
        raise MemoryError()
    try:
        with nogil:
            _batch_grad(Wv, Xv, yv, order, 0, m, &G[0, 0], probs, &loss_sum)
            for c in range(C):
                for j in range(cols):
                    G[c, j] = G[c, j] / m + weight_decay * Wv[c, j]
                    sq += Wv[c, j] * Wv[c, j]
    finally:
        free(probs)
    return loss_sum / m + 0.5 * weight_decay * sq, grad


def sgd_epoch(double[:, ::1] W, const double[:, ::1] X, const long long[::1] y,
              const long long[::1] order, Py_ssize_t batch_size, double lr,
              double weight_decay):
    """One pass over ``X[order]`` in mini-batches, updating ``W`` in place."""
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t C = W.shape[0]
    cdef Py_ssize_t cols = W.shape[1]
    cdef Py_ssize_t start, stop, c, j, m
    cdef double* grad = <double*> malloc(C * cols * sizeof(double))
    cdef double* probs = <double*> malloc(C * sizeof(double))
    cdef double unused = 0.0
    if grad == NULL or probs == NULL:
        free(grad)
        free(probs)
        raise MemoryError()
    try:
        with nogil:
            start = 0
            while start < n:
                stop = start + batch_size
                if stop > n:
                    stop = n
                m = stop - start
                for j in range(C * cols):
                    grad[j] = 0.0
                _batch_grad(W, X, y, order, start, stop, grad, probs, &unused)
                for c in range(C):
                    for j in range(cols):
                        W[c, j] -= lr * (weight_decay * W[c, j] + grad[c * cols + j] / m)
                start = stop
    finally:
        free(grad)
        free(probs)


def predict(W, X):
    cdef const double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t C = Wv.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef Py_ssize_t i, c, best
    cdef double z, zbest
    with nogil:
        for i in range(n):
            best = 0
            zbest = _logit(Wv, Xv, i, 0)
            for c in range(1, C):
                z = _logit(Wv, Xv, i, c)
                if z > zbest:
                    best = c
                    zbest = z
            ov[i] = best
    return out
