# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: sum-tree maintenance and the nearest-triple mean.

Operation order mirrors ``_kernels_py`` exactly; the test suite checks the
two backends agree bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"


def tree_set(double[::1] tree, Py_ssize_t leaf_offset, Py_ssize_t index, double value):
    cdef Py_ssize_t j = leaf_offset + index
    tree[j] = value
    j //= 2
    while j >= 1:
        tree[j] = tree[2 * j] + tree[2 * j + 1]
        j //= 2


def tree_find(const double[::1] tree, Py_ssize_t leaf_offset, targets, Py_ssize_t size):
    cdef const double[::1] tv = np.ascontiguousarray(targets, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    cdef Py_ssize_t i, j, idx
    cdef double t, left
    for i in range(n):
        t = tv[i]
        j = 1
        while j < leaf_offset:
            left = tree[2 * j]
            if t < left:
                j = 2 * j
            else:
                t = t - left
                j = 2 * j + 1
        idx = j - leaf_offset
        if idx > size - 1:
            idx = size - 1
        ov[i] = idx
    return out


def nearest_mean(const double[:, ::1] sim, received):
    cdef const cnp.uint8_t[::1] rv = np.ascontiguousarray(received, dtype=np.uint8)
    cdef Py_ssize_t K = sim.shape[0], M = sim.shape[1]
    cdef Py_ssize_t k, j
    cdef double total = 0.0, best
    cdef bint any_rx = False, seen
    for j in range(M):
        if rv[j]:
            any_rx = True
            break
    if not any_rx:
        return 0.0
    for k in range(K):
        seen = False
        best = 0.0
        for j in range(M):
            if rv[j]:
                if not seen or sim[k, j] > best:
                    best = sim[k, j]
                    seen = True
        total += best
    return total / K


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double b1, double b2, double c1, double c2, double eps):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double gi
    for i in range(n):
        gi = g[i]
        m[i] = m[i] * b1 + (1.0 - b1) * gi
        v[i] = v[i] * b2 + (1.0 - b2) * gi * gi
        p[i] = p[i] - lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)


def soft_update(double[::1] target, const double[::1] online, double tau):
    cdef Py_ssize_t i, n = target.shape[0]
    cdef double keep = 1.0 - tau
    for i in range(n):
        target[i] = target[i] * keep + tau * online[i]
