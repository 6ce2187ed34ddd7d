# cython: language_level=3
"""Compiled simulation hot loops.

Fused patchwork mixing, margin quantile transform and row summation over
an ``(m, d)`` block of uniforms.  Margin codes: 0 exponential, 1 uniform,
2 Pareto, 3 lognormal.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, nextafter
from scipy.special.cython_special cimport ndtri

cnp.import_array()

NAME = "cython"


cdef inline double _nudge(double w) noexcept nogil:
    if w <= 0.0:
        return nextafter(0.0, 1.0)
    if w >= 1.0:
        return nextafter(1.0, 0.0)
    return w


cdef inline double _quantile(double w, int kind, double mu, double sigma) noexcept nogil:
    if kind == 0:
        return -log1p(-w)
    if kind == 1:
        return w
    if kind == 2:
        return w / (1.0 - w)
    return exp(mu + sigma * ndtri(w))


def _codes(kinds, Py_ssize_t d):
    codes = np.ascontiguousarray(kinds, dtype=np.intc)
    if codes.shape[0] != d:
        raise ValueError("one margin code per column required")
    if codes.min() < 0 or codes.max() > 3:
        raise ValueError("unknown margin code")
    return codes


def patchwork_mix(const double[::1] switch, const double[:, ::1] body,
                  const double[:, ::1] tail, double beta):
    cdef Py_ssize_t m = body.shape[0], d = body.shape[1], i, k
    cdef double p = 1.0 - beta
    out = np.empty((m, d))
    cdef double[:, ::1] w = out
    with nogil:
        for i in range(m):
            if switch[i] < p:
                for k in range(d):
                    w[i, k] = p * body[i, k]
            else:
                for k in range(d):
                    w[i, k] = p + beta * tail[i, k]
    return out


def nudge(w):
    cdef double[:, ::1] a = np.array(w, dtype=float, order="C", ndmin=2)
    cdef Py_ssize_t i, k
    with nogil:
        for i in range(a.shape[0]):
            for k in range(a.shape[1]):
                a[i, k] = _nudge(a[i, k])
    return np.asarray(a).reshape(np.shape(w))


def quantile_matrix(const double[:, ::1] w, kinds, const double[::1] mu,
                    const double[::1] sigma):
    cdef Py_ssize_t m = w.shape[0], d = w.shape[1], i, k
    cdef int[::1] code = _codes(kinds, d)
    out = np.empty((m, d))
    cdef double[:, ::1] x = out
    with nogil:
        for i in range(m):
            for k in range(d):
                x[i, k] = _quantile(_nudge(w[i, k]), code[k], mu[k], sigma[k])
    return out


def quantile_rowsum(const double[:, ::1] w, kinds, const double[::1] mu,
                    const double[::1] sigma):
    cdef Py_ssize_t m = w.shape[0], d = w.shape[1], i, k
    cdef int[::1] code = _codes(kinds, d)
    cdef double acc
    out = np.empty(m)
    cdef double[::1] s = out
    with nogil:
        for i in range(m):
            acc = _quantile(_nudge(w[i, 0]), code[0], mu[0], sigma[0])
            for k in range(1, d):
                acc = acc + _quantile(_nudge(w[i, k]), code[k], mu[k], sigma[k])
            s[i] = acc
    return out


def patchwork_sum(const double[::1] switch, const double[:, ::1] body,
                  const double[:, ::1] tail, double beta, kinds,
                  const double[::1] mu, const double[::1] sigma):
    cdef Py_ssize_t m = body.shape[0], d = body.shape[1], i, k
    cdef int[::1] code = _codes(kinds, d)
    cdef double p = 1.0 - beta
    cdef double acc, wik
    cdef bint in_body
    out = np.empty(m)
    cdef double[::1] s = out
    with nogil:
        for i in range(m):
            in_body = switch[i] < p
            acc = 0.0
            for k in range(d):
                if in_body:
                    wik = p * body[i, k]
                else:
                    wik = p + beta * tail[i, k]
                if k == 0:
                    acc = _quantile(_nudge(wik), code[k], mu[k], sigma[k])
                else:
                    acc = acc + _quantile(_nudge(wik), code[k], mu[k], sigma[k])
            s[i] = acc
    return out
