# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p

cnp.import_array()

DEF LAW_CONSTANT = 0
DEF LAW_EXPONENTIAL = 1
DEF LAW_UNIFORM = 2
DEF LAW_BERNOULLI = 3


def apply_book_events(const int[::1] cats, long long[::1] ask, long long[::1] bid,
                      int M, int a, int b, unsigned char[::1] applied,
                      int[::1] out_bid, int[::1] out_ask):
    cdef Py_ssize_t k, n = cats.shape[0]
    cdef int c, p
    cdef unsigned char ok
    cdef int lb = 2 + M
    cdef int cb = 2 + 2 * M
    cdef int cs = 2 + 3 * M
    with nogil:
        for k in range(n):
            c = cats[k]
            ok = 0
            if c == 0:
                if a <= M:
                    ask[a] -= 1
                    ok = 1
                    if ask[a] == 0:
                        a += 1
                        while a <= M and ask[a] == 0:
                            a += 1
            elif c == 1:
                if b >= 1:
                    bid[b] -= 1
                    ok = 1
                    if bid[b] == 0:
                        b -= 1
                        while b >= 1 and bid[b] == 0:
                            b -= 1
            elif c < lb:
                p = a - (c - 1)
                if p >= 1:
                    bid[p] += 1
                    ok = 1
                    if p > b:
                        b = p
            elif c < cb:
                p = b + (c - lb + 1)
                if p <= M:
                    ask[p] += 1
                    ok = 1
                    if p < a:
                        a = p
            elif c < cs:
                p = b - (c - cb)
                if p >= 1 and bid[p] > 0:
                    bid[p] -= 1
                    ok = 1
                    if p == b and bid[p] == 0:
                        b -= 1
                        while b >= 1 and bid[b] == 0:
                            b -= 1
            else:
                p = a + (c - cs)
                if p <= M and ask[p] > 0:
                    ask[p] -= 1
                    ok = 1
                    if p == a and ask[p] == 0:
                        a += 1
                        while a <= M and ask[a] == 0:
                            a += 1
            applied[k] = ok
            out_bid[k] = b
            out_ask[k] = a
    return a, b


cdef inline double _inv(int law, double p1, double p2, double v) noexcept nogil:
    if law == LAW_EXPONENTIAL:
        return -p1 * log1p(-v)
    if law == LAW_UNIFORM:
        return p1 + (p2 - p1) * v
    if law == LAW_BERNOULLI:
        return p1 if v < p2 else 0.0
    return p1


def _check_law(int law):
    if law < LAW_CONSTANT or law > LAW_BERNOULLI:
        raise ValueError(f"unknown law code {law}")


def component_sums(const long long[::1] counts, const double[::1] uniforms,
                   int law, double p1, double p2):
    _check_law(law)
    cdef Py_ssize_t n = counts.shape[0], i, j, pos = 0
    cdef long long m
    cdef double s
    out = np.zeros(n)
    cdef double[::1] o = out
    if uniforms.shape[0] < _total(counts):
        raise ValueError("not enough uniforms")
    with nogil:
        for i in range(n):
            s = 0.0
            m = counts[i]
            for j in range(m):
                s += _inv(law, p1, p2, uniforms[pos])
                pos += 1
            o[i] = s
    return out


def mixture_sums(const long long[::1] counts, const double[::1] uniforms, double weight,
                 int law_plus, double pp1, double pp2,
                 int law_minus, double pm1, double pm2):
    _check_law(law_plus)
    _check_law(law_minus)
    cdef Py_ssize_t n = counts.shape[0], i, j, pos = 0
    cdef long long m
    cdef double s, u
    out = np.zeros(n)
    cdef double[::1] o = out
    if uniforms.shape[0] < _total(counts):
        raise ValueError("not enough uniforms")
    with nogil:
        for i in range(n):
            s = 0.0
            m = counts[i]
            for j in range(m):
                u = uniforms[pos]
                pos += 1
                if u < weight:
                    s += _inv(law_plus, pp1, pp2, u / weight)
                else:
                    s -= _inv(law_minus, pm1, pm2, (u - weight) / (1.0 - weight))
            o[i] = s
    return out


cdef long long _total(const long long[::1] counts):
    cdef Py_ssize_t i
    cdef long long t = 0
    for i in range(counts.shape[0]):
        t += counts[i]
    return t
