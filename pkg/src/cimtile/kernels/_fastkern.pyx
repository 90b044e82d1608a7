# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled conversion kernels; must match kernels.pyref bit-for-bit."""

from libc.math cimport floor

import numpy as np


cdef inline long long _clampll(long long v, long long lo, long long hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef inline double _clip01(double x) nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


def quantize_counts(crossings, long long lo=0, long long hi=63):
    cdef const double[::1] x = np.ascontiguousarray(crossings, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _clampll(<long long> floor(x[i] + 0.5), lo, hi)
    return out_arr


def convert_counts(crossings, offset_counts, cal_counts):
    cdef const double[::1] x = np.ascontiguousarray(crossings, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(offset_counts, dtype=np.int64)
    cdef const long long[::1] cal = np.ascontiguousarray(cal_counts, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long long raw
    with nogil:
        for i in range(n):
            raw = <long long> floor(x[i] + 0.5) + off[i] - cal[i]
            out[i] = _clampll(raw, 0, 63)
    return out_arr


def ewise_levels(a_codes, b_codes, bint is_mul, noise_a, noise_b):
    cdef const unsigned char[::1] a = np.ascontiguousarray(a_codes, dtype=np.uint8)
    cdef const unsigned char[::1] b = np.ascontiguousarray(b_codes, dtype=np.uint8)
    cdef const double[::1] na = np.ascontiguousarray(noise_a, dtype=np.float64)
    cdef const double[::1] nb = np.ascontiguousarray(noise_b, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double la, lb
    with nogil:
        for i in range(n):
            la = _clip01(a[i] / 15.0 + na[i])
            if is_mul:
                out[i] = _clip01(la * (b[i] / 15.0))
            else:
                lb = _clip01(b[i] / 15.0 + nb[i])
                out[i] = (la + lb) * 0.5
    return out_arr


def ewise_convert(a_codes, b_codes, bint is_mul, noise_a, noise_b,
                  offset_counts, cal_counts):
    cdef const unsigned char[::1] a = np.ascontiguousarray(a_codes, dtype=np.uint8)
    cdef const unsigned char[::1] b = np.ascontiguousarray(b_codes, dtype=np.uint8)
    cdef const double[::1] na = np.ascontiguousarray(noise_a, dtype=np.float64)
    cdef const double[::1] nb = np.ascontiguousarray(noise_b, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(offset_counts, dtype=np.int64)
    cdef const long long[::1] cal = np.ascontiguousarray(cal_counts, dtype=np.int64)
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double la, lb, level
    cdef long long raw
    with nogil:
        for i in range(n):
            la = _clip01(a[i] / 15.0 + na[i])
            if is_mul:
                level = _clip01(la * (b[i] / 15.0))
            else:
                lb = _clip01(b[i] / 15.0 + nb[i])
                level = (la + lb) * 0.5
            raw = <long long> floor(level * 63.0 + 0.5) + off[i] - cal[i]
            out[i] = _clampll(raw, 0, 63)
    return out_arr
