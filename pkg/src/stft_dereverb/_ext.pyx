# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Must stay numerically interchangeable with _fallback."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, floor, fabs, M_PI

cnp.import_array()


def overlap_add(const double[:, ::1] frames, const double[::1] window, Py_ssize_t hop):
    cdef Py_ssize_t n_frames = frames.shape[0]
    cdef Py_ssize_t frame_len = frames.shape[1]
    cdef Py_ssize_t total = (n_frames - 1) * hop + frame_len if n_frames > 0 else 0
    out_arr = np.zeros(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t l, m, base
    for l in range(n_frames):
        base = l * hop
        for m in range(frame_len):
            out[base + m] += frames[l, m] * window[m]
    return out_arr


def frame_convolve(const double complex[:, ::1] spec, const double complex[:, ::1] coeffs):
    cdef Py_ssize_t n_in = spec.shape[0]
    cdef Py_ssize_t n_bins = spec.shape[1]
    cdef Py_ssize_t n_taps = coeffs.shape[1]
    out_arr = np.zeros((n_in + n_taps - 1, n_bins), dtype=np.complex128)
    # real views, taps-major coefficients so the bin loop is contiguous
    cdef double[:, ::1] out = out_arr.view(np.float64)
    cdef const double[:, ::1] x = np.asarray(spec).view(np.float64)
    cdef double[:, ::1] g = np.ascontiguousarray(np.asarray(coeffs).T).view(np.float64)
    cdef Py_ssize_t i, j, k
    cdef double gr, gi, xr, xi
    for i in range(n_in):
        for j in range(n_taps):
            for k in range(n_bins):
                gr = g[j, 2 * k]
                gi = g[j, 2 * k + 1]
                xr = x[i, 2 * k]
                xi = x[i, 2 * k + 1]
                out[i + j, 2 * k] += gr * xr - gi * xi
                out[i + j, 2 * k + 1] += gr * xi + gi * xr
    return out_arr


def deposit_images(const double[::1] delays, const double[::1] amps,
                   Py_ssize_t n_taps, Py_ssize_t half_width):
    out_arr = np.zeros(n_taps, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, n, lo, hi
    cdef Py_ssize_t n_img = delays.shape[0]
    cdef double t, x, s, taper
    cdef double span = <double>(half_width + 1)
    for i in range(n_img):
        t = delays[i]
        lo = <Py_ssize_t>floor(t) - half_width + 1
        hi = <Py_ssize_t>floor(t) + half_width
        if lo < 0:
            lo = 0
        if hi > n_taps - 1:
            hi = n_taps - 1
        for n in range(lo, hi + 1):
            x = n - t
            if fabs(x) > half_width:
                continue
            if x == 0.0:
                s = 1.0
            else:
                s = sin(M_PI * x) / (M_PI * x)
            taper = 0.5 * (1.0 + cos(M_PI * x / span))
            out[n] += amps[i] * s * taper
    return out_arr
