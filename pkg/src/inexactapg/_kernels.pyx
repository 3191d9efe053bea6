# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinatewise prox kernels (same contracts as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, fmax

cnp.import_array()


def soft_threshold(z, double t):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t i, n = zv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double a
    for i in range(n):
        a = zv[i]
        if a > t:
            ov[i] = a - t
        elif a < -t:
            ov[i] = a + t
        else:
            ov[i] = 0.0
    return out


def l1_subdiff_distance(x, v, double lam):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double acc = 0.0, d
    for i in range(n):
        if xv[i] > 0.0:
            d = vv[i] + lam
        elif xv[i] < 0.0:
            d = vv[i] - lam
        else:
            d = fmax(fabs(vv[i]) - lam, 0.0)
        acc += d * d
    return sqrt(acc)


def box_subdiff_distance(x, v, lo, hi):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef const double[::1] lv = np.ascontiguousarray(np.broadcast_to(lo, np.shape(x)), dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(np.broadcast_to(hi, np.shape(x)), dtype=np.float64)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double acc = 0.0, d
    cdef bint lo_act, hi_act
    for i in range(n):
        lo_act = xv[i] <= lv[i]
        hi_act = xv[i] >= hv[i]
        if lo_act and hi_act:
            d = 0.0
        elif lo_act:
            d = fmax(-vv[i], 0.0)
        elif hi_act:
            d = fmax(vv[i], 0.0)
        else:
            d = fabs(vv[i])
        acc += d * d
    return sqrt(acc)


def project_simplex(z, double s):
    zarr = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] zv = zarr
    cdef double[::1] u = np.sort(zarr)[::-1].copy()
    cdef Py_ssize_t i, n = zv.shape[0]
    cdef double css = 0.0, theta = 0.0
    for i in range(n):
        css += u[i]
        if u[i] - (css - s) / (i + 1) > 0.0:
            theta = (css - s) / (i + 1)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(n):
        ov[i] = fmax(zv[i] - theta, 0.0)
    return out
