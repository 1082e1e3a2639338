# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled panel-integral kernel for the choice-probability integrand.

Same contract as ``_ref.panel_choice_integrals``; this is the hot inner
loop of the general (non-Luce) likelihood evaluation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, exp, fabs, sqrt

cnp.import_array()

cdef double _SQRT1_2 = 0.7071067811865476
cdef double _SQRT2PI = 2.5066282746310002
cdef double _EULER = 0.5772156649015329


cdef inline double _cdf(int kind, double scale, double x) noexcept nogil:
    cdef double t
    if kind == 0:
        return 0.5 * (1.0 + erf(x / scale * _SQRT1_2))
    elif kind == 1:
        t = x / scale + _EULER
        if t < -40.0:
            return 0.0
        return exp(-exp(-t))
    elif kind == 2:
        if x < 0.0:
            return 0.5 * exp(x / scale)
        return 1.0 - 0.5 * exp(-x / scale)
    else:
        t = (x + scale) / (2.0 * scale)
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        return t


cdef inline double _pdf(int kind, double scale, double x) noexcept nogil:
    cdef double t, u
    if kind == 0:
        u = x / scale
        return exp(-0.5 * u * u) / (scale * _SQRT2PI)
    elif kind == 1:
        t = x / scale + _EULER
        if t < -40.0:
            return 0.0
        return exp(-t - exp(-t)) / scale
    elif kind == 2:
        return exp(-fabs(x) / scale) / (2.0 * scale)
    else:
        if fabs(x) <= scale:
            return 1.0 / (2.0 * scale)
        return 0.0


def panel_choice_integrals(int kind, double scale,
                           double[:, ::1] X, cnp.int64_t[::1] rows,
                           double[::1] lo, double[::1] hi,
                           double[::1] glx, double[::1] glw,
                           bint want_grad):
    cdef Py_ssize_t P = rows.shape[0]
    cdef Py_ssize_t km1 = X.shape[1]
    cdef Py_ssize_t Q = glx.shape[0]
    cdef Py_ssize_t ncomp = 1 + km1 if want_grad else 1
    out_arr = np.zeros((P, ncomp), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if P == 0:
        return out_arr

    cdef double[::1] fbuf = np.empty(km1, dtype=np.float64)
    cdef double[::1] cbuf = np.empty(km1, dtype=np.float64)
    cdef double[::1] pre = np.empty(km1 + 1, dtype=np.float64)
    cdef double[::1] suf = np.empty(km1 + 1, dtype=np.float64)

    cdef Py_ssize_t p, q, u, r
    cdef double half, mid, z, w, fz, prod, xs

    with nogil:
        for p in range(P):
            r = rows[p]
            half = 0.5 * (hi[p] - lo[p])
            mid = 0.5 * (hi[p] + lo[p])
            for q in range(Q):
                z = mid + half * glx[q]
                w = glw[q] * half
                fz = _pdf(kind, scale, z)
                if fz == 0.0:
                    continue
                for u in range(km1):
                    xs = X[r, u] + z
                    cbuf[u] = _cdf(kind, scale, xs)
                    if want_grad:
                        fbuf[u] = _pdf(kind, scale, xs)
                if want_grad:
                    pre[0] = 1.0
                    for u in range(km1):
                        pre[u + 1] = pre[u] * cbuf[u]
                    suf[km1] = 1.0
                    for u in range(km1 - 1, -1, -1):
                        suf[u] = suf[u + 1] * cbuf[u]
                    out[p, 0] += w * fz * pre[km1]
                    for u in range(km1):
                        out[p, 1 + u] += w * fz * fbuf[u] * pre[u] * suf[u + 1]
                else:
                    prod = 1.0
                    for u in range(km1):
                        prod *= cbuf[u]
                        if prod == 0.0:
                            break
                    out[p, 0] += w * fz * prod
    return out_arr
