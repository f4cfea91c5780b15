# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the modified Bessel function K of real order.

Same algorithm as ``_pure``: Temme series for x <= 2, Steed's CF2 for
x > 2, upward recurrence in the order with a log-scale ladder.  The hot
entry point loops over the argument array in C with the GIL released.
"""

import numpy as np

cimport cython
from libc.math cimport M_PI, cosh, exp, fabs, floor, log, sin, sinh, sqrt

cdef double _EPS = 2.2e-16
cdef double _BIG = 1e250
cdef double _LOG_BIG = log(1e250)
cdef int _TEMME_MAX_TERMS = 200
cdef int _CF2_MAX_ITERS = 2000

cdef double[7] _C1 = [-1.142022680371168e0, 6.5165112670737e-3,
                      3.087090173086e-4, -3.4706269649e-6, 6.9437664e-9,
                      3.67795e-11, -1.356e-13]
cdef double[8] _C2 = [1.843740587300905e0, -7.68528408447867e-2,
                      1.2719271366546e-3, -4.9717367042e-6, -3.31261198e-8,
                      2.423096e-10, -1.702e-13, -1.49e-15]


cdef double _chebev(double* c, int m, double x) noexcept nogil:
    cdef double d = 0.0, dd = 0.0, sv
    cdef double y2 = 2.0 * x
    cdef int j
    for j in range(m - 1, 0, -1):
        sv = d
        d = y2 * d - dd + c[j]
        dd = sv
    return x * d - dd + 0.5 * c[0]


cdef void _kve_pair_series(double mu, double x, double* kmu, double* kmu1) noexcept nogil:
    cdef double x2 = 0.5 * x
    cdef double pimu = M_PI * mu
    cdef double fact = 1.0 if fabs(pimu) < 1e-30 else pimu / sin(pimu)
    cdef double d = -log(x2)
    cdef double e = mu * d
    cdef double fact2 = 1.0 if fabs(e) < 1e-300 else sinh(e) / e
    cdef double xx = 8.0 * mu * mu - 1.0
    cdef double gam1 = _chebev(&_C1[0], 7, xx)
    cdef double gam2 = _chebev(&_C2[0], 8, xx)
    cdef double gampl = gam2 - mu * gam1
    cdef double gammi = gam2 + mu * gam1
    cdef double ff = fact * (gam1 * cosh(e) + gam2 * fact2 * d)
    cdef double total = ff
    cdef double ee = exp(e)
    cdef double p = 0.5 * ee / gampl
    cdef double q = 0.5 / (ee * gammi)
    cdef double c = 1.0
    cdef double dsq = x2 * x2
    cdef double total1 = p
    cdef double mu2 = mu * mu
    cdef double delta
    cdef int i
    for i in range(1, _TEMME_MAX_TERMS + 1):
        ff = (i * ff + p + q) / (i * i - mu2)
        c = c * dsq / i
        p = p / (i - mu)
        q = q / (i + mu)
        delta = c * ff
        total = total + delta
        total1 = total1 + c * (p - i * ff)
        if fabs(delta) < fabs(total) * _EPS:
            break
    cdef double scale = exp(x)
    kmu[0] = total * scale
    kmu1[0] = total1 * (2.0 / x) * scale


cdef void _kve_pair_cf2(double mu, double x, double* kmu, double* kmu1) noexcept nogil:
    cdef double a1 = 0.25 - mu * mu
    cdef double b = 2.0 * (1.0 + x)
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double delh = d
    cdef double q1 = 0.0
    cdef double q2 = 1.0
    cdef double q = a1
    cdef double c = a1
    cdef double a = -a1
    cdef double s = 1.0 + q * delh
    cdef double qnew, dels
    cdef int i
    for i in range(2, _CF2_MAX_ITERS + 1):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if fabs(dels) < fabs(s) * _EPS:
            break
    h = a1 * h
    kmu[0] = sqrt(M_PI / (2.0 * x)) / s
    kmu1[0] = kmu[0] * (mu + x + 0.5 - h) / x


cdef void _kve_logscale_scalar(double nu, double x, double* out_kve,
                               double* out_logscale) noexcept nogil:
    cdef int n = <int>floor(nu + 0.5)
    cdef double mu = nu - n
    cdef double kmu, kmu1, knext, logscale
    cdef int j
    if x <= 2.0:
        _kve_pair_series(mu, x, &kmu, &kmu1)
    else:
        _kve_pair_cf2(mu, x, &kmu, &kmu1)
    logscale = 0.0
    if n > 0:
        for j in range(1, n):
            knext = kmu + (mu + j) * (2.0 / x) * kmu1
            kmu = kmu1
            kmu1 = knext
            if kmu1 > _BIG:
                kmu /= _BIG
                kmu1 /= _BIG
                logscale += _LOG_BIG
        kmu = kmu1
    out_kve[0] = kmu
    out_logscale[0] = logscale


def kve_logscale(double nu, x):
    """Compiled twin of ``_pure.kve_logscale``; see that docstring."""
    if nu < 0:
        raise ValueError(f"order must be nonnegative, got {nu}")
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("argument must be positive and finite")
    scalar = arr.ndim == 0
    flat = np.ascontiguousarray(np.atleast_1d(arr).ravel())
    cdef double[::1] xv = flat
    out_kve = np.empty(flat.shape[0], dtype=np.float64)
    out_ls = np.empty(flat.shape[0], dtype=np.float64)
    cdef double[::1] kv = out_kve
    cdef double[::1] lv = out_ls
    cdef Py_ssize_t i, m = xv.shape[0]
    with nogil:
        for i in range(m):
            _kve_logscale_scalar(nu, xv[i], &kv[i], &lv[i])
    if scalar:
        return float(out_kve[0]), float(out_ls[0])
    shape = np.atleast_1d(arr).shape
    return out_kve.reshape(shape), out_ls.reshape(shape)
