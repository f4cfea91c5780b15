"""Scalar special functions: log-gamma and the modified Bessel function of
the second kind with real nonnegative order.

Two interchangeable backends provide the Bessel core:

* ``mvmatern.specfun._core`` -- Cython/C implementation (built at install
  time when a compiler is available),
* ``mvmatern.specfun._pure`` -- vectorized numpy implementation.

The compiled core is preferred; set ``MVMATERN_PURE=1`` to force the numpy
fallback.  Both expose the same primitive, ``kve_logscale(nu, x)``, returning
the exponentially scaled value together with a log-scale ladder so callers
can evaluate K at huge orders without overflow.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import _pure

_FORCE_PURE = os.environ.get("MVMATERN_PURE") == "1"
if not _FORCE_PURE:
    try:
        from . import _core as _backend

        _BACKEND_NAME = "compiled"
    except ImportError:
        _backend = _pure
        _BACKEND_NAME = "pure"
else:
    _backend = _pure
    _BACKEND_NAME = "pure"


def backend_name():
    """Name of the active Bessel backend: ``"compiled"`` or ``"pure"``."""
    return _BACKEND_NAME


def log_gamma(x):
    """Natural log of the gamma function for positive real ``x``.

    Accepts scalars or arrays; raises ``ValueError`` for any ``x <= 0``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("log_gamma requires positive finite arguments")
    if arr.ndim == 0:
        return math.lgamma(float(arr))
    out = np.frompyfunc(math.lgamma, 1, 1)(arr)
    return out.astype(float)


def _validate(nu, x):
    if not np.isscalar(nu) and np.asarray(nu).ndim != 0:
        raise ValueError("order must be a scalar")
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0.0:
        raise ValueError(f"order must be nonnegative, got {nu}")
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("argument must be positive and finite")
    return nu, arr


def bessel_k(nu, x, with_flags=False):
    """Modified Bessel function of the second kind, K_nu(x).

    ``nu`` is a nonnegative scalar order, ``x`` a positive scalar or array.
    Values below the float range are returned as 0.0; with
    ``with_flags=True`` the result is a pair ``(value, underflowed)``.
    Values above the float range come back as ``inf`` (use
    :func:`bessel_k_log` in that regime).
    """
    nu, arr = _validate(nu, x)
    kve, logscale = _backend.kve_logscale(nu, arr)
    with np.errstate(over="ignore", under="ignore"):
        value = kve * np.exp(logscale - arr)
    underflow = value == 0.0
    if np.asarray(x).ndim == 0:
        value = float(value)
        underflow = bool(underflow)
    if with_flags:
        return value, underflow
    return value


def bessel_k_scaled(nu, x):
    """Exponentially scaled Bessel function, ``e^x K_nu(x)``."""
    nu, arr = _validate(nu, x)
    kve, logscale = _backend.kve_logscale(nu, arr)
    with np.errstate(over="ignore"):
        value = kve * np.exp(logscale)
    if np.asarray(x).ndim == 0:
        return float(value)
    return value


def bessel_k_log(nu, x):
    """``log K_nu(x)``, finite even where K overflows or underflows float64."""
    nu, arr = _validate(nu, x)
    kve, logscale = _backend.kve_logscale(nu, arr)
    value = np.log(kve) + logscale - arr
    if np.asarray(x).ndim == 0:
        return float(value)
    return value


__all__ = [
    "backend_name",
    "log_gamma",
    "bessel_k",
    "bessel_k_scaled",
    "bessel_k_log",
]
