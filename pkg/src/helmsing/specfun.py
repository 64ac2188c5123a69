"""Gamma, Bessel J (any real order), the Y limit combination and H^(1).

J is the power series with reciprocal-Gamma coefficients for small
arguments, Steed's continued fractions in the transition zone and the
Hankel asymptotic expansion for t >= max(30, 2|nu|).  Y is the limit
(cos(nu pi) J_nu - J_{-nu}) / sin(nu pi); near integer orders the limit is
taken numerically (symmetric quotient in the order, one Richardson step).

All public functions accept scalars or arrays and return the same shape.
"""

import math

import numpy as np

from . import _kernels
from ._fallback import rgamma as _rgamma_scalar
from .errors import DomainError

MAX_ORDER = 20.0


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return np.asarray(arr).item() if scalar else arr


def gamma(x):
    """Euler Gamma; raises DomainError at the poles 0, -1, -2, ..."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma pole at {x}")
    return math.gamma(x)


def rgamma(x):
    """1/Gamma(x) for every real x (zero at the poles)."""
    arr, scalar = _as_array(x)
    out = np.vectorize(_rgamma_scalar, otypes=[float])(arr)
    return _out(out, scalar)


def _check_order(nu):
    nu = float(nu)
    if not math.isfinite(nu):
        raise DomainError("order must be finite")
    return nu


def bessel_j(nu, t):
    """J_nu(t) for real nu and t >= 0."""
    nu = _check_order(nu)
    arr, scalar = _as_array(t)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError("bessel_j needs finite t >= 0")
    if nu < 0 and nu != math.floor(nu) and np.any(arr == 0):
        raise DomainError("J_nu(0) is infinite for negative non-integer nu")
    return _out(_kernels.besselj(nu, arr), scalar)


def bessel_j_neg(lam, t):
    """J_{-lam}(t) from the series with reciprocal-Gamma coefficients (t > 0)."""
    lam = _check_order(lam)
    arr, scalar = _as_array(t)
    if np.any(arr <= 0):
        raise DomainError("bessel_j_neg needs t > 0")
    return _out(_kernels.besselj(-lam, arr), scalar)


def bessel_jy(nu, t):
    """(J_nu(t), Y_nu(t)) for t > 0."""
    nu = _check_order(nu)
    arr, scalar = _as_array(t)
    if np.any(arr <= 0) or np.any(~np.isfinite(arr)):
        raise DomainError("bessel_y needs finite t > 0")
    j, y = _kernels.besseljy(nu, arr)
    return _out(j, scalar), _out(y, scalar)


def bessel_y(nu, t):
    """Y_nu(t) as the limit combination of J_nu and J_{-nu} (t > 0)."""
    return bessel_jy(nu, t)[1]


def hankel1(nu, t):
    """H^(1)_nu(t) = J_nu(t) + i Y_nu(t) for t > 0."""
    arr, scalar = _as_array(t)
    j, y = bessel_jy(nu, arr)
    return _out(j + 1j * y, scalar)


def bessel_jy_prime(nu, t):
    """(J'_nu, Y'_nu) from f'_nu = (f_{nu-1} - f_{nu+1}) / 2."""
    arr, scalar = _as_array(t)
    jm, ym = bessel_jy(nu - 1.0, arr)
    jp, yp = bessel_jy(nu + 1.0, arr)
    return _out(0.5 * (jm - jp), scalar), _out(0.5 * (ym - yp), scalar)
