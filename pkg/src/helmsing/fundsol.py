"""Fundamental solutions of -Delta - 1 in R^N and their radial derivatives.

With nu = (N - 2)/2:

    Phi(r)   = -c0 r^-nu Y_nu(r)          real fundamental solution
    Psi(r)   =  c0 r^-nu J_nu(r)          bounded Helmholtz-harmonic partner
    Phi_c(r) =  Phi(r) + i Psi(r)         outgoing, (i/4)(2 pi r)^-nu H1_nu(r)

c0 is fixed by the unit-flux condition -|S^{N-1}| r^{N-1} Phi'(r) -> 1 as
r -> 0, which gives c0 = pi / (|S^{N-1}| Gamma(N/2) 2^{N/2}) = (2 pi)^-nu / 4.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from . import specfun
from .errors import DomainError


class Kind(str, Enum):
    PHI = "phi"
    PSI = "psi"
    PHIC = "phic"


def _kind(kind):
    try:
        return Kind(kind)
    except ValueError:
        raise DomainError(f"unknown kernel kind {kind!r}") from None


def _check_dim(N):
    if int(N) != N or N < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {N}")
    return int(N)


def sphere_area(N):
    """|S^{N-1}|, the surface measure of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def normalization_c0(N):
    N = _check_dim(N)
    return math.pi / (sphere_area(N) * math.gamma(N / 2.0) * 2.0 ** (N / 2.0))


def normalization_cN(N):
    """Leading coefficient: Phi ~ c_N r^{2-N} (N >= 3) or ~ -c_2 ln r (N = 2)."""
    N = _check_dim(N)
    c0 = normalization_c0(N)
    nu = (N - 2) / 2.0
    if N == 2:
        return 2.0 * c0 / math.pi
    return c0 * math.gamma(nu) * 2.0 ** nu / math.pi


def _radii(r, allow_zero=False):
    arr = np.asarray(r, dtype=float)
    bad = (arr < 0) if allow_zero else (arr <= 0)
    if np.any(bad) or np.any(~np.isfinite(arr)):
        raise DomainError("radius must be positive" if not allow_zero else "radius must be >= 0")
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return arr.item() if scalar else arr


def _jy(nu, r):
    return specfun.bessel_jy(nu, r)


def phi(N, r):
    """Real fundamental solution Phi(r), r > 0."""
    N = _check_dim(N)
    arr, scalar = _radii(r)
    nu = (N - 2) / 2.0
    y = specfun.bessel_y(nu, arr)
    return _out(-normalization_c0(N) * arr ** -nu * y, scalar)


def psi_at_zero(N):
    N = _check_dim(N)
    nu = (N - 2) / 2.0
    return normalization_c0(N) * 2.0 ** -nu / math.gamma(nu + 1.0)


def psi_partner(N, r):
    """Psi(r) = Im Phi_c(r); finite at r = 0."""
    N = _check_dim(N)
    arr, scalar = _radii(r, allow_zero=True)
    nu = (N - 2) / 2.0
    out = np.empty_like(arr)
    zero = arr == 0.0
    out[zero] = psi_at_zero(N)
    pos = ~zero
    if np.any(pos):
        rp = arr[pos]
        out[pos] = normalization_c0(N) * rp ** -nu * specfun.bessel_j(nu, rp)
    return _out(out, scalar)


def phi_complex(N, r):
    """Outgoing fundamental solution Phi_c(r) = Phi(r) + i Psi(r)."""
    N = _check_dim(N)
    arr, scalar = _radii(r)
    nu = (N - 2) / 2.0
    j, y = _jy(nu, arr)
    s = normalization_c0(N) * arr ** -nu
    return _out(s * (-y + 1j * j), scalar)


def j_tilde(N, r):
    """Regular radial Helmholtz solution normalised to 1 at the origin."""
    return np.asarray(psi_partner(N, r)) / psi_at_zero(N)


def j_tilde_prime(N, r):
    return np.asarray(phi_radial_derivative(Kind.PSI, N, r)) / psi_at_zero(N)


def phi_radial_derivative(kind, N, r):
    """d/dr of the requested kind via d/dr[r^-nu Z_nu] = -r^-nu Z_{nu+1}."""
    kind = _kind(kind)
    N = _check_dim(N)
    arr, scalar = _radii(r)
    nu = (N - 2) / 2.0
    j1, y1 = _jy(nu + 1.0, arr)
    s = normalization_c0(N) * arr ** -nu
    if kind is Kind.PHI:
        out = s * y1
    elif kind is Kind.PSI:
        out = -s * j1
    else:
        out = s * (y1 - 1j * j1)
    return _out(out, scalar)


def phi_second_derivative(kind, N, r):
    """Second radial derivative, again from the order recurrences."""
    kind = _kind(kind)
    N = _check_dim(N)
    arr, scalar = _radii(r)
    nu = (N - 2) / 2.0
    j0, y0 = _jy(nu, arr)
    j1, y1 = _jy(nu + 1.0, arr)
    j2, y2 = _jy(nu + 2.0, arr)
    c0 = normalization_c0(N)

    def d2(z0, z1, z2):
        # d/dr [c0 r^-nu Z_{nu+1}]
        return c0 * (-nu * arr ** (-nu - 1.0) * z1 + arr ** -nu * 0.5 * (z0 - z2))

    if kind is Kind.PHI:
        out = d2(y0, y1, y2)
    elif kind is Kind.PSI:
        out = -d2(j0, j1, j2)
    else:
        out = d2(y0, y1, y2) - 1j * d2(j0, j1, j2)
    return _out(out, scalar)


def evaluate(kind, N, r):
    kind = _kind(kind)
    if kind is Kind.PHI:
        return phi(N, r)
    if kind is Kind.PSI:
        return psi_partner(N, r)
    return phi_complex(N, r)


def ode_residual(kind, N, r):
    """(|u'' + (N-1)/r u' + u|, |u''|) with analytic derivatives."""
    arr = np.asarray(r, dtype=float)
    u = np.asarray(evaluate(kind, N, arr))
    d1 = np.asarray(phi_radial_derivative(kind, N, arr))
    d2 = np.asarray(phi_second_derivative(kind, N, arr))
    return np.abs(d2 + (N - 1) / arr * d1 + u), np.abs(d2)


def dirac_normalization_check(N, eps, kind=Kind.PHI):
    """-|S^{N-1}| eps^{N-1} Phi'(eps); tends to 1 as eps -> 0."""
    N = _check_dim(N)
    if not 0.0 < eps <= 0.1:
        raise DomainError("eps must lie in (0, 0.1]")
    d = phi_radial_derivative(kind, N, eps)
    return float(np.real(-sphere_area(N) * eps ** (N - 1) * d))


@dataclass(frozen=True)
class FundamentalSolution:
    """Evaluator bundle for one kind in one dimension."""

    dimension: int
    kind: Kind = Kind.PHI
    c0: float = field(init=False)
    normalization: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dimension", _check_dim(self.dimension))
        object.__setattr__(self, "kind", _kind(self.kind))
        object.__setattr__(self, "c0", normalization_c0(self.dimension))
        object.__setattr__(self, "normalization", normalization_cN(self.dimension))

    def __call__(self, r):
        return evaluate(self.kind, self.dimension, r)

    def derivative(self, r):
        return phi_radial_derivative(self.kind, self.dimension, r)

    def second_derivative(self, r):
        return phi_second_derivative(self.kind, self.dimension, r)
