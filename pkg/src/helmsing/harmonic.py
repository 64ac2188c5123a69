"""Helmholtz-harmonic functions with prescribed decay.

Spherical modes psi_j(x) = |x|^{-(N-2)/2} J_{L_j}(|x|) v_j(x/|x|) with
L_j = sqrt((N-2)^2/4 + j(j+N-2)), and lacunary peak sums

    w(x) = sum_n a_n [Psi(x - t_n e1) (- Psi(x + t_n e1))],  a_n = 2^{-sigma n},

whose envelope decays like |x|^{-sigma}.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import eval_legendre

from . import fundsol, specfun
from .decay import DecayFit, dyadic_edges, fit_window_maxima
from .errors import DomainError, FitError, UnsupportedError

MAX_DEGREE = 8
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SphericalMode:
    N: int
    j: int
    angular: str = "cos"

    def __post_init__(self):
        if self.N not in (2, 3):
            raise UnsupportedError(f"spherical modes only for N in (2, 3), got {self.N}")
        if int(self.j) != self.j or not 0 <= self.j <= MAX_DEGREE:
            raise UnsupportedError(f"degree must be an integer in [0, {MAX_DEGREE}]")
        allowed = ("cos", "sin") if self.N == 2 else ("legendre",)
        if self.N == 3 and self.angular == "cos":
            object.__setattr__(self, "angular", "legendre")
        elif self.angular not in allowed:
            raise UnsupportedError(f"angular factor {self.angular!r} invalid for N={self.N}")

    @property
    def mu(self):
        return self.j * (self.j + self.N - 2)

    @property
    def order(self):
        return math.sqrt((self.N - 2) ** 2 / 4.0 + self.mu)


def _points(x, N):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != N:
        raise DomainError(f"points must have trailing dimension {N}")
    return x


def mode_radial(mode, r):
    """Radial factor r^{-(N-2)/2} J_L(r); equals the mode on the +e1 / pole axis."""
    r = np.asarray(r, dtype=float)
    nu0 = (mode.N - 2) / 2.0
    return r ** -nu0 * specfun.bessel_j(mode.order, r)


def mode_limit(mode):
    """lim_{r->0} psi_j(r) r^{(N-2)/2 - L_j} = 2^{-L_j} / Gamma(L_j + 1)."""
    lam = mode.order
    return 2.0 ** -lam / math.gamma(lam + 1.0)


def psi_j(mode, x):
    """Evaluate the spherical mode at points x (shape (..., N))."""
    x = _points(x, mode.N)
    r = np.linalg.norm(x, axis=-1)
    if mode.N == 2:
        theta = np.arctan2(x[..., 1], x[..., 0])
        ang = np.cos(mode.j * theta) if mode.angular == "cos" else np.sin(mode.j * theta)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            ct = np.where(r > 0, x[..., 2] / np.where(r > 0, r, 1.0), 1.0)
        ang = eval_legendre(mode.j, ct)
    out = np.empty_like(r)
    zero = r == 0
    if np.any(zero):
        if mode.j != 0:
            out[zero] = 0.0
        else:
            out[zero] = mode_limit(mode)
    pos = ~zero
    out[pos] = mode_radial(mode, r[pos]) * ang[pos]
    return out if out.ndim else out.item()


@dataclass(frozen=True)
class LacunarySpec:
    N: int
    sigma_target: float
    n0: int
    terms: int
    antisymmetric: bool
    peaks: np.ndarray
    weights: np.ndarray

    @property
    def indices(self):
        return np.arange(self.n0, self.n0 + self.terms)


def golden_max(func, a, b, tol=1e-10, maxiter=200):
    """Golden-section search for a maximum of a unimodal func on [a, b]."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(maxiter):
        if abs(b - a) <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    return 0.5 * (a + b)


def locate_peak(N, n, samples=257):
    """t in [2^n, 2^n + 2 pi] maximising Psi(t e1)."""
    lo = 2.0 ** n
    hi = lo + 2.0 * math.pi
    t = np.linspace(lo, hi, samples)
    vals = fundsol.psi_partner(N, t)
    i = int(np.argmax(vals))
    a = t[max(i - 1, 0)]
    b = t[min(i + 1, samples - 1)]
    best = golden_max(lambda s: float(fundsol.psi_partner(N, s)), a, b)
    dpsi = lambda s: float(fundsol.phi_radial_derivative("psi", N, s))
    fa, fb = dpsi(a), dpsi(b)
    if fa * fb < 0:
        best = brentq(dpsi, a, b, xtol=1e-13)
    return best


def build_lacunary(N, sigma_target, n0=4, terms=8, antisymmetric=False):
    half = (N - 1) / 2.0
    if not -half < sigma_target < half:
        raise DomainError(f"sigma_target must lie in ({-half}, {half})")
    if terms < 1:
        raise DomainError("terms must be >= 1")
    if 2.0 ** n0 <= 4.0 * math.pi:
        raise DomainError("n0 too small: need 2^n0 > 4 pi")
    idx = np.arange(n0, n0 + terms)
    peaks = np.array([locate_peak(N, int(n)) for n in idx])
    weights = 2.0 ** (-sigma_target * idx)
    return LacunarySpec(int(N), float(sigma_target), int(n0), int(terms),
                        bool(antisymmetric), peaks, weights)


def eval_lacunary(spec, x):
    """Finite lacunary sum at points x (shape (..., N))."""
    x = _points(x, spec.N)
    out = np.zeros(x.shape[:-1])
    shift = np.zeros(spec.N)
    for t, a in zip(spec.peaks, spec.weights):
        shift[0] = t
        out = out + a * fundsol.psi_partner(spec.N, np.linalg.norm(x - shift, axis=-1))
        if spec.antisymmetric:
            out = out - a * fundsol.psi_partner(spec.N, np.linalg.norm(x + shift, axis=-1))
    return out if out.ndim else out.item()


def psi_envelope_constant(N):
    """C with |Psi(d)| <= C d^{-(N-1)/2} for d >= 16 (10% margin)."""
    return 1.1 * fundsol.normalization_c0(N) * math.sqrt(2.0 / math.pi)


def lacunary_tail_bound(spec, radius):
    """Bound on the omitted terms n >= n0 + M at probes |x| <= radius."""
    first = spec.n0 + spec.terms
    if radius > 2.0 ** (first - 2):
        return math.inf
    half = (spec.N - 1) / 2.0
    ratio = 2.0 ** (-spec.sigma_target - half)
    lead = 2.0 ** (-spec.sigma_target * first) * 2.0 ** (-half * (first - 1))
    factor = 2.0 if spec.antisymmetric else 1.0
    return factor * psi_envelope_constant(spec.N) * lead / (1.0 - ratio)


def fit_envelope_exponent(field, ray, R_min, R_max, windows, peaks=None, step=0.05,
                          tail_bound=None):
    """Slope of log(max |field| over dyadic windows along ray) vs log R."""
    if windows < 4:
        raise DomainError("need at least 4 windows")
    ray = np.asarray(ray, dtype=float)
    ray = ray / np.linalg.norm(ray)
    edges = dyadic_edges(R_min, R_max, windows)
    n = max(256, int(math.ceil((R_max - R_min) / step)) + 1)
    t = np.linspace(R_min, R_max, n)
    vals = np.asarray(field(t[:, None] * ray[None, :]))
    extra_t = extra_v = None
    if peaks is not None and len(peaks):
        extra_t = np.asarray(peaks, dtype=float)
        extra_v = np.asarray(field(extra_t[:, None] * ray[None, :]))
    if np.all(np.abs(vals) == 0):
        raise FitError("field vanishes on every sample")
    fit = fit_window_maxima(t, vals, edges, extra_t, extra_v)
    return DecayFit(fit.slope, fit.intercept, fit.residual, fit.window, tail_bound,
                    fit.radii, fit.maxima)


def fit_lacunary(spec, windows=None, step=0.05):
    """Envelope fit of a lacunary sum along e1 over [2^n0, 2^(n0+windows)].

    The default stops two octaves short of the last peak so that the
    omitted terms are covered by the certified tail bound.
    """
    if windows is None:
        windows = spec.terms - 2
    R_min = 2.0 ** spec.n0
    R_max = 2.0 ** (spec.n0 + windows)
    ray = np.zeros(spec.N)
    ray[0] = 1.0
    bound = lacunary_tail_bound(spec, R_max)
    return fit_envelope_exponent(lambda x: eval_lacunary(spec, x), ray, R_min, R_max,
                                 windows, peaks=spec.peaks, step=step, tail_bound=bound)
