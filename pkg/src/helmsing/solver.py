"""Picard iteration for v = Phi * (Q |k w + v|^{p-1} (k w + v)) in a weighted ball.

The singular solution is u_k = k w + v with w = Phi + psi_sigma (Phi_c in
complex mode).  Iterates start at v = 0 and must stay inside

    D_{p,k} = {v : |v| <= k W_p},   W_p(r) = r^theta_p (1 + r)^(-sigma - theta_p),

which is checked at every step on the grid nodes.
"""

from dataclasses import asdict, dataclass, field
import math
from typing import Optional

import numpy as np

from . import fundsol, harmonic
from .errors import BallExitError, ConvergenceError, DomainError, ValidationError
from .fundsol import Kind
from .quadrature import (
    DEFAULT_R_MAX,
    DEFAULT_R_MIN,
    PlanarConvolver,
    PlanarField,
    PlanarGrid,
    RadialProfile,
    profile_interpolator,
    radial_convolver,
)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


# ---------------------------------------------------------------- exponents

def serrin_exponent(N):
    if int(N) != N or N < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {N}")
    return math.inf if N == 2 else N / (N - 2.0)


def decay_critical_exponent(N, alpha):
    if N < 2:
        raise DomainError(f"dimension must be >= 2, got {N}")
    return 1.0 + (2.0 / (N - 1.0)) * ((N + 1) / 2.0 - alpha)


def theta_exponent(N, p):
    if 2.0 - (N - 2) * p <= 0:
        return (2.0 - N) / 2.0 + ((2.0 - N) * p + 2.0) / 2.0
    return 0.0


def sigma_exponent(N, alpha, sigma, p):
    return min((N - 1) / 2.0, alpha + sigma * p - (N + 1) / 2.0)


def alpha_requirement(N):
    """Lower bound on alpha (exclusive); None when every alpha is allowed."""
    if N == 2:
        return None
    if N == 3:
        return 0.0
    return N * (N - 3) / (2.0 * (N - 2))


# ---------------------------------------------------------------- spec

@dataclass(frozen=True)
class HarmonicPart:
    """psi_sigma: ``psi`` = coeff * Psi (radial), ``sine`` = coeff * sin(x1),
    ``lacunary`` = coeff * lacunary sum with the spec's sigma."""

    kind: str = "psi"
    coeff: float = 0.1
    n0: int = 4
    terms: int = 8

    def sigma_of(self, N):
        if self.kind == "psi":
            return (N - 1) / 2.0
        if self.kind == "sine":
            return 0.0
        return None


@dataclass(frozen=True)
class ProblemSpec:
    N: int
    p: float
    alpha: float
    sigma: float
    k: float
    Q0: float = 1.0
    harmonic: HarmonicPart = field(default_factory=HarmonicPart)
    mode: str = "real"
    geometry: str = "radial"
    r_min: float = DEFAULT_R_MIN
    r_max: float = DEFAULT_R_MAX
    refine: int = 1
    G: int = 128
    L: float = 64.0

    def with_k(self, k):
        return _replace(self, k=float(k))

    def as_dict(self):
        return asdict(self)


def _replace(spec, **kw):
    from dataclasses import replace
    return replace(spec, **kw)


@dataclass(frozen=True)
class DerivedExponents:
    p_star: float
    p_sharp: float
    theta_p: float
    sigma_p: float
    theta_source: float
    tau_source: float
    p_range: tuple
    sigma_range: tuple

    def as_dict(self):
        d = asdict(self)
        d["p_star"] = None if math.isinf(self.p_star) else self.p_star
        d["p_range"] = [self.p_range[0], None if math.isinf(self.p_range[1]) else self.p_range[1]]
        d["sigma_range"] = list(self.sigma_range)
        return d


def derived_exponents(spec):
    N, p = spec.N, spec.p
    p_star = serrin_exponent(N)
    p_sharp = decay_critical_exponent(N, spec.alpha)
    return DerivedExponents(
        p_star=p_star,
        p_sharp=p_sharp,
        theta_p=theta_exponent(N, p),
        sigma_p=sigma_exponent(N, spec.alpha, spec.sigma, p),
        theta_source=max(0.0, (N - 2) * p - 2.0),
        tau_source=spec.alpha + spec.sigma * p,
        p_range=(max(1.0, p_sharp), p_star),
        sigma_range=(((N + 1) / 2.0 - spec.alpha) / (p - 1.0) if p > 1 else -math.inf,
                     (N - 1) / 2.0),
    )


def validate_spec(spec):
    """All violated hypotheses at once; returns the derived exponents."""
    bad = []
    N = spec.N
    if int(N) != N or N < 2:
        raise ValidationError([f"N must be an integer >= 2, got {N}"])
    if not spec.p > 1:
        bad.append(f"p must exceed 1, got {spec.p}")
    if not spec.Q0 > 0:
        bad.append(f"Q0 must be positive, got {spec.Q0}")
    if spec.k < 0:
        bad.append(f"k must be >= 0, got {spec.k}")
    a_req = alpha_requirement(N)
    if a_req is not None and not spec.alpha > a_req:
        if N == 3:
            bad.append(f"(req 3) violated: alpha > 0 for N = 3, got alpha = {spec.alpha}")
        else:
            bad.append(f"(req 3) violated: alpha > N(N-3)/(2(N-2)) = {a_req:.6g} for N = {N}, "
                       f"got alpha = {spec.alpha}")
    if spec.mode not in ("real", "complex"):
        bad.append(f"mode must be 'real' or 'complex', got {spec.mode!r}")
    if spec.geometry not in ("radial", "planar"):
        bad.append(f"geometry must be 'radial' or 'planar', got {spec.geometry!r}")
    if spec.harmonic.kind not in ("psi", "sine", "lacunary"):
        bad.append(f"unknown harmonic part {spec.harmonic.kind!r}")
    if bad and not spec.p > 1:
        raise ValidationError(bad)
    d = derived_exponents(spec)
    if not (d.p_range[0] <= spec.p < d.p_star):
        hi = "inf" if math.isinf(d.p_star) else f"{d.p_star:.6g}"
        bad.append(f"p must lie in [p#_alpha, p*_N) = [{d.p_sharp:.6g}, {hi}), got p = {spec.p}")
    lo, hi = d.sigma_range
    if not (lo - 1e-12 <= spec.sigma <= hi + 1e-12):
        bad.append(f"sigma must lie in [((N+1)/2 - alpha)/(p-1), (N-1)/2] = [{lo:.6g}, {hi:.6g}], "
                   f"got sigma = {spec.sigma}")
    hs = spec.harmonic.sigma_of(N)
    if spec.geometry == "radial":
        if spec.harmonic.kind != "psi":
            bad.append("radial geometry needs a radial harmonic part (a multiple of Psi)")
        elif abs(spec.sigma - (N - 1) / 2.0) > 1e-12:
            bad.append(f"radial geometry needs sigma = (N-1)/2 = {(N - 1) / 2.0} "
                       "(a non-radial psi_sigma is required otherwise)")
        if not 0 < spec.r_min < 1 < spec.r_max:
            bad.append("radial grid needs 0 < r_min < 1 < r_max")
    elif spec.geometry == "planar":
        if N != 2:
            bad.append("planar geometry requires N = 2")
        if spec.G % 2 or spec.G < 8 or spec.L <= 0:
            bad.append("planar grid needs even G >= 8 and L > 0")
        if spec.harmonic.kind == "psi":
            bad.append("planar geometry expects a non-radial harmonic part (sine or lacunary)")
        elif hs is not None and abs(hs - spec.sigma) > 1e-12:
            bad.append(f"harmonic part {spec.harmonic.kind!r} has sigma = {hs}, spec says {spec.sigma}")
    if bad:
        raise ValidationError(bad)
    return d


# ---------------------------------------------------------------- weights and fields

def weight_W_p(spec, r):
    """|x|^theta_p (1+|x|)^(-sigma-theta_p); +inf at r = 0 when theta_p < 0."""
    d = derived_exponents(spec)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be >= 0")
    with np.errstate(divide="ignore"):
        out = np.where(r > 0, np.abs(r) ** d.theta_p, 1.0 if d.theta_p == 0 else np.inf)
    out = out * (1.0 + r) ** (-spec.sigma - d.theta_p)
    return out if out.ndim else float(out)


def potential(spec, r):
    return spec.Q0 * (1.0 + np.asarray(r, dtype=float)) ** -spec.alpha


def _kernel_kind(spec):
    return Kind.PHIC if spec.mode == "complex" else Kind.PHI


def nonlinearity(z, p):
    """|z|^{p-1} z with the complex modulus in complex mode."""
    return np.abs(z) ** (p - 1.0) * z


def w_radial(spec, r):
    base = fundsol.evaluate(_kernel_kind(spec), spec.N, r)
    return np.asarray(base) + spec.harmonic.coeff * np.asarray(fundsol.psi_partner(spec.N, r))


def make_harmonic_evaluator(spec):
    """psi_sigma at points (..., N)."""
    h = spec.harmonic
    if h.kind == "psi":
        return lambda x: h.coeff * fundsol.psi_partner(spec.N, np.linalg.norm(x, axis=-1))
    if h.kind == "sine":
        return lambda x: h.coeff * np.sin(np.asarray(x)[..., 0])
    lac = harmonic.build_lacunary(spec.N, spec.sigma, n0=h.n0, terms=h.terms)
    return lambda x: h.coeff * np.asarray(harmonic.eval_lacunary(lac, x))


def make_w_evaluator(spec):
    """w_sigma = Phi (or Phi_c) + psi_sigma at points (..., N)."""
    psi = make_harmonic_evaluator(spec)
    kind = _kernel_kind(spec)

    def w(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return np.asarray(fundsol.evaluate(kind, spec.N, r)) + psi(x)

    return w


# ---------------------------------------------------------------- reports

@dataclass
class IterationReport:
    iterations: int = 0
    weighted_increments: list = field(default_factory=list)
    ball_margins: list = field(default_factory=list)
    residual: float = math.nan
    converged: bool = False
    tail_bound: float = 0.0
    core_bound: float = 0.0

    def as_dict(self):
        return asdict(self)


@dataclass
class SolutionBundle:
    spec: ProblemSpec
    derived: DerivedExponents
    v: object
    report: IterationReport
    w_sigma: object
    source: Optional[dict] = None

    def v_at(self, r):
        """Regular part at radii (radial geometry)."""
        prof = self.v
        r = np.asarray(r, dtype=float)
        interp = profile_interpolator(prof.grid.nodes, prof.values)
        rc = np.clip(r, prof.grid.r_min, prof.grid.r_max)
        return interp(rc)

    def u(self, r):
        """u_k = k w_sigma + v at radii (radial geometry)."""
        if self.spec.geometry != "radial":
            raise DomainError("use u_at_points for planar bundles")
        r = np.asarray(r, dtype=float)
        return self.spec.k * w_radial(self.spec, r) + self.v_at(r)

    def u_at_points(self, x):
        x = np.asarray(x, dtype=float)
        if self.spec.geometry == "radial":
            return self.u(np.linalg.norm(x, axis=-1))
        g = self.v.grid
        idx = np.rint((x + g.L) / g.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= g.G) or not np.allclose(idx * g.h - g.L, x):
            raise DomainError("planar bundles are sampled at grid nodes only")
        return self.spec.k * self.w_sigma(x) + self.v.values[idx[..., 0], idx[..., 1]]


# ---------------------------------------------------------------- radial operator

class RadialOperator:
    """T v on the graded radial grid."""

    def __init__(self, spec):
        self.spec = spec
        self.derived = derived_exponents(spec)
        self.conv = radial_convolver(spec.N, _kernel_kind(spec), spec.r_min, spec.r_max, spec.refine)
        grid = self.conv.grid
        self.grid = grid
        self.w_nodes = w_radial(spec, grid.nodes)
        self.w_gauss = w_radial(spec, grid.gauss)
        self.Q_nodes = potential(spec, grid.nodes)
        self.Q_gauss = potential(spec, grid.gauss)
        self.W = weight_W_p(spec, grid.nodes)
        self.complex = spec.mode == "complex"

    def zero(self):
        return np.zeros(self.grid.size, dtype=complex if self.complex else float)

    def wnorm(self, v):
        return float(np.max(np.abs(v) / self.W))

    def source(self, v, k=None):
        k = self.spec.k if k is None else k
        fn = self.Q_nodes * nonlinearity(k * self.w_nodes + v, self.spec.p)
        if np.all(v == 0):
            vg = 0.0
        else:
            interp = profile_interpolator(self.grid.nodes, v)
            vg = interp(self.grid.gauss)
        fg = self.Q_gauss * nonlinearity(k * self.w_gauss + vg, self.spec.p)
        return fn, fg

    def apply(self, v, k=None):
        fn, fg = self.source(v, k)
        if np.all(fn == 0) and np.all(fg == 0):
            return self.zero(), 0.0
        r = self.grid.nodes
        core = self.conv.core_integral(fn, -self.derived.theta_source - 2.0)
        out = self.conv.apply(fg, core)
        tau = self.derived.tau_source
        sel = r >= 0.5 * self.grid.r_max
        c_f = float(np.max(np.abs(fn[sel]) * r[sel] ** tau))
        tail = self.conv.tail_bound(c_f, tau)
        out = out if self.complex else np.real(out)
        return out, float(np.max(tail / self.W))


# ---------------------------------------------------------------- planar operator

class PlanarOperator:
    """T v on the G x G lattice (N = 2)."""

    def __init__(self, spec):
        self.spec = spec
        self.derived = derived_exponents(spec)
        self.grid = PlanarGrid(spec.G, spec.L)
        self.conv = PlanarConvolver(self.grid)
        X, Y = self.grid.mesh()
        self.points = np.stack([X, Y], axis=-1)
        r = np.hypot(X, Y)
        self.r = r
        i0 = self.grid.origin
        self.w_eval = make_w_evaluator(spec)
        pts = self.points.copy()
        pts[i0, i0] = (1.0, 0.0)  # placeholder, overwritten below
        self.w_nodes = np.asarray(self.w_eval(pts))
        self.w_nodes[i0, i0] = 0.0
        self.Q_nodes = potential(spec, r)
        self.W = weight_W_p(spec, np.where(r > 0, r, 1.0))
        self.block_pts = self.conv.block_pts
        self.block_idx = i0 + self.conv.block_owner
        self.w_block = np.asarray(self.w_eval(self.block_pts))
        self.Q_block = potential(spec, np.linalg.norm(self.block_pts, axis=-1))
        self.complex = spec.mode == "complex"
        self.mask = np.ones_like(r, dtype=bool)
        self.mask[i0, i0] = False

    def zero(self):
        return np.zeros((self.grid.G, self.grid.G), dtype=complex if self.complex else float)

    def wnorm(self, v):
        return float(np.max(np.abs(v[self.mask]) / self.W[self.mask]))

    def source(self, v, k=None):
        k = self.spec.k if k is None else k
        fn = self.Q_nodes * nonlinearity(k * self.w_nodes + v, self.spec.p)
        i0 = self.grid.origin
        fn[i0, i0] = 0.0
        # v is bounded and smooth on the cell scale: hold it at the node value
        vb = v[self.block_idx[:, 0], self.block_idx[:, 1]]
        fb = self.Q_block * nonlinearity(k * self.w_block + vb, self.spec.p)
        return fn, fb

    def apply(self, v, k=None):
        fn, fb = self.source(v, k)
        if self.complex:
            re, _ = self.conv.apply(np.real(fn), np.real(fb))
            im, _ = self.conv.apply(np.imag(fn), np.imag(fb))
            return re + 1j * im, 0.0
        out, _ = self.conv.apply(fn, fb)
        return out, 0.0

    def source_summary(self, v):
        fn, fb = self.source(v)
        f, mass, _ = self.conv.cell_means(fn, fb)
        return {"f_nodes": f, "origin_mass": complex(mass) if self.complex else float(mass)}


def make_operator(spec):
    validate_spec(spec)
    if spec.geometry == "planar":
        return PlanarOperator(spec)
    return RadialOperator(spec)


def apply_T(spec, v=None, operator=None):
    """One application of the integral operator; v = None means v = 0."""
    op = operator or make_operator(spec)
    if v is None:
        v = op.zero()
    out, _ = op.apply(np.asarray(v))
    return out


# ---------------------------------------------------------------- iteration

def picard_solve(spec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, operator=None):
    """Fixed-point iteration from v = 0 with ball membership enforced."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    derived = validate_spec(spec)
    op = operator or make_operator(spec)
    report = IterationReport()
    v = op.zero()
    k = spec.k
    tail = 0.0
    for m in range(1, max_iter + 1):
        tv, tail = op.apply(v)
        norm = op.wnorm(tv)
        inc = op.wnorm(tv - v)
        report.iterations = m
        report.weighted_increments.append(inc)
        report.ball_margins.append(k - norm)
        if norm > k * (1.0 + 1e-8):
            raise BallExitError(m, k - norm)
        v = tv
        if inc <= tol:
            report.converged = True
            break
        if not np.isfinite(inc):
            raise ConvergenceError(f"non-finite increment at iteration {m}")
    if not report.converged:
        raise ConvergenceError(f"no convergence after {max_iter} iterations "
                               f"(last increment {report.weighted_increments[-1]:.3g})")
    check, tail = op.apply(v)
    report.residual = op.wnorm(check - v)
    report.tail_bound = tail
    report.core_bound = _core_bound(spec, derived, op, v)
    if spec.geometry == "radial":
        field_v = RadialProfile(op.grid, v, (derived.theta_p, derived.sigma_p))
        source = None
    else:
        field_v = PlanarField(op.grid, v, singular_origin=False,
                              origin_descriptor={"kind": "regular", "value": v[op.grid.origin, op.grid.origin]})
        source = op.source_summary(v)
    w_eval = (lambda r: w_radial(spec, r)) if spec.geometry == "radial" else op.w_eval
    return SolutionBundle(spec, derived, field_v, report, w_eval, source)


def _core_bound(spec, derived, op, v):
    """Weighted bound on [0, r_min): |v| <= |v(r_min)| (r/r_min)^theta_p there."""
    if spec.geometry != "radial":
        return 0.0
    return float(abs(v[0]) / op.W[0])


def solve_complex(spec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    if spec.mode != "complex":
        spec = _replace(spec, mode="complex")
    return picard_solve(spec, tol, max_iter)


# ---------------------------------------------------------------- k* estimate

@dataclass
class KStarResult:
    k_star: float
    bracket: tuple
    tested: list
    monotone: bool
    contraction_bound: float
    c_emp: float
    c_zero: float
    diagnostic: str = ""

    def as_dict(self):
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d


def empirical_constant(spec, operator=None, element="ball"):
    """Fitted constant c with |T v| <= c k^p W_p on the ball.

    ``element="ball"`` applies T to the worst-case ball element
    v = k W_p w/|w| (which maximises |k w + v| pointwise); ``"zero"`` uses
    T0 only.  Both ratios are independent of k.
    """
    k = spec.k if spec.k > 0 else 1.0
    op = operator or make_operator(spec.with_k(k))
    if element == "zero":
        v = op.zero()
    elif element == "ball":
        w = op.w_nodes
        mag = np.abs(w)
        phase = np.where(mag > 0, w / np.where(mag > 0, mag, 1.0), 1.0)
        v = k * op.W * phase
        if not op.complex:
            v = np.real(v)
        if isinstance(op, PlanarOperator):
            v = np.where(op.mask, v, 0.0)
    else:
        raise DomainError("element must be 'ball' or 'zero'")
    tv, _ = op.apply(v, k)
    return op.wnorm(tv) / k ** spec.p


def contraction_lower_bound(c_emp, p):
    return (c_emp * p * 2.0 ** (p - 1.0)) ** (-1.0 / (p - 1.0)) / 2.0


def _succeeds(spec, k, tol, max_iter, op):
    try:
        picard_solve(spec.with_k(k), tol, max_iter, operator=op)
        return True
    except (BallExitError, ConvergenceError):
        return False


def estimate_kstar(spec, k_hi=1.0, bisection_steps=8, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Largest tested k with a converged in-ball solve (geometric bisection)."""
    if k_hi <= 0:
        raise DomainError("k_hi must be positive")
    validate_spec(spec.with_k(k_hi))
    op = make_operator(spec.with_k(k_hi))
    c_emp = empirical_constant(spec.with_k(k_hi), op)
    c_zero = empirical_constant(spec.with_k(k_hi), op, element="zero")
    lower = contraction_lower_bound(c_emp, spec.p)
    tested = []

    def trial(k):
        op.spec = spec.with_k(k)
        ok = _succeeds(spec, k, tol, max_iter, op)
        tested.append((float(k), ok))
        return ok

    hi = k_hi
    if trial(hi):
        return KStarResult(hi, (hi, math.inf), tested, True, lower, c_emp, c_zero,
                           "k_hi converged; increase k_hi to bracket k*")
    lo = hi / 2.0
    while not trial(lo):
        hi = lo
        lo /= 2.0
        if lo < 1e-12 * k_hi:
            return KStarResult(0.0, (0.0, hi), tested, True, lower, c_emp, c_zero,
                               "no tested k converged")
    for _ in range(bisection_steps):
        mid = math.sqrt(lo * hi)
        if trial(mid):
            lo = mid
        else:
            hi = mid
    ordered = sorted(tested)
    first_fail = next((k for k, ok in ordered if not ok), math.inf)
    monotone = not any(ok and k > first_fail for k, ok in ordered)
    return KStarResult(lo, (lo, hi), tested, monotone, lower, c_emp, c_zero)
