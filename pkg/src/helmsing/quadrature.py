"""Convolutions of the fundamental solutions with singular radial or planar data.

Radial mode uses the addition theorem for Helmholtz kernels: the mean of
F(|x - y|) over the sphere |y| = s with |x| = r equals F(max) jt(min), where
jt is the regular radial solution with jt(0) = 1.  Hence

    (F * f)(r) = |S^{N-1}| [F(r) A(r) + jt(r) B(r)],
    A(r) = int_0^r jt f s^{N-1} ds,   B(r) = int_r^inf F f s^{N-1} ds,

which costs one cumulative sum per application.  The adaptive angular
quadrature in ``spherical_mean_kernel`` is kept as an independent check of
the separable form.

Pointwise mode (N = 2, 3) integrates in polar/spherical coordinates about
the origin and about every singular centre, glued with a smooth partition
of unity.  Planar mode (N = 2) convolves a node-centred G x G field with a
cell-averaged kernel table by direct summation.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from . import _kernels, fundsol
from .errors import DivergenceError, DomainError, InconsistentProfileError, ValidationError
from .fundsol import Kind

GAUSS_ORDER = 4
DEFAULT_R_MIN = 1e-4
DEFAULT_R_MAX = 1e3


# ---------------------------------------------------------------- envelopes

@dataclass(frozen=True)
class KernelEnvelope:
    """|U(x)| <= c8 |x|^{-theta-2} (1+|x|)^{-tau+theta+2}."""

    theta: float
    tau: float
    constant: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.constant * r ** (-self.theta - 2.0) * (1.0 + r) ** (-self.tau + self.theta + 2.0)

    def lemma_violations(self, N):
        """Hypotheses of the kernel lemma that this envelope breaks."""
        out = []
        if not self.tau > (N + 1) / 2.0:
            out.append(f"kernel lemma needs tau > (N+1)/2 = {(N + 1) / 2.0}, got tau = {self.tau}")
        if not -1.0 < self.theta < N - 2:
            out.append(f"kernel lemma needs theta in (-1, N-2) = (-1, {N - 2}), got theta = {self.theta}")
        if self.theta == 0.0:
            out.append("kernel lemma excludes theta = 0")
        if self.constant <= 0:
            out.append("envelope constant must be positive")
        return out

    def check_admissible(self, N):
        bad = self.lemma_violations(N)
        if bad:
            cls = DivergenceError if not self.tau > (N + 1) / 2.0 else ValidationError
            raise cls(bad)


def check_convolvable(N, theta, tau):
    """Integrability of s^{-theta-2} at 0 and of the far field; raises on failure."""
    bad = []
    if not tau > (N + 1) / 2.0:
        bad.append(f"divergent: tau = {tau} must exceed (N+1)/2 = {(N + 1) / 2.0} (kernel lemma)")
    if not theta < N - 2:
        bad.append(f"divergent: theta = {theta} must be below N-2 = {N - 2} "
                   "(source not locally integrable)")
    if bad:
        raise DivergenceError(bad)


# ---------------------------------------------------------------- spherical mean

def sphere_minus_one_area(N):
    """|S^{N-2}|; equals 2 for N = 2."""
    return 2.0 * math.pi ** ((N - 1) / 2.0) / math.gamma((N - 1) / 2.0)


def spherical_mean_kernel(N, kind, r, s, epsrel=1e-11):
    """K(r, s) = |S^{N-2}| int_0^pi F(sqrt(r^2+s^2-2rs cos g)) sin^{N-2} g dg.

    Adaptive (QUADPACK) on geometrically graded pieces that resolve the
    near-singularity at g = 0 when r is close to s.
    """
    kind = Kind(kind)
    if r < 0 or s <= 0:
        raise DomainError("need r >= 0 and s > 0")
    if r == 0.0:
        return fundsol.sphere_area(N) * fundsol.evaluate(kind, N, s)
    cs = sphere_minus_one_area(N)
    big = max(r, s)
    delta = max(abs(r - s) / big, 1e-12)
    cuts = [0.0]
    g = delta
    while g < math.pi:
        cuts.append(g)
        g *= 4.0
    cuts.append(math.pi)

    def dist(gm):
        return math.hypot(r - s, 2.0 * math.sqrt(r * s) * math.sin(0.5 * gm))

    def part(fn):
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(fn, a, b, epsabs=0.0, epsrel=epsrel, limit=200)
            total += val
        return total

    def integrand_re(gm):
        d = dist(gm)
        if d == 0.0:
            return 0.0
        return float(np.real(fundsol.evaluate(kind, N, d))) * math.sin(gm) ** (N - 2)

    re = part(integrand_re)
    if kind is not Kind.PHIC:
        return cs * re

    def integrand_im(gm):
        d = dist(gm)
        return float(fundsol.psi_partner(N, d)) * math.sin(gm) ** (N - 2)

    return cs * complex(re, part(integrand_im))


def spherical_mean_separable(N, kind, r, s):
    """Closed form of the same kernel: |S^{N-1}| F(max(r,s)) jt(min(r,s))."""
    hi = max(r, s)
    lo = min(r, s)
    return fundsol.sphere_area(N) * fundsol.evaluate(kind, N, hi) * float(fundsol.j_tilde(N, lo))


# ---------------------------------------------------------------- radial grid

@dataclass(frozen=True)
class RadialGrid:
    """Graded radii plus Gauss nodes on every interval."""

    nodes: np.ndarray
    gauss: np.ndarray
    weights: np.ndarray
    r_min: float
    r_max: float

    @property
    def size(self):
        return self.nodes.size


def make_radial_grid(r_min=DEFAULT_R_MIN, r_max=DEFAULT_R_MAX, inner_per_decade=48,
                     outer_per_decade=64, h_max=0.25, refine=1):
    """Geometric to 1, log-uniform beyond, spacing capped at h_max.

    ``refine`` divides every spacing (geometric ratios by their refine-th
    root) so that successive levels share all nodes.
    """
    if not 0 < r_min < 1 < r_max:
        raise DomainError("need 0 < r_min < 1 < r_max")
    n_in = int(round(math.log10(1.0 / r_min) * inner_per_decade)) * refine
    inner = np.geomspace(r_min, 1.0, n_in + 1)
    ratio = 10.0 ** (1.0 / (outer_per_decade * refine))
    h_cap = h_max / refine
    pts = [1.0]
    r = 1.0
    while r < r_max:
        step = min(r * (ratio - 1.0), h_cap)
        if step == h_cap:
            break
        r = r * ratio
        pts.append(r)
    start = pts[-1]
    if start < r_max:
        n_uni = int(math.ceil((r_max - start) / h_cap))
        uni = start + h_cap * np.arange(1, n_uni + 1)
        uni[-1] = r_max
        outer = np.concatenate([np.array(pts), uni])
    else:
        outer = np.array(pts)
        outer[-1] = r_max
    nodes = np.concatenate([inner[:-1], outer])
    nodes = nodes[nodes <= r_max]
    xg, wg = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    a = nodes[:-1, None]
    b = nodes[1:, None]
    gauss = 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]
    weights = 0.5 * (b - a) * wg[None, :]
    return RadialGrid(nodes, gauss, weights, float(nodes[0]), float(nodes[-1]))


@dataclass
class RadialProfile:
    """Samples of a radial function on a grid, with an optional (theta, tau) tag."""

    grid: RadialGrid
    values: np.ndarray
    decay_tag: Optional[tuple] = None
    tail_bound: Optional[np.ndarray] = None
    gradient: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.nodes.shape:
            raise DomainError("values must match the grid nodes")
        if not np.all(np.isfinite(self.values)):
            raise InconsistentProfileError("profile values must be finite")

    @property
    def r(self):
        return self.grid.nodes

    def interpolator(self):
        return profile_interpolator(self.grid.nodes, self.values, self.decay_tag)

    def __call__(self, r):
        return self.interpolator()(r)


def profile_interpolator(nodes, values, decay_tag=None):
    """Cubic spline in log r of values * r^{theta+2} (theta from the tag, else -2)."""
    shift = 0.0
    if decay_tag is not None:
        shift = decay_tag[0] + 2.0
    x = np.log(nodes)
    scaled = np.asarray(values) * nodes ** shift
    spl = CubicSpline(x, scaled)

    def evaluate(r):
        r = np.asarray(r, dtype=float)
        return spl(np.log(r)) * r ** -shift

    return evaluate


# ---------------------------------------------------------------- radial convolver

class RadialConvolver:
    """Precomputed kernel factors for repeated radial convolutions."""

    def __init__(self, N, kind, grid):
        self.N = int(N)
        self.kind = Kind(kind)
        self.grid = grid
        self.area = fundsol.sphere_area(self.N)
        s = grid.gauss
        r = grid.nodes
        self.F_nodes = np.asarray(fundsol.evaluate(self.kind, self.N, r))
        self.dF_nodes = np.asarray(fundsol.phi_radial_derivative(self.kind, self.N, r))
        self.J_nodes = np.asarray(fundsol.j_tilde(self.N, r))
        self.dJ_nodes = np.asarray(fundsol.j_tilde_prime(self.N, r))
        wjac = grid.weights * s ** (self.N - 1)
        self.wA = wjac * np.asarray(fundsol.j_tilde(self.N, s))
        self.wB = wjac * np.asarray(fundsol.evaluate(self.kind, self.N, s))
        nu = (self.N - 1) / 2.0
        # |F(s)| <= far_constant s^{-(N-1)/2} beyond r_max
        c0 = fundsol.normalization_c0(self.N)
        self.far_constant = 1.01 * c0 * math.sqrt(2.0 / math.pi)
        self.far_exponent = nu

    def core_mass(self, f_first, exponent):
        """int_0^{r_min} s^{N-1} f ds for f ~ f_first (s/r_min)^exponent."""
        e = exponent + self.N
        if e <= 0:
            raise DivergenceError(f"source ~ r^{exponent} is not integrable at 0 in R^{self.N}")
        return f_first * self.grid.r_min ** self.N / e

    def core_integral(self, values, fallback):
        """int_0^{r_min} s^{N-1} f ds from the first three node values.

        Fits log|f| = c + e log s + b s, which is exact for a power law
        times a smooth factor to first order; falls back to a pure power
        law through the first two nodes, then to the tag exponent.
        """
        r = self.grid.nodes[:3]
        v = np.asarray(values[:3])
        v0 = v[0]
        if abs(v0) == 0:
            return 0.0 * v0
        same_phase = np.all(np.real(v * np.conj(v0)) > 0)
        if same_phase:
            A = np.stack([np.ones(3), np.log(r), r], axis=1)
            c, e, b = np.linalg.solve(A, np.log(np.abs(v)))
            x = b * r[0]
            if np.isfinite(e) and abs(x) <= 0.1 and e + self.N > 0:
                terms = sum(x ** k / (math.factorial(k) * (e + self.N + k)) for k in range(12))
                return v0 * r[0] ** self.N * math.exp(-x) * terms
        return self.core_mass(v0, local_exponent(r, v, fallback))

    def apply(self, f_gauss, core, gradient=False):
        """Values (and optionally radial derivatives) at the grid nodes.

        ``f_gauss`` is the source at the Gauss nodes, ``core`` the integral
        of s^{N-1} f over [0, r_min].
        """
        a_int = np.sum(self.wA * f_gauss, axis=1)
        b_int = np.sum(self.wB * f_gauss, axis=1)
        A = np.empty(self.grid.size, dtype=np.result_type(a_int, core))
        A[0] = core
        np.cumsum(a_int, out=A[1:])
        A[1:] += core
        B = np.zeros(self.grid.size, dtype=b_int.dtype)
        B[:-1] = np.cumsum(b_int[::-1])[::-1]
        g = self.area * (self.F_nodes * A + self.J_nodes * B)
        if not gradient:
            return g
        dg = self.area * (self.dF_nodes * A + self.dJ_nodes * B)
        return g, dg

    def tail_bound(self, c_f, tau):
        """Bound on the dropped contribution of s > r_max, at every node."""
        expo = (self.N + 1) / 2.0 - tau
        if expo >= 0:
            return np.full(self.grid.size, np.inf)
        tail = self.far_constant * c_f * self.grid.r_max ** expo / (-expo)
        return self.area * np.abs(self.J_nodes) * tail


@lru_cache(maxsize=16)
def _cached_convolver(N, kind, r_min, r_max, refine):
    return RadialConvolver(N, kind, make_radial_grid(r_min, r_max, refine=refine))


def radial_convolver(N, kind=Kind.PHI, r_min=DEFAULT_R_MIN, r_max=DEFAULT_R_MAX, refine=1):
    return _cached_convolver(int(N), Kind(kind), float(r_min), float(r_max), int(refine))


def local_exponent(r, values, fallback):
    """Power-law exponent of the first two samples (used for the core)."""
    v0, v1 = values[0], values[1]
    if np.real(v0 * np.conj(v1)) > 0 and abs(v0) > 0:
        e = math.log(abs(v1) / abs(v0)) / math.log(r[1] / r[0])
        if np.isfinite(e):
            return e
    return fallback


def _envelope_constant(r, values, theta, tau):
    env = r ** (-theta - 2.0) * (1.0 + r) ** (-tau + theta + 2.0)
    return float(np.max(np.abs(values) / env))


def _far_constant(r, values, tau, r_max):
    sel = r >= 0.5 * r_max
    return float(np.max(np.abs(values[sel]) * r[sel] ** tau))


def convolve_radial(f, kind=Kind.PHI, N=3, decay_tag=None, envelope_constant=None,
                    r_min=DEFAULT_R_MIN, r_max=DEFAULT_R_MAX, refine=1, gradient=False):
    """Radial convolution F * f on the graded grid.

    ``f`` is a RadialProfile (values at nodes, spline-interpolated to the
    Gauss nodes) or a callable of r (evaluated exactly at the Gauss nodes).
    The decay tag (theta, tau) is mandatory: tau > (N+1)/2 and theta < N-2.
    The contribution of s > r_max is bounded, not added, and returned as
    ``tail_bound``.
    """
    if isinstance(f, RadialProfile):
        tag = f.decay_tag if decay_tag is None else decay_tag
        grid_kw = dict(r_min=f.grid.r_min, r_max=f.grid.r_max)
    else:
        tag = decay_tag
        grid_kw = dict(r_min=r_min, r_max=r_max)
    if tag is None:
        raise DivergenceError("a decay tag (theta, tau) is required for the tail")
    theta, tau = float(tag[0]), float(tag[1])
    check_convolvable(N, theta, tau)
    conv = radial_convolver(N, kind, refine=refine if not isinstance(f, RadialProfile) else 1,
                            **grid_kw)
    if isinstance(f, RadialProfile):
        if f.grid.nodes.size != conv.grid.nodes.size or not np.allclose(f.grid.nodes, conv.grid.nodes):
            conv = RadialConvolver(N, kind, f.grid)
        nodes_f = f.values
        f_gauss = profile_interpolator(conv.grid.nodes, nodes_f, (theta, tau))(conv.grid.gauss)
    else:
        nodes_f = np.asarray(f(conv.grid.nodes))
        f_gauss = np.asarray(f(conv.grid.gauss))
    r = conv.grid.nodes
    c8 = _envelope_constant(r, nodes_f, theta, tau)
    if envelope_constant is not None and c8 > 1.01 * envelope_constant:
        raise InconsistentProfileError(
            f"samples exceed the declared envelope constant {envelope_constant} (fitted {c8:.4g})")
    if np.all(nodes_f == 0) and np.all(f_gauss == 0):
        zero = np.zeros(r.size, dtype=np.result_type(nodes_f, conv.F_nodes))
        return RadialProfile(conv.grid, zero, None, np.zeros(r.size), zero.copy() if gradient else None)
    core = conv.core_integral(nodes_f, -theta - 2.0)
    out = conv.apply(f_gauss, core, gradient=gradient)
    g, dg = out if gradient else (out, None)
    tail = conv.tail_bound(_far_constant(r, nodes_f, tau, conv.grid.r_max), tau)
    return RadialProfile(conv.grid, g, None, tail, dg)


def gradient_convolve_radial(f, kind=Kind.PHI, N=3, **kw):
    """Radial derivative of F * f on the grid (the gradient is radial)."""
    res = convolve_radial(f, kind, N, gradient=True, **kw)
    return RadialProfile(res.grid, res.gradient, None, None)


# ---------------------------------------------------------------- pointwise mode

def _smooth_step(t):
    """1 on [0, 1/2], 0 on [1, inf), C-infinity in between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t <= 0.5] = 1.0
    mid = (t > 0.5) & (t < 1.0)
    u = (t[mid] - 0.5) * 2.0
    a = np.exp(-1.0 / np.maximum(1.0 - u, 1e-300))
    b = np.exp(-1.0 / np.maximum(u, 1e-300))
    out[mid] = a / (a + b)
    return out


def _sphere_rule(N, n):
    """Directions and weights for the unit circle (N=2) or sphere (N=3)."""
    if N == 2:
        phi = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(2 * n, math.pi / n)
    ct, wt = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
    st = np.sqrt(1.0 - ct ** 2)
    dirs = np.stack([
        (st[:, None] * np.cos(phi)[None, :]).ravel(),
        (st[:, None] * np.sin(phi)[None, :]).ravel(),
        np.repeat(ct, phi.size),
    ], axis=-1)
    w = (wt[:, None] * np.full(phi.size, math.pi / n)[None, :]).ravel()
    return dirs, w


def _radial_rule(breaks, order):
    xg, wg = np.polynomial.legendre.leggauss(order)
    a = np.asarray(breaks[:-1])[:, None]
    b = np.asarray(breaks[1:])[:, None]
    t = (0.5 * (a + b) + 0.5 * (b - a) * xg).ravel()
    w = (0.5 * (b - a) * wg).ravel()
    return t, w


def _graded_breaks(lo, hi, first, h_max, dyadic_from=0.0):
    """Breakpoints from lo to hi: dyadic near lo (from ``first``), then width <= h_max."""
    pts = [lo]
    if dyadic_from is not None:
        b = lo + first
        pts.append(b)
        while b - lo < min(h_max, hi - lo):
            b = lo + 2.0 * (b - lo)
            pts.append(min(b, hi))
    b = pts[-1]
    while b < hi:
        b = min(b + h_max, hi)
        pts.append(b)
    return np.unique(np.asarray(pts))


def _kernel_values(kind, N, d):
    d = np.maximum(d, 1e-300)
    return np.asarray(fundsol.evaluate(kind, N, d))


def _kernel_gradient(kind, N, diff, d):
    d = np.maximum(d, 1e-300)
    dF = np.asarray(fundsol.phi_radial_derivative(kind, N, d))
    return (dF / d)[..., None] * diff


@dataclass
class PointResult:
    value: complex
    error_estimate: float
    tail_bound: float
    levels: int


def convolve_point(f: Callable, kind=Kind.PHI, x=None, N=2, envelope: Optional[KernelEnvelope] = None,
                   centers=(), R=None, tol=1e-7, max_levels=4, gradient=False, base=16):
    """(F * f)(x) by product quadrature, refined until two levels agree.

    Pieces: a ball around every centre (x itself and any user centre such
    as a narrow bump), integrated in polar coordinates about that centre
    with a smooth cutoff; the remainder, which vanishes near the centres,
    is integrated in polar coordinates about the origin (absorbing the
    singularity of f there).  The region |y| > R is bounded through the
    envelope.
    """
    if N not in (2, 3):
        raise DomainError("pointwise convolution supports N = 2, 3")
    if envelope is None:
        raise DivergenceError("an envelope (theta, tau, c8) is required")
    check_convolvable(N, envelope.theta, envelope.tau)
    kind = Kind(kind)
    x = np.asarray(x, dtype=float)
    rx = float(np.linalg.norm(x))
    if R is None:
        R = max(32.0, 4.0 * rx)
    cents = [x] if rx > 0 else []
    cents += [np.asarray(c, dtype=float) for c in centers]
    radii = []
    for i, c in enumerate(cents):
        others = [np.linalg.norm(c)] + [np.linalg.norm(c - d) for j, d in enumerate(cents) if j != i]
        radii.append(min(1.0, 0.5 * min(others)))

    def evaluate(level):
        if N == 2:
            # h-refinement: halve every panel and double the angular count
            n_ang, order, shrink = base * 2 ** level, 6 + 2 * level, 2 ** level
        else:
            # p-refinement keeps the 3-D cost polynomial in the level
            n_ang, order, shrink = base + 8 * level, 6 + 4 * level, 1
        total = np.zeros(N if gradient else 1, dtype=complex)
        for c, rho in zip(cents, radii):
            dirs, wd = _sphere_rule(N, n_ang)
            br = _graded_breaks(0.0, rho, rho * 2.0 ** -40, rho / (8 * shrink))
            t, wt = _radial_rule(br, order)
            y = c[None, None, :] + t[:, None, None] * dirs[None, :, :]
            fy = np.asarray(f(y)) * _smooth_step(t / rho)[:, None]
            diff = x[None, None, :] - y
            d = np.linalg.norm(diff, axis=-1)
            w = (wt * t ** (N - 1))[:, None] * wd[None, :]
            if gradient:
                kv = _kernel_gradient(kind, N, diff, d)
                total += np.einsum("ij,ijk->k", w * fy, kv)
            else:
                total += np.sum(w * fy * _kernel_values(kind, N, d))
        # remainder about the origin
        feature = min([r for r in radii] + [1.0])
        breaks = [0.0]
        b = 2.0 ** -40
        while b < feature / 4:
            breaks.append(b)
            b *= 2.0
        s = feature / 4
        h = min(0.5, feature / 4) / shrink
        while s < R:
            breaks.append(s)
            s += h
        breaks.append(R)
        t, wt = _radial_rule(np.unique(breaks), order)
        dirs, wd = _sphere_rule(N, n_ang * max(1, int(math.ceil(max(rx, 1.0) / 4))))
        per_node = np.zeros((t.size, total.size), dtype=complex)
        chunk = max(1, 2_000_000 // dirs.shape[0])
        for lo in range(0, t.size, chunk):
            tt = t[lo:lo + chunk]
            y = tt[:, None, None] * dirs[None, :, :]
            cut = np.ones(y.shape[:2])
            for c, rho in zip(cents, radii):
                cut -= _smooth_step(np.linalg.norm(y - c, axis=-1) / rho)
            fy = np.asarray(f(y)) * cut
            diff = x[None, None, :] - y
            d = np.linalg.norm(diff, axis=-1)
            w = (wt[lo:lo + chunk] * tt ** (N - 1))[:, None] * wd[None, :]
            mask = cut != 0
            if gradient:
                kv = _kernel_gradient(kind, N, diff, d)
                per_node[lo:lo + chunk] = np.einsum("ij,ijk->ik", np.where(mask, w * fy, 0.0), kv)
            else:
                kv = np.where(mask, _kernel_values(kind, N, np.where(mask, d, 1.0)), 0.0)
                per_node[lo:lo + chunk, 0] = np.sum(w * fy * kv, axis=1)
        # the innermost panel [0, 2^-40] carries the source singularity;
        # replace its Gauss sum by the geometric limit of the next two panels
        p1 = per_node[order:2 * order].sum(axis=0)
        p2 = per_node[2 * order:3 * order].sum(axis=0)
        inner = per_node[:order].sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(p2 != 0, p1 / p2, 0.0)
        ok = (np.real(ratio) > 0) & (np.real(ratio) < 1) & (np.abs(np.imag(ratio)) < 1e-6)
        inner = np.where(ok, p1 * ratio / (1.0 - ratio), inner)
        total += per_node[order:].sum(axis=0) + inner
        return total if gradient else total[0]

    prev = evaluate(0)
    err = math.inf
    level = 0
    for level in range(1, max_levels + 1):
        cur = evaluate(level)
        err = float(np.max(np.abs(cur - prev)))
        prev = cur
        if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
            break
    far_c = 1.01 * fundsol.normalization_c0(N) * math.sqrt(2.0 / math.pi)
    expo = (N + 1) / 2.0 - envelope.tau
    dist = max(R - rx, 1.0)
    tail = (fundsol.sphere_area(N) * far_c * envelope.constant
            * (R / dist) ** ((N - 1) / 2.0) * R ** expo / (-expo))
    val = prev
    if not gradient and kind is not Kind.PHIC:
        val = float(np.real(prev))
    elif gradient and kind is not Kind.PHIC:
        val = np.real(prev)
    return PointResult(val, err, float(tail), level)


# ---------------------------------------------------------------- planar mode

@dataclass(frozen=True)
class PlanarGrid:
    """Node-centred lattice x_i = -L + i h, i = 0..G-1; node G/2 is the origin."""

    G: int
    L: float

    def __post_init__(self):
        if self.G % 2:
            raise DomainError("G must be even so that the origin is a node")

    @property
    def h(self):
        return 2.0 * self.L / self.G

    @property
    def origin(self):
        return self.G // 2

    @property
    def coords(self):
        return -self.L + self.h * np.arange(self.G)

    def mesh(self):
        c = self.coords
        return np.meshgrid(c, c, indexing="ij")


@dataclass
class PlanarField:
    """Node values on a PlanarGrid; the origin node holds a singular-part descriptor."""

    grid: PlanarGrid
    values: np.ndarray
    singular_origin: bool = False
    origin_descriptor: dict = field(default_factory=dict)


def _self_cell_integral(h):
    """int over [-h/2, h/2]^2 of Phi_2(|y|) dy, in polar coordinates."""
    xg, wg = np.polynomial.legendre.leggauss(24)
    phis = 0.5 * (math.pi / 4) * (xg + 1.0)
    wphi = 0.5 * (math.pi / 4) * wg
    total = 0.0
    for ph, wp in zip(phis, wphi):
        a = 0.5 * h / math.cos(ph)
        val, _ = integrate.quad(lambda r: float(fundsol.phi(2, r)) * r, 0.0, a,
                                epsabs=0.0, epsrel=1e-12, limit=200)
        total += wp * val
    return 8.0 * total


def _cell_rule(n, h):
    xg, wg = np.polynomial.legendre.leggauss(n)
    u = 0.5 * h * xg
    w = 0.5 * h * wg
    uu, vv = np.meshgrid(u, u, indexing="ij")
    return uu.ravel(), vv.ravel(), np.outer(w, w).ravel()


@lru_cache(maxsize=8)
def planar_kernel_table(G, h):
    """T[d1, d2] = int over the cell at the origin of Phi_2(|d h - y|) dy.

    Offsets run over -(G-1)..(G-1); the self cell uses polar quadrature,
    the eight neighbours a 16 x 16 Gauss rule, the rest 4 x 4.
    """
    d = np.arange(-(G - 1), G) * h
    dx, dy = np.meshgrid(d, d, indexing="ij")
    table = np.empty(dx.shape)
    ux, uy, w = _cell_rule(4, h)
    rows = dx.shape[0]
    for i in range(rows):
        dist = np.hypot(dx[i][:, None] - ux[None, :], dy[i][:, None] - uy[None, :])
        table[i] = np.asarray(fundsol.phi(2, dist)) @ w
    ux, uy, w = _cell_rule(16, h)
    c = G - 1
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            if a == 0 and b == 0:
                continue
            dist = np.hypot(a * h - ux, b * h - uy)
            table[c + a, c + b] = float(np.asarray(fundsol.phi(2, dist)) @ w)
    table[c, c] = _self_cell_integral(h)
    table.setflags(write=False)
    return table


def origin_cell_rule(h, n_r=24, n_phi=32):
    """Polar points and weights covering the square cell [-h/2, h/2]^2."""
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    pg, pw = np.polynomial.legendre.leggauss(n_phi)
    pts = []
    wts = []
    # each of 8 triangles, phi in [0, pi/4] mapped by symmetry
    base_phi = 0.5 * (math.pi / 4) * (pg + 1.0)
    base_wphi = 0.5 * (math.pi / 4) * pw
    # graded radial rule: u in (0,1), r = a u^2 clusters nodes near 0
    u = 0.5 * (xg + 1.0)
    wu = 0.5 * wg
    for k in range(8):
        quadrant = k // 2
        flip = k % 2
        for ph, wp in zip(base_phi, base_wphi):
            a = 0.5 * h / math.cos(ph)
            r = a * u ** 2
            wr = 2.0 * a * u * wu * r
            ang = (math.pi / 2 - ph if flip else ph) + quadrant * math.pi / 2
            pts.append(np.stack([r * math.cos(ang), r * math.sin(ang)], axis=-1))
            wts.append(wp * wr)
    return np.concatenate(pts), np.concatenate(wts)


class PlanarConvolver:
    """Phi_2 * f on a PlanarGrid with explicit handling of the origin cell.

    Cells within ``near`` steps of the origin carry Gauss cell averages of
    f instead of node values, so a source that is singular at 0 enters with
    the right cell masses; the origin cell itself uses a polar rule.
    """

    def __init__(self, grid: PlanarGrid, near=4, near_order=8):
        self.grid = grid
        self.table = planar_kernel_table(grid.G, grid.h)
        self.cell_pts, self.cell_w = origin_cell_rule(grid.h)
        ux, uy, w = _cell_rule(near_order, grid.h)
        offsets = [(a, b) for a in range(-near, near + 1) for b in range(-near, near + 1)
                   if (a, b) != (0, 0)]
        self.near_offsets = np.array(offsets, dtype=int).reshape(-1, 2)
        self.near_w = w
        pts = [self.cell_pts]
        owner = [np.zeros((self.cell_pts.shape[0], 2), dtype=int)]
        for a, b in offsets:
            pts.append(np.stack([a * grid.h + ux, b * grid.h + uy], axis=-1))
            owner.append(np.tile([a, b], (w.size, 1)))
        self.block_pts = np.concatenate(pts)
        self.block_owner = np.concatenate(owner)

    def cell_means(self, f_nodes, f_block):
        """Node array with near-origin cells replaced by cell averages, plus
        the origin-cell mass.  ``f_block`` is a callable of points or the
        values at ``block_pts``."""
        g = self.grid
        i0 = g.origin
        fb = np.asarray(f_block(self.block_pts) if callable(f_block) else f_block)
        n0 = self.cell_w.size
        fc = fb[:n0]
        mass = fc @ self.cell_w
        f = np.array(f_nodes)
        f[i0, i0] = 0.0
        if len(self.near_offsets):
            rest = fb[n0:].reshape(len(self.near_offsets), -1)
            means = rest @ self.near_w / g.h ** 2
            f[i0 + self.near_offsets[:, 0], i0 + self.near_offsets[:, 1]] = means
        return f, mass, fc

    def apply(self, f_nodes, f_block):
        """``f_nodes`` G x G real (origin entry ignored); ``f_block`` evaluates
        f on ``block_pts`` (it may be unbounded at 0)."""
        g = self.grid
        i0 = g.origin
        f, mass, fc = self.cell_means(f_nodes, f_block)
        mass = float(mass)
        out = _kernels.planar_apply(self.table, np.ascontiguousarray(f, dtype=float))
        c = g.G - 1
        # far from the origin cell: kernel cell average times the mean of f
        out += self.table[c - i0:c - i0 + g.G, c - i0:c - i0 + g.G] * (mass / g.h ** 2)
        # near the origin: integrate the product exactly over the cell
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                xi = np.array([a * g.h, b * g.h])
                dist = np.linalg.norm(self.cell_pts - xi[None, :], axis=-1)
                kv = np.asarray(fundsol.phi(2, np.maximum(dist, 1e-300)))
                exact = float((kv * fc) @ self.cell_w)
                out[i0 + a, i0 + b] += exact - self.table[c + a, c + b] * (mass / g.h ** 2)
        return out, mass

    def probe(self, f_nodes, mass, px, py):
        """Values at off-lattice probes at least two cells away from the data.

        ``f_nodes`` should already hold the near-origin cell averages
        (see ``cell_means``)."""
        g = self.grid
        X, Y = g.mesh()
        f = np.array(f_nodes, dtype=float)
        f[g.origin, g.origin] = 0.0
        w = (f * g.h ** 2).ravel()
        keep = w != 0
        vals = _kernels.phi2_point_sum(px, py, X.ravel()[keep], Y.ravel()[keep], w[keep])
        r = np.hypot(px, py)
        return vals + mass * np.asarray(fundsol.phi(2, np.maximum(r, 1e-300)))
