import math

import numpy as np
import pytest

from helmsing import fundsol, quadrature as q
from helmsing.decay import dyadic_edges, fit_window_maxima
from helmsing.errors import DivergenceError, DomainError, InconsistentProfileError, ValidationError

import oracles


def gauss_cut(theta):
    return lambda s: s ** (-theta - 2.0) * np.exp(-(s / 8.0) ** 2)


def node_near(profile, r):
    i = int(np.argmin(np.abs(profile.r - r)))
    return i, float(profile.r[i])


# ---------------------------------------------------------------- spherical mean

@pytest.mark.parametrize("N", [2, 3, 4])
@pytest.mark.parametrize("kind", ["phi", "psi", "phic"])
def test_kernel_at_zero(N, kind):
    s = 1.7
    val = q.spherical_mean_kernel(N, kind, 0.0, s)
    assert val == pytest.approx(fundsol.sphere_area(N) * fundsol.evaluate(kind, N, s), rel=1e-9)


def test_kernel_diagonal_3d_against_trapezoid():
    val = q.spherical_mean_kernel(3, "phi", 1.0, 1.0)
    assert math.isfinite(val)
    assert val == pytest.approx(oracles.angular_trapezoid(3, "phi", 1.0, 1.0), rel=1e-6)


def test_kernel_2d_psi_against_trapezoid():
    val = q.spherical_mean_kernel(2, "psi", 2.0, 3.0)
    assert val == pytest.approx(oracles.angular_trapezoid(2, "psi", 2.0, 3.0), rel=1e-6)


@pytest.mark.parametrize("N,kind,r,s", [(2, "phi", 0.3, 2.0), (3, "phic", 5.0, 4.2),
                                        (5, "phi", 1.1, 0.9), (3, "psi", 10.0, 10.5)])
def test_kernel_separable_form(N, kind, r, s):
    a = q.spherical_mean_kernel(N, kind, r, s)
    b = q.spherical_mean_separable(N, kind, r, s)
    assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


def test_kernel_domain():
    with pytest.raises(DomainError):
        q.spherical_mean_kernel(3, "phi", 0.0, 0.0)
    with pytest.raises(DomainError):
        q.spherical_mean_kernel(3, "phi", -1.0, 1.0)


# ---------------------------------------------------------------- grid and profiles

def test_grid_shape():
    g = q.make_radial_grid()
    assert g.nodes[0] == pytest.approx(1e-4) and g.nodes[-1] == pytest.approx(1e3)
    assert np.all(np.diff(g.nodes) > 0)
    assert np.max(np.diff(g.nodes)) <= 0.25 + 1e-12
    g2 = q.make_radial_grid(refine=2)
    assert np.all(np.isin(np.round(g.nodes[g.nodes < 1], 12), np.round(g2.nodes, 12)))
    assert g2.size > 1.9 * g.size
    with pytest.raises(DomainError):
        q.make_radial_grid(r_min=2.0)


def test_profile_interpolates_tagged_power_law():
    g = q.make_radial_grid()
    prof = q.RadialProfile(g, g.nodes ** -2.5 * (1 + g.nodes) ** -0.5, decay_tag=(0.5, 3.0))
    r = np.array([3e-4, 0.013, 0.77, 12.3, 400.0])
    np.testing.assert_allclose(prof(r), r ** -2.5 * (1 + r) ** -0.5, rtol=1e-6)


def test_profile_rejects_nonfinite():
    g = q.make_radial_grid()
    v = np.ones(g.size)
    v[3] = np.nan
    with pytest.raises(InconsistentProfileError):
        q.RadialProfile(g, v)


# ---------------------------------------------------------------- radial convolution

def test_zero_source():
    res = q.convolve_radial(lambda s: 0.0 * s, "phi", 3, decay_tag=(0.5, 3.0))
    assert np.all(res.values == 0)
    grad = q.gradient_convolve_radial(lambda s: 0.0 * s, "phi", 3, decay_tag=(0.5, 3.0))
    assert np.all(grad.values == 0)


@pytest.mark.parametrize("N,tau", [(3, 2.0), (2, 1.5), (5, 3.0)])
def test_divergence_at_threshold(N, tau):
    with pytest.raises(DivergenceError):
        q.convolve_radial(lambda s: s ** -2.0, "phi", N, decay_tag=(0.0, tau))
    with pytest.raises(DivergenceError):
        q.KernelEnvelope(-0.5, tau).check_admissible(N)


def test_missing_tag_is_divergent():
    with pytest.raises(DivergenceError):
        q.convolve_radial(lambda s: s, "phi", 3)


def test_inconsistent_profile():
    f = lambda s: 5.0 * s ** -2.5 * (1 + s) ** -0.5
    with pytest.raises(InconsistentProfileError):
        q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0), envelope_constant=1.0)
    q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0), envelope_constant=5.0)


def test_two_dim_positive_theta_outside_lemma():
    env = q.KernelEnvelope(0.3, 2.5)
    assert env.lemma_violations(2)
    with pytest.raises(ValidationError):
        env.check_admissible(2)
    with pytest.raises(DivergenceError):
        q.convolve_point(lambda y: np.ones(y.shape[:-1]), "phi", np.array([10.0, 0.0]), 2, env)


@pytest.mark.parametrize("N,theta,r", [(3, 0.5, 1e-2), (3, 0.5, 3.0), (2, -0.3, 0.7),
                                       (3, -0.5, 0.01), (4, 1.2, 0.2)])
def test_radial_against_nested_oracle(N, theta, r):
    f = gauss_cut(theta)
    res = q.convolve_radial(f, "phi", N, decay_tag=(theta, 3.0))
    i, r = node_near(res, r)
    ref = oracles.radial_convolution(N, "phi", f, r)
    assert res.values[i] == pytest.approx(ref, rel=1e-5)


def test_random_tuples_against_oracle():
    rng = np.random.default_rng(20240611)
    for _ in range(20):
        N = int(rng.choice([2, 3]))
        theta = rng.uniform(-0.9, -0.1) if N == 2 else rng.choice([rng.uniform(-0.9, -0.1), rng.uniform(0.1, 0.9)])
        kind = str(rng.choice(["phi", "psi"]))
        f = gauss_cut(theta)
        res = q.convolve_radial(f, kind, N, decay_tag=(theta, 3.0))
        i, r = node_near(res, 10 ** rng.uniform(-3, 1.3))
        ref = oracles.radial_convolution(N, kind, f, r)
        assert abs(res.values[i] - ref) <= 1e-5 * abs(ref) + 1e-12, (N, theta, kind, r)


def test_complex_kernel_splits():
    f = gauss_cut(0.5)
    c = q.convolve_radial(f, "phic", 3, decay_tag=(0.5, 3.0))
    a = q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0))
    b = q.convolve_radial(f, "psi", 3, decay_tag=(0.5, 3.0))
    np.testing.assert_allclose(c.values, a.values + 1j * b.values, rtol=1e-12, atol=1e-14)


def test_linearity_radial():
    f = gauss_cut(0.5)
    g = lambda s: np.exp(-s) * s ** -1.0
    tag = (0.5, 3.0)
    lhs = q.convolve_radial(lambda s: 2.0 * f(s) - 3.0 * g(s), "phi", 3, decay_tag=tag).values
    rhs = (2.0 * q.convolve_radial(f, "phi", 3, decay_tag=tag).values
           - 3.0 * q.convolve_radial(g, "phi", 3, decay_tag=tag).values)
    # the core [0, r_min] is fitted per source, so linearity holds to quadrature accuracy
    np.testing.assert_allclose(lhs, rhs, rtol=1e-5, atol=1e-12)


def test_newtonian_constant():
    theta = 0.5
    res = q.convolve_radial(lambda s: s ** (-theta - 2) * (s <= 1), "phi", 3, decay_tag=(theta, 3.0))
    i, r = node_near(res, 1e-3)
    assert res.values[i] * r ** theta == pytest.approx(oracles.newtonian_constant(3, theta), rel=0.02)
    sel = (res.r >= 1e-3) & (res.r <= 1)
    scaled = np.abs(res.values[sel]) * res.r[sel] ** theta
    assert np.max(scaled) <= 1.1 * oracles.newtonian_constant(3, theta)


def test_far_exponent_outer_source():
    res = q.convolve_radial(lambda s: s ** -3.0 * (s > 1), "phi", 3, decay_tag=(-0.5, 3.0))
    edges = dyadic_edges(1e3 / 64, 1e3 / 4, 4)
    fit = fit_window_maxima(res.r, res.values, edges)
    assert -fit.slope >= 1.0 - 0.1
    assert np.all(np.isfinite(res.tail_bound))


def test_tail_bound_covers_truncation():
    f = lambda s: s ** -2.5 * (1 + s) ** -0.5
    short = q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0), r_max=1e2)
    full = q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0), r_max=1e3)
    i, r = node_near(short, 2.0)
    j, _ = node_near(full, r)
    assert abs(short.values[i] - full.values[j]) <= short.tail_bound[i]


def test_profile_input_matches_callable():
    g = q.make_radial_grid()
    f = gauss_cut(0.5)
    prof = q.RadialProfile(g, f(g.nodes), decay_tag=(0.5, 3.0))
    a = q.convolve_radial(prof, "phi", 3).values
    b = q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0)).values
    np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-9)


# ---------------------------------------------------------------- gradients

def test_gradient_matches_difference_of_values():
    f = gauss_cut(0.5)
    res = q.convolve_radial(f, "phi", 3, decay_tag=(0.5, 3.0), gradient=True, refine=2)
    i, r = node_near(res, 0.8)
    h = 1e-4
    fd = (oracles.radial_convolution(3, "phi", f, r + h) - oracles.radial_convolution(3, "phi", f, r - h)) / (2 * h)
    assert res.gradient[i] == pytest.approx(fd, rel=1e-4)


def test_gradient_near_origin_bound():
    theta = 0.5
    g = q.gradient_convolve_radial(lambda s: s ** -2.5 * (1 + s) ** -0.5, "phi", 3, decay_tag=(theta, 3.0))
    sel = (g.r >= 1e-3) & (g.r <= 1)
    scaled = np.abs(g.values[sel]) * g.r[sel] ** (theta + 1)
    assert np.max(scaled) < 10 * np.median(scaled)


def test_point_gradient_is_radial():
    fr = lambda r: r ** -1.7 * np.exp(-(r / 4) ** 2)
    f = lambda y: fr(np.linalg.norm(y, axis=-1))
    x = np.array([1.2, 0.9])
    res = q.convolve_point(f, "phi", x, 2, q.KernelEnvelope(-0.3, 3.0), R=40, tol=1e-7, gradient=True)
    grad = np.asarray(res.value)
    perp = np.array([-x[1], x[0]]) / np.linalg.norm(x)
    assert abs(grad @ perp) <= 1e-6 * np.linalg.norm(grad)


# ---------------------------------------------------------------- pointwise mode

def test_point_matches_radial_2d():
    theta = -0.3
    fr = lambda r: r ** (-theta - 2) * np.exp(-(r / 8) ** 2)
    rad = q.convolve_radial(fr, "phi", 2, decay_tag=(theta, 3.0))
    i, r = node_near(rad, 3.0)
    res = q.convolve_point(lambda y: fr(np.linalg.norm(y, axis=-1)), "phi", np.array([r, 0.0]), 2,
                           q.KernelEnvelope(theta, 3.0), R=64, tol=1e-6)
    assert res.value == pytest.approx(rad.values[i], rel=1e-5)


def test_point_bump_3d():
    y0 = np.array([0.5, 0.2, 0.1])
    w = 1e-3

    def bump(y):
        d2 = np.sum((y - y0) ** 2, axis=-1)
        return np.exp(-d2 / (2 * w * w)) / ((2 * np.pi) ** 1.5 * w ** 3)

    x = np.array([1.0, -0.3, 0.4])
    res = q.convolve_point(bump, "phi", x, 3, q.KernelEnvelope(0.5, 3.0), centers=[y0], R=8, max_levels=1)
    assert res.value == pytest.approx(float(fundsol.phi(3, np.linalg.norm(x - y0))), rel=0.01)


def test_point_linearity():
    env = q.KernelEnvelope(-0.5, 3.0)
    fa = lambda y: np.exp(-np.sum(y ** 2, axis=-1))
    fb = lambda y: np.exp(-np.sum((y - 1.0) ** 2, axis=-1))
    x = np.array([0.7, -0.4])
    kw = dict(kind="phi", x=x, N=2, envelope=env, R=16, tol=1e-7, max_levels=2)
    a = q.convolve_point(fa, **kw).value
    b = q.convolve_point(fb, **kw).value
    ab = q.convolve_point(lambda y: 2 * fa(y) - 0.5 * fb(y), **kw).value
    assert ab == pytest.approx(2 * a - 0.5 * b, abs=1e-6)


def test_point_requires_envelope():
    with pytest.raises(DivergenceError):
        q.convolve_point(lambda y: np.zeros(y.shape[:-1]), "phi", np.array([1.0, 0.0]), 2, None)
    with pytest.raises(DomainError):
        q.convolve_point(lambda y: 0.0, "phi", np.ones(4), 4, q.KernelEnvelope(0.5, 3.0))


# ---------------------------------------------------------------- planar mode

def test_kernel_table_entries():
    from scipy import integrate
    h = 0.5
    T = q.planar_kernel_table(16, h)
    c = 15
    for a, b in [(0, 0), (1, 0), (1, 1), (3, -2)]:
        xi, yi = a * h, b * h
        ref, _ = integrate.dblquad(lambda v, u: float(fundsol.phi(2, max(math.hypot(xi - u, yi - v), 1e-300))),
                                   -h / 2, h / 2, -h / 2, h / 2, epsabs=1e-11, epsrel=1e-9)
        assert T[c + a, c + b] == pytest.approx(ref, rel=1e-6)
    assert not T.flags.writeable


def test_origin_cell_rule_area_and_mass():
    h = 0.8
    pts, w = q.origin_cell_rule(h)
    assert w.sum() == pytest.approx(h * h, rel=1e-12)
    assert np.all(np.abs(pts) <= h / 2 + 1e-12)
    # int over the cell of |y|^{-1}: singular but integrable
    exact = 4 * h * math.asinh(1.0)
    assert (np.hypot(pts[:, 0], pts[:, 1]) ** -1) @ w == pytest.approx(exact, rel=1e-8)


def test_planar_against_radial():
    fr = lambda r: np.exp(-r ** 2) * r ** -0.5
    rad = q.convolve_radial(fr, "phi", 2, decay_tag=(-1.5, 3.0))
    g = q.PlanarGrid(128, 8.0)
    X, Y = g.mesh()
    with np.errstate(divide="ignore"):
        fn = fr(np.hypot(X, Y))
    pc = q.PlanarConvolver(g)
    out, mass = pc.apply(fn, lambda p: fr(np.hypot(p[:, 0], p[:, 1])))
    i0 = g.origin
    for j in (1, 8, 16, 32):
        assert out[i0 + j, i0] == pytest.approx(float(rad(g.coords[i0 + j])), rel=0.02)
    f, m, _ = pc.cell_means(fn, lambda p: fr(np.hypot(p[:, 0], p[:, 1])))
    probe = pc.probe(f, m, np.array([20.0]), np.array([3.0]))[0]
    assert probe == pytest.approx(float(rad(math.hypot(20.0, 3.0))), rel=0.02)


def test_planar_grid_even():
    with pytest.raises(DomainError):
        q.PlanarGrid(63, 8.0)
    g = q.PlanarGrid(64, 8.0)
    assert g.h == 0.25 and g.coords[g.origin] == 0.0
