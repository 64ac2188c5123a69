import math

import numpy as np
from hypothesis import given, settings, strategies as st

from helmsing import asymptotics as A, fundsol, quadrature as q, solver as S, specfun
from helmsing.cli import fmt
from helmsing.decay import fit_power_law

FAST = settings(max_examples=40, deadline=None)

orders = st.floats(min_value=-8.0, max_value=8.0, allow_nan=False).filter(lambda v: abs(v - round(v)) > 1e-3 or v == round(v))
args = st.floats(min_value=1e-2, max_value=150.0)
radii = st.floats(min_value=1e-3, max_value=80.0)
dims = st.integers(min_value=2, max_value=6)


@FAST
@given(orders, args)
def test_wronskian(nu, t):
    j, y = specfun.bessel_jy(nu, t)
    jp, yp = specfun.bessel_jy_prime(nu, t)
    w = j * yp - jp * y
    scale = max(abs(j * yp), abs(jp * y), 2 / (math.pi * t))
    assert abs(w - 2 / (math.pi * t)) <= 1e-9 * scale


@FAST
@given(st.floats(min_value=0.0, max_value=10.0), args)
def test_recurrence(nu, t):
    jm, ym = specfun.bessel_jy(nu - 1, t)
    j, y = specfun.bessel_jy(nu, t)
    jp, yp = specfun.bessel_jy(nu + 1, t)
    for a, b, c in ((jm, j, jp), (ym, y, yp)):
        assert abs(a + c - 2 * nu / t * b) <= 1e-9 * max(abs(a), abs(b) * 2 * nu / t, abs(c), 1e-300)


@FAST
@given(dims, radii)
def test_splitting(N, r):
    c = complex(fundsol.phi_complex(N, r))
    assert abs(c - complex(fundsol.phi(N, r), fundsol.psi_partner(N, r))) <= 1e-12 * abs(c)


@FAST
@given(dims, st.floats(min_value=0.05, max_value=20.0), st.floats(min_value=0.05, max_value=20.0))
def test_spherical_mean_symmetric(N, r, s):
    a = q.spherical_mean_separable(N, "phi", r, s)
    b = q.spherical_mean_separable(N, "phi", s, r)
    assert a == b
    if abs(r - s) > 1e-2:
        ref = q.spherical_mean_kernel(N, "phi", r, s)
        assert abs(a - ref) <= 1e-8 * max(abs(ref), 1e-12)


@FAST
@given(st.integers(min_value=3, max_value=8), st.floats(min_value=1.01, max_value=10.0))
def test_ladder_structure(N, p):
    lad = A.bootstrap_ladder(N, p)
    assert lad[0] == 2 + (2 - N) * p
    for a, b in zip(lad, lad[1:]):
        assert b == a * p + 2
    assert all(m <= 0 for m in lad[:-1])
    if lad.terminated:
        assert lad[-1] > 0
    if p < S.serrin_exponent(N):
        assert lad.terminated


@FAST
@given(st.integers(min_value=3, max_value=8), st.floats(min_value=1.01, max_value=2.9))
def test_ladder_monotone_in_p(N, p):
    # a smaller p never needs more rungs
    a = A.bootstrap_ladder(N, p)
    b = A.bootstrap_ladder(N, min(p + 0.05, S.serrin_exponent(N) - 1e-3) if N > 3 else min(p + 0.05, 2.95))
    if a.terminated and b.terminated:
        assert len(a) <= len(b)


@FAST
@given(dims, st.floats(min_value=0.0, max_value=4.0), st.floats(min_value=-1.0, max_value=3.0),
       st.floats(min_value=1.01, max_value=6.0))
def test_sigma_p_capped(N, alpha, sigma, p):
    sp = S.sigma_exponent(N, alpha, sigma, p)
    assert sp <= (N - 1) / 2
    assert sp == min((N - 1) / 2, alpha + sigma * p - (N + 1) / 2)


@FAST
@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0.1, max_value=10),
       st.floats(min_value=1.01, max_value=5.0))
def test_nonlinearity_homogeneous(z, lam, p):
    a = S.nonlinearity(np.array(lam * z), p)
    b = lam ** p * S.nonlinearity(np.array(z), p)
    assert abs(a - b) <= 1e-12 * max(abs(b), 1e-300)
    assert S.nonlinearity(np.array(-z), p) == -S.nonlinearity(np.array(z), p)


@FAST
@given(st.floats(min_value=-1e3, max_value=1e3).filter(lambda c: abs(c) > 1e-6), st.sampled_from([2, 3, 4]))
def test_dirac_linear(c, N):
    d = A.extract_dirac_mass(lambda r: c * fundsol.phi(N, r), N)
    assert abs(d.value - c) <= 1e-9 * abs(c)


@FAST
@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=1e-3, max_value=1e3))
def test_power_law_fit_exact(slope, c):
    r = np.geomspace(1, 1e3, 6)
    fit = fit_power_law(r, c * r ** slope)
    assert abs(fit.slope - slope) <= 1e-9


@FAST
@given(st.floats(allow_nan=False, allow_infinity=True))
def test_fmt_round_trip(x):
    assert float(fmt(x)) == x


@FAST
@given(st.floats(min_value=1e-4, max_value=1e3))
def test_weight_positive(r):
    spec = S.ProblemSpec(N=3, p=2.0, alpha=1.5, sigma=1.0, k=0.01, harmonic=S.HarmonicPart("psi", 0.1))
    w = S.weight_W_p(spec, r)
    assert w > 0 and math.isfinite(w)
