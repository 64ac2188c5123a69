import math

import numpy as np
import pytest

from helmsing import fundsol
from helmsing.errors import DomainError
from helmsing.fundsol import FundamentalSolution, Kind

R3 = np.geomspace(1e-3, 1e2, 400)


def test_closed_forms_3d():
    np.testing.assert_allclose(fundsol.phi(3, R3), np.cos(R3) / (4 * np.pi * R3), rtol=1e-9)
    np.testing.assert_allclose(fundsol.psi_partner(3, R3), np.sin(R3) / (4 * np.pi * R3), rtol=1e-9, atol=1e-16)
    np.testing.assert_allclose(fundsol.phi_complex(3, R3), np.exp(1j * R3) / (4 * np.pi * R3), rtol=1e-9)


def test_derivative_3d_at_one():
    expected = (-math.sin(1.0) - math.cos(1.0)) / (4 * math.pi)
    assert fundsol.phi_radial_derivative(Kind.PHI, 3, 1.0) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("N,eps", [(3, 1e-3), (2, 1e-4), (5, 1e-3)])
def test_dirac_normalization(N, eps):
    assert fundsol.dirac_normalization_check(N, eps) == pytest.approx(1.0, abs=1e-2)


def test_dirac_check_domain():
    with pytest.raises(DomainError):
        fundsol.dirac_normalization_check(3, 0.5)


@pytest.mark.parametrize("kind", list(Kind))
@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_ode_residual(kind, N):
    r = np.linspace(0.1, 50.0, 300)
    res, d2 = fundsol.ode_residual(kind, N, r)
    assert np.all(res <= 1e-7 * (1 + d2))


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_splitting_identity(N):
    r = np.geomspace(1e-2, 30, 50)
    lhs = fundsol.phi_complex(N, r)
    rhs = fundsol.phi(N, r) + 1j * fundsol.psi_partner(N, r)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=0)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_near_origin_slope(N):
    r = np.geomspace(1e-6, 1e-4, 20)
    slope = np.polyfit(np.log(r), np.log(fundsol.phi(N, r)), 1)[0]
    assert slope == pytest.approx(2 - N, abs=1e-3)


def test_near_origin_log_2d():
    r = np.geomspace(1e-6, 1e-4, 20)
    coef = np.polyfit(-np.log(r), fundsol.phi(2, r), 1)[0]
    assert coef == pytest.approx(fundsol.normalization_cN(2), abs=1e-3)


def test_log_derivative_2d():
    r = 1e-6
    assert r * fundsol.phi_radial_derivative(Kind.PHI, 2, r) == pytest.approx(-1 / (2 * math.pi), rel=1e-6)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_sommerfeld(N):
    r = 1e3
    res = abs(fundsol.phi_radial_derivative(Kind.PHIC, N, r) - 1j * fundsol.phi_complex(N, r))
    assert res * r ** ((N - 1) / 2) <= 0.05


def test_constants():
    assert fundsol.normalization_c0(2) == pytest.approx(0.25)
    assert fundsol.normalization_c0(3) == pytest.approx((2 * math.pi) ** -0.5 / 4)
    assert fundsol.normalization_cN(3) == pytest.approx(1 / (4 * math.pi))
    assert fundsol.normalization_cN(2) == pytest.approx(1 / (2 * math.pi))
    assert fundsol.psi_at_zero(3) == pytest.approx(1 / (4 * math.pi))
    assert fundsol.psi_partner(3, 0.0) == fundsol.psi_at_zero(3)


def test_second_derivative_closed_form():
    r = np.linspace(0.5, 20, 30)
    exact = ((2 - r ** 2) * np.cos(r) + 2 * r * np.sin(r)) / (4 * np.pi * r ** 3)
    np.testing.assert_allclose(fundsol.phi_second_derivative(Kind.PHI, 3, r), exact, rtol=1e-9, atol=1e-14)


def test_bundle_object():
    fs = FundamentalSolution(3, "phic")
    assert fs.kind is Kind.PHIC
    assert fs(1.0) == pytest.approx(np.exp(1j) / (4 * np.pi))
    assert fs.c0 == fundsol.normalization_c0(3)
    with pytest.raises(DomainError):
        FundamentalSolution(1)


def test_domain_errors():
    with pytest.raises(DomainError):
        fundsol.phi(3, 0.0)
    with pytest.raises(DomainError):
        fundsol.phi(3, -1.0)
    with pytest.raises(DomainError):
        fundsol.evaluate("bogus", 3, 1.0)
