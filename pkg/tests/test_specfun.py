import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vorder.errors import BranchError, DomainError, PrecisionError
from vorder.specfun import (bessel_j, bessel_j_asymptotic, bessel_j_series, gamma,
                            principal_power)

# independent reference values (50-digit arithmetic), frozen
J_HALF_AT_1 = 0.671396707141803090416364012041
I1_AT_2 = 1.590636854637329063382254425


def test_gamma_values():
    assert gamma(1) == pytest.approx(1, rel=1e-15)
    assert gamma(1.5) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    assert gamma(10) == pytest.approx(362880, rel=1e-14)


@pytest.mark.parametrize("x", [0, -1, -7])
def test_gamma_poles(x):
    with pytest.raises(DomainError):
        gamma(x)


@pytest.mark.parametrize("x", [0.6, 1.3, 2.5, 7.1])
def test_duplication_formula(x):
    lhs = gamma(x) * gamma(x + 0.5)
    rhs = 2 ** (1 - 2 * x) * math.sqrt(math.pi) * gamma(2 * x)
    assert abs(lhs - rhs) / gamma(2 * x) <= 1e-12


def _gauss_legendre(f, a, b, n=400):
    x, w = np.polynomial.legendre.leggauss(n)
    t = (b - a) / 2 * x + (a + b) / 2
    return (b - a) / 2 * np.sum(w * f(t))


@pytest.mark.parametrize("a,b", [(0.5, 1.5), (1.5, 0.5), (2, 3)])
def test_beta_integral(a, b):
    val = _gauss_legendre(lambda t: np.sin(t) ** (2 * a - 1) * np.cos(t) ** (2 * b - 1),
                          0, np.pi / 2)
    assert val == pytest.approx(0.5 * gamma(a) * gamma(b) / gamma(a + b), rel=1e-8)


def test_gamma_against_factorials():
    for n in range(1, 40):
        assert gamma(n) == pytest.approx(math.factorial(n - 1), rel=1e-13)


def test_bessel_examples():
    assert bessel_j(0, 0) == 1
    assert bessel_j(0.5, 1) == pytest.approx(J_HALF_AT_1, rel=1e-14)
    assert bessel_j(1, 2j) == pytest.approx(1j * I1_AT_2, rel=1e-14)


def _i1_real_series(x):
    return sum((x / 2) ** (2 * m + 1) / (math.factorial(m) * math.factorial(m + 1))
               for m in range(60))


def test_bessel_imaginary_axis_matches_modified_series():
    for x in [0.1, 1.0, 3.7, 12.0, 25.0]:
        assert bessel_j(1, 1j * x) == pytest.approx(1j * _i1_real_series(x), rel=1e-13)


def test_half_integer_closed_form():
    for z in [0.3, 2.0, 7.5, 1 + 2j, -3 + 0.5j, 18 + 1j, 70 - 3j]:
        ref = cmath.sqrt(2 / (math.pi * z)) * cmath.sin(z)
        assert bessel_j(0.5, z) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_half_integer_cut():
    with pytest.raises(BranchError):
        bessel_j(1.5, -2.0)
    # integer orders are entire
    assert bessel_j(1, -2.0) == pytest.approx(-bessel_j(1, 2.0), rel=1e-15)


def test_series_nonconvergence_reports_precision():
    with pytest.raises(PrecisionError):
        bessel_j_series(1, 300j, max_terms=20)


@given(st.floats(0.1, 30), st.floats(-3.0, 3.0))
@settings(max_examples=60, deadline=None)
def test_integer_order_conjugate_symmetry(r, a):
    z = r * cmath.exp(1j * a)
    for nu in (0, 1, 2):
        assert bessel_j(nu, z.conjugate()) == pytest.approx(bessel_j(nu, z).conjugate(),
                                                             rel=1e-13, abs=1e-300)


def test_bessel_recurrence():
    # J_{nu-1} + J_{nu+1} = (2 nu / z) J_nu
    for z in [0.7 + 0.2j, 3 + 4j, 9j, 30 + 45j, 75 + 5j]:
        for nu in (1, 1.5, 2):
            lhs = bessel_j(nu - 1, z) + bessel_j(nu + 1, z)
            rhs = 2 * nu / z * bessel_j(nu, z)
            assert lhs == pytest.approx(rhs, rel=1e-10)


def test_series_and_hankel_agree_at_switch():
    # near the imaginary axis the series has no cancellation at |z| = 60
    for a in np.linspace(1.2, 1.55, 6):
        z = 60 * cmath.exp(1j * a)
        assert bessel_j_series(1, z) == pytest.approx(bessel_j(1, z * (1 + 1e-12)), rel=1e-9)


def test_cauchy_riemann_second_order():
    rng = np.random.default_rng(4)
    for _ in range(10):
        z = complex(rng.uniform(-5, 5), rng.uniform(0.5, 5))

        def cr(eps):
            dx = (bessel_j(1.5, z + eps) - bessel_j(1.5, z - eps)) / (2 * eps)
            dy = (bessel_j(1.5, z + 1j * eps) - bessel_j(1.5, z - 1j * eps)) / (2 * eps)
            return abs(dy - 1j * dx)

        r1, r2 = cr(1e-3), cr(5e-4)
        # both differences carry O(eps^2) errors; CR residual shrinks accordingly
        assert r1 < 1e-5 * max(1, abs(bessel_j(1.5, z)))
        assert r2 <= r1 / 3 or r2 < 1e-11


def test_asymptotic_errors():
    with pytest.raises(PrecisionError):
        bessel_j_asymptotic(1, 5j)
    with pytest.raises(BranchError):
        bessel_j_asymptotic(1, -20.0)


def test_asymptotic_close_at_50():
    z = 50j * cmath.exp(0.2j)
    assert abs(bessel_j_asymptotic(1, z) / bessel_j_series(1, z) - 1) <= 0.1


def test_asymptotic_deviation_is_first_order():
    devs = []
    for r in [10, 20, 40, 80]:
        z = 1j * r * cmath.exp(0.15j)
        devs.append(abs(bessel_j_asymptotic(1, z) / bessel_j_series(1, z) - 1))
    for a, b in zip(devs, devs[1:]):
        assert 2 / 1.5 <= a / b <= 2 * 1.5


def test_asymptotic_half_order_is_exact():
    for z in [10.5, 20 + 3j, 40j + 7]:
        ref = cmath.sqrt(2 / (math.pi * z)) * cmath.sin(z)
        assert bessel_j_asymptotic(0.5, z) == pytest.approx(ref, rel=1e-12)


def test_principal_power():
    assert principal_power(1, 0.7) == 1
    assert principal_power(4, 0.5) == pytest.approx(2)
    assert principal_power(1j, 2) == pytest.approx(-1)
    with pytest.raises(BranchError):
        principal_power(-1.0, 0.5)
    # approached from above the cut
    assert abs(principal_power(-1 + 1e-14j, 0.5) - 1j) < 1e-12
