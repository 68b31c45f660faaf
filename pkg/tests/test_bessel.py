import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from polyspec2d.bessel import (
    QuadratureConfig,
    besselj,
    besselj_series_mp,
    besselj_signed_table,
    breakpoint_gauss,
    composite_gauss,
    dirac_closure,
    hankel_transform,
    oscillatory_product_integral,
    truncation_order,
    validate_graf,
    validate_jacobi_anger,
)
from polyspec2d.errors import (
    DegenerateGeometryError,
    InvalidInputError,
    OracleUnreliableError,
    UnsupportedOrderError,
)


def test_besselj_at_origin():
    assert besselj(0, 0.0) == 1.0
    assert besselj(3, 0.0) == 0.0


def test_besselj_negative_order():
    assert besselj(-3, 2.5) == pytest.approx(-besselj(3, 2.5), abs=1e-16)


def test_besselj_order_one_series():
    # 30 terms of the ascending series at x = 1
    ref = sum((-1) ** k * 0.5 ** (2 * k + 1) / (math.factorial(k) * math.factorial(k + 1))
              for k in range(30))
    assert besselj(1, 1.0) == pytest.approx(ref, abs=1e-15)


def test_besselj_order_cap():
    with pytest.raises(UnsupportedOrderError):
        besselj(513, 1.0)


@pytest.mark.parametrize("x", [0.0, 1e-3, 0.7, 2.0, 5.5, 12.0, 29.9])
def test_besselj_vs_mp_series(x):
    for n in range(0, 21):
        ref = besselj_series_mp(n, x)
        assert abs(besselj(n, x) - ref) <= 1e-10 * max(abs(ref), 1e-300) or abs(besselj(n, x) - ref) < 1e-15


def test_besselj_vs_scipy_large_argument():
    x = np.linspace(0, 100, 401)
    for n in (0, 1, 7, 40, 120):
        np.testing.assert_allclose(besselj(n, x), jv(n, x), atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 60), st.floats(0, 100))
def test_parity_and_magnitude(n, x):
    assert abs(besselj(-n, x) - (-1) ** n * besselj(n, x)) <= 1e-12
    assert abs(besselj(n, x)) <= 1.0


def test_signed_table_layout():
    tab = besselj_signed_table(4, 3.3)
    for ell in range(-4, 5):
        assert tab[ell + 4] == pytest.approx(jv(ell, 3.3), abs=1e-15)


def test_jacobi_anger_examples():
    assert validate_jacobi_anger(1, 0, 0.3, 1.1, 10) < 1e-15
    assert validate_jacobi_anger(2, 3, math.pi / 4, 0, 30) <= 1e-10
    # under-truncated: L far below rho * r
    assert validate_jacobi_anger(5, 5, 1.0, 2.0, 10) > 1e-3


def test_graf_examples():
    assert validate_graf(1, 1, math.pi / 2, 0, 30) <= 1e-10
    assert validate_graf(3, 4, math.pi / 2, 2, 40) <= 1e-10
    with pytest.raises(DegenerateGeometryError):
        validate_graf(2, 2, math.pi - 1e-9, 1, 40)


def test_truncation_order_tail_is_small():
    for x in (0.0, 3.0, 10.0, 45.0):
        n = truncation_order(x)
        assert n >= math.ceil(x) + 20
        assert abs(jv(n, x)) < 1e-16


def test_composite_gauss_integrates_polynomial():
    x, w = composite_gauss(0.0, 2.0, 4)
    assert np.sum(w * x ** 7) == pytest.approx(2 ** 8 / 8, rel=1e-13)


def test_breakpoint_gauss_handles_endpoint_singularity():
    # int_0^1 x^{-1/2} dx = 2; graded nodes cluster at the break
    x, w = breakpoint_gauss([0.0, 1.0], 16)
    assert np.sum(w / np.sqrt(x)) == pytest.approx(2.0, rel=1e-4)


def test_hankel_gaussian_pair():
    a = 0.5
    rho = np.linspace(0, 12 / math.sqrt(a), 8001)
    val = hankel_transform(0, rho, np.exp(-a * rho ** 2), 1.0)
    assert val == pytest.approx(math.exp(-1 / (4 * a)) / (2 * a), abs=1e-6)


def test_hankel_order_two_at_origin():
    rho = np.linspace(1, 2, 50)
    assert hankel_transform(2, rho, np.ones_like(rho), 0.0) == 0.0


def test_hankel_narrow_bump_mass():
    rho = np.linspace(0.99, 1.01, 2001)
    f = np.exp(-(((rho - 1) / 0.003) ** 2))
    mass = np.trapezoid(f * rho, rho)
    assert hankel_transform(0, rho, f, 0.0) == pytest.approx(mass, abs=1e-6)


def test_hankel_rejects_empty():
    with pytest.raises(InvalidInputError):
        hankel_transform(0, [], [], 1.0)


def test_dirac_closure_trend():
    errs = [abs(dirac_closure(1, 2.0, 0.4, c) - 1) for c in (5.0, 10.0, 20.0, 40.0)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.01
    # a narrower bump needs a longer cutoff but approaches the same limit
    assert abs(dirac_closure(1, 2.0, 0.1, 80.0) - 1) < 0.02


def test_oracle_right_triangle():
    assert oscillatory_product_integral((0, 0, 0), (5, 4, 3)) == pytest.approx(
        1 / (12 * math.pi), rel=1e-3)


def test_oracle_outside_triangle():
    assert abs(oscillatory_product_integral((0, 1, 1), (1, 1, 5))) <= 5e-3


def test_oracle_needs_three_factors():
    with pytest.raises(InvalidInputError):
        oscillatory_product_integral((0, 0), (1, 1))


def test_oracle_reports_unreliable_extrapolation():
    # heavy damping and no ladder extension cannot meet a 1e-9 tolerance
    cfg = QuadratureConfig(cutoff=50.0, eps_ladder=(4e-1, 2e-1, 1e-1), rel_tol=1e-9, abs_tol=1e-12)
    with pytest.raises(OracleUnreliableError) as info:
        oscillatory_product_integral((0, 0, 0), (1.0, 1.2, 0.9), cfg, max_extend=0)
    assert len(info.value.estimates) == 3


def test_quadrature_config_validation():
    with pytest.raises(InvalidInputError):
        QuadratureConfig(eps_ladder=(1e-3, 1e-2))
    with pytest.raises(InvalidInputError):
        QuadratureConfig(panel_count=10)
