import math

import numpy as np
import pytest

from polyspec2d.bessel import oscillatory_product_integral
from polyspec2d.closed_form import (
    angular_identity_residual,
    multi_bessel,
    quad_bessel,
    triple_bessel,
)
from polyspec2d.errors import DegenerateGeometryError, InvalidInputError, UnsupportedOrderError


def test_triple_right_triangle():
    assert triple_bessel(0, 0, 5, 4, 3) == pytest.approx(1 / (12 * math.pi), rel=1e-14)


def test_triple_outside_triangle_is_exact_zero():
    assert triple_bessel(1, 1, 1, 1, 5) == 0.0
    assert triple_bessel(2, -3, 10, 1, 2) == 0.0


def test_triple_degenerate():
    with pytest.raises(DegenerateGeometryError):
        triple_bessel(0, 0, 2, 1, 1)


@pytest.mark.parametrize("orders, sides", [
    ((1, 2), (1.3, 1.0, 1.7)),
    ((-2, 3), (2.0, 2.5, 3.1)),
    ((3, 0), (4.0, 3.0, 2.0)),
])
def test_triple_matches_oracle(orders, sides):
    l1, l2 = orders
    ref = oscillatory_product_integral((l1, l2, l1 + l2), sides)
    val = triple_bessel(l1, l2, *sides)
    assert abs(val - ref) <= max(5e-3, 1e-2 * abs(val))


def test_angular_identity():
    for l1, l2, r2, r3, lam in [(0, 0, 1.0, 1.0, 1.0), (2, -1, 0.7, 1.9, 3.3), (4, 3, 2.0, 0.5, 6.0)]:
        assert angular_identity_residual(l1, l2, r2, r3, lam) <= 1e-8


def test_quad_matches_oracle():
    for orders, sides in [((1, 0, 2), (1.0, 1.3, 0.9, 1.5)), ((0, 0, 0), (2, 2.5, 3, 1.7))]:
        ref = oscillatory_product_integral(orders + (sum(orders),), sides)
        assert abs(quad_bessel(*orders, *sides) - ref) <= 5e-3


def test_quad_without_quadrilateral():
    assert quad_bessel(0, 0, 0, 1, 1, 1, 10) == 0.0


def test_quad_panel_floor():
    with pytest.raises(InvalidInputError):
        quad_bessel(0, 0, 0, 1, 1, 1, 1, panels=16)


def test_multi_reduces_to_quad():
    orders, sides = (1, -2, 3), (1.1, 0.9, 1.4, 1.2)
    assert multi_bessel(orders, sides) == pytest.approx(quad_bessel(*orders, *sides), abs=1e-12)


def test_multi_regular_pentagon():
    orders = (1, 0, 2, -1)
    ref = oscillatory_product_integral(orders + (sum(orders),), (1.0,) * 5)
    assert abs(multi_bessel(orders, (1.0,) * 5) - ref) <= 5e-3


def test_multi_order_limits():
    with pytest.raises(UnsupportedOrderError):
        multi_bessel((0,) * 7, (1.0,) * 8)
    with pytest.raises(InvalidInputError):
        multi_bessel((0, 0), (1.0,) * 4)
    assert multi_bessel((0,) * 4, (1, 1, 1, 1, 10)) == 0.0


def test_multi_rejects_nonpositive_sides():
    with pytest.raises(InvalidInputError):
        multi_bessel((0, 0, 0), (1.0, 0.0, 1.0, 1.0))
    with pytest.raises(InvalidInputError):
        triple_bessel(0, 0, np.nan, 1.0, 1.0)


def test_triple_order_flip():
    for l1, l2 in [(1, 2), (-3, 1), (4, 4)]:
        assert triple_bessel(-l1, -l2, 2.0, 2.5, 3.1) == triple_bessel(l1, l2, 2.0, 2.5, 3.1)
