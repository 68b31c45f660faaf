import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyspec2d.errors import (
    DegenerateGeometryError,
    IncompatibleMultilateralError,
    IncompatibleQuadrilateralError,
    NotATriangleError,
)
from polyspec2d.geometry import (
    chain_from_angles,
    classify_triangle,
    kappa_window,
    multilateral_chain,
    quadrilateral_from_gamma4,
    quadrilateral_from_kappa,
    third_side,
    triangle_angles,
    triangle_from_sides,
    triangle_from_two_sides_angle,
)

side = st.floats(0.2, 10.0)


def test_right_triangle():
    t = triangle_from_sides(5, 4, 3)
    assert t.gamma3 == pytest.approx(math.pi / 2, abs=1e-15)
    assert t.gamma1 == pytest.approx(math.asin(4 / 5), abs=1e-15)


def test_equilateral():
    t = triangle_from_sides(1, 1, 1)
    np.testing.assert_allclose(t.angles, [math.pi / 3] * 3, atol=1e-15)


def test_not_a_triangle_vs_degenerate():
    with pytest.raises(NotATriangleError):
        triangle_from_sides(5, 1, 1)
    with pytest.raises(DegenerateGeometryError):
        triangle_from_sides(2, 1, 1)
    assert classify_triangle(2, 1, 1) == "degenerate"
    assert classify_triangle(2 + 1e-6, 1, 1) == "invalid"


@pytest.mark.parametrize("r2, r3, g3, r1", [
    (1, 1, math.pi / 2, math.sqrt(2)),
    (4, 3, math.pi / 2, 5.0),
    (2, 3, math.pi / 3, math.sqrt(7)),
])
def test_two_sides_angle(r2, r3, g3, r1):
    t = triangle_from_two_sides_angle(r2, r3, g3)
    assert t.rho1 == pytest.approx(r1, rel=1e-15)
    assert t.gamma3 == g3


def test_two_sides_angle_rejects_closed_interval_ends():
    for g in (0.0, math.pi, -0.1):
        with pytest.raises(DegenerateGeometryError):
            triangle_from_two_sides_angle(1, 2, g)


@settings(max_examples=80, deadline=None)
@given(side, side, st.floats(0.01, math.pi - 0.01))
def test_triangle_invariants(r2, r3, g3):
    try:
        t = triangle_from_two_sides_angle(r2, r3, g3)
    except DegenerateGeometryError:
        return
    res = t.residuals()
    scale = max(t.sides) ** 2
    assert res["angle_sum"] <= 1e-12
    assert res["law_of_cosines"] <= 1e-12 * scale
    assert res["projection_cos"] <= 1e-12 * max(t.sides)
    assert res["projection_sin"] <= 1e-12 * max(t.sides)
    # round trip through the side lengths
    if min(t.angles) > 1e-4:
        again = triangle_from_sides(*t.sides)
        assert again.gamma3 == pytest.approx(g3, abs=1e-10)
    # twice the area from every corner
    a = t.rho2 * t.rho3 * math.sin(t.gamma3)
    assert t.rho1 * t.rho3 * math.sin(t.gamma1) == pytest.approx(a, rel=1e-10, abs=1e-14)
    assert t.rho1 * t.rho2 * math.sin(t.gamma2) == pytest.approx(a, rel=1e-10, abs=1e-14)


def test_vectorised_helpers_match_scalar():
    s = np.array([[5, 4, 3], [1, 1, 1], [3, 4, 6]], dtype=float)
    g = np.array(triangle_angles(s[:, 0], s[:, 1], s[:, 2])).T
    for row, ang in zip(s, g):
        np.testing.assert_allclose(ang, triangle_from_sides(*row).angles, atol=1e-15)
    assert np.isnan(triangle_angles(5.0, 1.0, 1.0)[0])
    assert third_side(4.0, 3.0, math.pi / 2) == pytest.approx(5.0, rel=1e-15)


def test_square_quadrilateral():
    r = math.sqrt(2)
    q = quadrilateral_from_gamma4(r, r, r, r, math.pi / 2)
    assert q.kappa == pytest.approx(2.0, rel=1e-15)
    assert q.gamma2 == pytest.approx(math.pi / 2, abs=1e-14)


def test_rhombus_quadrilateral():
    q = quadrilateral_from_gamma4(1, 1, 1, 1, math.pi / 3)
    assert q.kappa == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_allclose(q.first.angles, [math.pi / 3] * 3, atol=1e-14)
    np.testing.assert_allclose(q.second.angles, [math.pi / 3] * 3, atol=1e-14)


def test_incompatible_quadrilateral():
    with pytest.raises(IncompatibleQuadrilateralError):
        quadrilateral_from_gamma4(10, 1, 1, 1, math.pi / 2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 4), st.floats(0.5, 4), st.floats(0.5, 4), st.floats(0.5, 4),
       st.floats(0.05, 0.95))
def test_quadrilateral_invariants(r1, r2, r3, r4, frac):
    lo, hi = kappa_window(r1, r2, r3, r4)
    if hi - lo < 1e-3:
        return
    kappa = lo + frac * (hi - lo)
    q = quadrilateral_from_kappa(r1, r2, r3, r4, kappa)
    k_a = math.sqrt(r1 * r1 + r2 * r2 - 2 * r1 * r2 * math.cos(q.gamma2))
    k_b = math.sqrt(r3 * r3 + r4 * r4 - 2 * r3 * r4 * math.cos(q.gamma4))
    assert k_a == pytest.approx(kappa, rel=1e-12)
    assert k_b == pytest.approx(kappa, rel=1e-12)
    assert r1 * math.sin(q.gamma2) == pytest.approx(kappa * math.sin(q.beta3), rel=1e-12)
    again = quadrilateral_from_gamma4(r1, r2, r3, r4, q.gamma4)
    assert again.kappa == pytest.approx(kappa, rel=1e-12)


def test_chain_p4_matches_quadrilateral():
    chain = multilateral_chain((1, 1, 1, 1), (math.pi / 3,))
    q = quadrilateral_from_gamma4(1, 1, 1, 1, math.pi / 3)
    cq = chain.as_quadrilateral()
    for name in ("kappa", "gamma2", "gamma4", "beta3", "alpha1", "alpha2"):
        assert getattr(cq, name) == pytest.approx(getattr(q, name), abs=1e-12)


def test_regular_pentagon_diagonals():
    golden = (1 + math.sqrt(5)) / 2
    # fan from one vertex: angles pi/5, 2pi/5 and the interior angle 3pi/5
    chain = chain_from_angles((1, 1, 1, 1), (math.pi / 5, 2 * math.pi / 5, 3 * math.pi / 5))
    np.testing.assert_allclose(chain.diagonals, [golden, golden], rtol=1e-12)
    assert chain.sides[0] == pytest.approx(1.0, rel=1e-12)


def test_chain_triangles_share_diagonals():
    chain = chain_from_angles((1.1, 0.8, 1.3, 0.9), (1.2, 2.0, 0.7))
    assert len(chain.triangles) == 3
    for k, kappa in enumerate(chain.diagonals):
        assert kappa in chain.triangles[k].sides
        assert kappa in chain.triangles[k + 1].sides


def test_impossible_multilateral():
    with pytest.raises(IncompatibleMultilateralError):
        multilateral_chain((1, 1, 1, 1, 10), (1.0, 1.0))
