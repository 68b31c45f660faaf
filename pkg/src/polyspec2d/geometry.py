"""Triangles, quadrilaterals and multilateral chains of wave-number sides.

Angle roles in a triangle with sides (rho1, rho2, rho3):

* ``gamma3`` lies between rho2 and rho3 (opposite rho1),
* ``gamma1`` is opposite rho2,
* ``gamma2`` is opposite rho3,

so that rho2 - rho3 cos(gamma3) = rho1 cos(gamma2) and
rho3 sin(gamma3) = rho1 sin(gamma2).  Every polygon below is a fan of such
triangles and inherits these roles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    IncompatibleMultilateralError,
    IncompatibleQuadrilateralError,
    InvalidInputError,
    NotATriangleError,
)

SLACK = 1e-12


# ---------------------------------------------------------------------------
# vectorised helpers


def third_side(a, b, angle):
    """Side opposite ``angle`` in a triangle with the other two sides a, b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # (a - b)^2 + 4ab sin^2(angle/2) avoids cancellation near angle = 0
    s = np.sin(0.5 * np.asarray(angle, dtype=float))
    return np.sqrt((a - b) ** 2 + 4.0 * a * b * s * s)


def twice_area(r1, r2, r3):
    """2 * area from three sides (Kahan's stable Heron); NaN when not a triangle."""
    r = np.sort(np.stack(np.broadcast_arrays(*map(np.asarray, (r1, r2, r3))), axis=0).astype(float), axis=0)
    c, b, a = r[0], r[1], r[2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    with np.errstate(invalid="ignore"):
        return np.where(prod >= 0, 0.5 * np.sqrt(np.maximum(prod, 0.0)), np.nan)


def triangle_angles(r1, r2, r3):
    """(gamma1, gamma2, gamma3) for sides (r1, r2, r3), NaN where invalid.

    Uses atan2 of twice the area against the law-of-cosines numerator,
    which stays accurate close to degenerate triangles.
    """
    r1, r2, r3 = (np.asarray(v, dtype=float) for v in (r1, r2, r3))
    four_a = 2.0 * twice_area(r1, r2, r3)
    g3 = np.arctan2(four_a, r2 * r2 + r3 * r3 - r1 * r1)
    g2 = np.arctan2(four_a, r1 * r1 + r2 * r2 - r3 * r3)
    g1 = np.pi - g2 - g3
    return g1, g2, g3


def classify_triangle(r1: float, r2: float, r3: float) -> str:
    """'valid', 'degenerate' or 'invalid' with relative slack SLACK."""
    a, b, c = sorted((float(r1), float(r2), float(r3)))
    slack = SLACK * max(c, 1.0)
    gap = a + b - c
    if gap > slack:
        return "valid"
    if gap >= -slack:
        return "degenerate"
    return "invalid"


def _check_sides(*sides):
    for s in sides:
        if not (math.isfinite(s) and s > 0):
            raise InvalidInputError(f"side lengths must be finite and positive, got {s}")


def _check_open_angle(angle, name):
    if not (0.0 < angle < math.pi):
        raise DegenerateGeometryError(f"{name}={angle} is outside (0, pi)")


# ---------------------------------------------------------------------------
# triangles


@dataclass(frozen=True)
class TriangleGeom:
    rho1: float
    rho2: float
    rho3: float
    gamma1: float
    gamma2: float
    gamma3: float

    @property
    def sides(self) -> tuple[float, float, float]:
        return (self.rho1, self.rho2, self.rho3)

    @property
    def angles(self) -> tuple[float, float, float]:
        return (self.gamma1, self.gamma2, self.gamma3)

    def residuals(self) -> dict[str, float]:
        """Deviation of every defining relation; all should be ~1e-15."""
        r1, r2, r3 = self.sides
        g1, g2, g3 = self.angles
        return {
            "law_of_cosines": abs(r1 * r1 - (r2 * r2 + r3 * r3 - 2 * r2 * r3 * math.cos(g3))),
            "projection_cos": abs(r2 - r3 * math.cos(g3) - r1 * math.cos(g2)),
            "projection_sin": abs(r3 * math.sin(g3) - r1 * math.sin(g2)),
            "angle_sum": abs(g1 + g2 + g3 - math.pi),
        }


def triangle_from_sides(rho1: float, rho2: float, rho3: float) -> TriangleGeom:
    _check_sides(rho1, rho2, rho3)
    kind = classify_triangle(rho1, rho2, rho3)
    if kind == "invalid":
        raise NotATriangleError(f"({rho1}, {rho2}, {rho3}) violates the triangle inequality")
    if kind == "degenerate":
        raise DegenerateGeometryError(f"({rho1}, {rho2}, {rho3}) is collinear")
    g1, g2, g3 = (float(g) for g in triangle_angles(rho1, rho2, rho3))
    return TriangleGeom(float(rho1), float(rho2), float(rho3), g1, g2, g3)


def triangle_from_two_sides_angle(rho2: float, rho3: float, gamma3: float) -> TriangleGeom:
    """Triangle with sides rho2, rho3 enclosing gamma3; rho1 is the third side."""
    _check_sides(rho2, rho3)
    _check_open_angle(gamma3, "gamma3")
    rho1 = float(third_side(rho2, rho3, gamma3))
    if classify_triangle(rho1, rho2, rho3) != "valid":
        raise DegenerateGeometryError(f"gamma3={gamma3} gives a collinear triangle")
    # keep gamma3 exactly; gamma2 from the projection relations
    g2 = math.atan2(rho3 * math.sin(gamma3), rho2 - rho3 * math.cos(gamma3))
    g1 = math.pi - g2 - gamma3
    return TriangleGeom(rho1, float(rho2), float(rho3), g1, g2, float(gamma3))


# ---------------------------------------------------------------------------
# quadrilaterals


@dataclass(frozen=True)
class QuadrilateralGeom:
    """Quadrilateral split by the diagonal kappa into (rho1, rho2, kappa)
    and (kappa, rho3, rho4).

    ``beta3``/``alpha1``/``gamma2`` are the gamma3/gamma1/gamma2 roles of the
    first triangle; ``gamma4``/``alpha2`` are the gamma3/gamma1 roles of the
    second.
    """

    rho1: float
    rho2: float
    rho3: float
    rho4: float
    kappa: float
    gamma2: float
    gamma4: float
    beta3: float
    alpha1: float
    alpha2: float
    first: TriangleGeom
    second: TriangleGeom


def kappa_window(rho1: float, rho2: float, rho3: float, rho4: float) -> tuple[float, float]:
    """Open interval of diagonals compatible with both triangles."""
    return max(abs(rho2 - rho1), abs(rho4 - rho3)), min(rho1 + rho2, rho3 + rho4)


def quadrilateral_from_kappa(rho1, rho2, rho3, rho4, kappa) -> QuadrilateralGeom:
    _check_sides(rho1, rho2, rho3, rho4, kappa)
    if classify_triangle(rho1, rho2, kappa) != "valid" or classify_triangle(kappa, rho3, rho4) != "valid":
        lo, hi = kappa_window(rho1, rho2, rho3, rho4)
        raise IncompatibleQuadrilateralError(f"kappa={kappa} outside window ({lo}, {hi})")
    first = triangle_from_sides(rho1, rho2, kappa)
    second = triangle_from_sides(kappa, rho3, rho4)
    return QuadrilateralGeom(
        float(rho1), float(rho2), float(rho3), float(rho4), float(kappa),
        gamma2=first.gamma2, gamma4=second.gamma3, beta3=first.gamma3,
        alpha1=first.gamma1, alpha2=second.gamma1, first=first, second=second,
    )


def quadrilateral_from_gamma4(rho1, rho2, rho3, rho4, gamma4) -> QuadrilateralGeom:
    _check_sides(rho1, rho2, rho3, rho4)
    second = triangle_from_two_sides_angle(rho3, rho4, gamma4)
    kappa = second.rho1
    if classify_triangle(rho1, rho2, kappa) != "valid":
        lo, hi = kappa_window(rho1, rho2, rho3, rho4)
        raise IncompatibleQuadrilateralError(f"kappa={kappa} outside window ({lo}, {hi})")
    first = triangle_from_sides(rho1, rho2, kappa)
    return QuadrilateralGeom(
        float(rho1), float(rho2), float(rho3), float(rho4), kappa,
        gamma2=first.gamma2, gamma4=second.gamma3, beta3=first.gamma3,
        alpha1=first.gamma1, alpha2=second.gamma1, first=first, second=second,
    )


# ---------------------------------------------------------------------------
# multilaterals


@dataclass(frozen=True)
class MultilateralChain:
    """Fan of p-2 triangles T_1..T_{p-2}.

    T_1 = (rho1, rho2, kappa1), T_k = (kappa_{k-1}, rho_{k+1}, kappa_k),
    T_{p-2} = (kappa_{p-3}, rho_{p-1}, rho_p).  ``alphas[k-1]`` is the gamma1
    role of T_k and ``betas[k-1]`` (= beta_{k+2}) its gamma3 role.
    """

    p: int
    sides: tuple[float, ...]
    diagonals: tuple[float, ...]
    triangles: tuple[TriangleGeom, ...]

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(t.gamma1 for t in self.triangles)

    @property
    def betas(self) -> tuple[float, ...]:
        """(beta_3, ..., beta_p)."""
        return tuple(t.gamma3 for t in self.triangles)

    def as_quadrilateral(self) -> QuadrilateralGeom:
        if self.p != 4:
            raise InvalidInputError("only a chain of order 4 is a quadrilateral")
        first, second = self.triangles
        return QuadrilateralGeom(
            *self.sides, self.diagonals[0],
            gamma2=first.gamma2, gamma4=second.gamma3, beta3=first.gamma3,
            alpha1=first.gamma1, alpha2=second.gamma1, first=first, second=second,
        )


def _fold_back(sides, fold_angles, error):
    """Build T_{p-2}, ..., T_2 from the far end; returns (diagonals, triangles)."""
    p = len(sides)
    rho = (None,) + tuple(float(s) for s in sides)  # 1-based
    tris = {}
    try:
        t = triangle_from_two_sides_angle(rho[p - 1], rho[p], fold_angles[0])
    except DegenerateGeometryError as exc:
        raise error(str(exc)) from exc
    tris[p - 2] = t
    kappa = {p - 3: t.rho1}
    for i, k in enumerate(range(p - 3, 1, -1), start=1):
        try:
            t = triangle_from_two_sides_angle(rho[k + 1], kappa[k], fold_angles[i])
        except DegenerateGeometryError as exc:
            raise error(str(exc)) from exc
        tris[k] = t
        kappa[k - 1] = t.rho1
    return kappa, tris


def multilateral_chain(sides, fold_angles) -> MultilateralChain:
    """Chain for sides (rho1..rho_p) and fold angles (beta_p, ..., beta_4)."""
    sides = [float(s) for s in sides]
    p = len(sides)
    if p < 4:
        raise InvalidInputError("a multilateral needs at least 4 sides")
    if len(fold_angles) != p - 3:
        raise InvalidInputError(f"need {p - 3} fold angles, got {len(fold_angles)}")
    _check_sides(*sides)
    kappa, tris = _fold_back(sides, list(fold_angles), IncompatibleMultilateralError)
    try:
        tris[1] = triangle_from_sides(sides[0], sides[1], kappa[1])
    except (NotATriangleError, DegenerateGeometryError) as exc:
        raise IncompatibleMultilateralError(
            f"closing triangle ({sides[0]}, {sides[1]}, {kappa[1]}) is not a triangle"
        ) from exc
    return MultilateralChain(
        p, tuple(sides), tuple(kappa[k] for k in range(1, p - 2)),
        tuple(tris[k] for k in range(1, p - 1)),
    )


def chain_from_angles(rho_tail, betas) -> MultilateralChain:
    """Chain from (rho2..rho_p) and (beta3..beta_p); rho1 is derived.

    This is the parametrisation of the polyspectra: every beta in (0, pi)
    gives a valid chain.
    """
    rho_tail = [float(r) for r in rho_tail]
    betas = [float(b) for b in betas]
    p = len(rho_tail) + 1
    if p < 3 or len(betas) != p - 2:
        raise InvalidInputError("need rho2..rho_p and beta3..beta_p")
    _check_sides(*rho_tail)
    if p == 3:
        t = triangle_from_two_sides_angle(rho_tail[0], rho_tail[1], betas[0])
        return MultilateralChain(3, (t.rho1, *rho_tail), (), (t,))
    sides = [1.0] + rho_tail  # placeholder rho1, replaced below
    kappa, tris = _fold_back(sides, betas[::-1][:-1], DegenerateGeometryError)
    t1 = triangle_from_two_sides_angle(rho_tail[0], kappa[1], betas[0])
    tris[1] = t1
    return MultilateralChain(
        p, (t1.rho1, *rho_tail), tuple(kappa[k] for k in range(1, p - 2)),
        tuple(tris[k] for k in range(1, p - 1)),
    )
