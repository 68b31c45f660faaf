"""Closed forms for int_0^inf prod_k J_{l_k}(rho_k lam) lam dlam.

The last factor always carries the order l_1 + ... + l_{p-1}.  For three
factors the integral is elementary in the triangle angles; for four it is a
single angular integral over the quadrilateral diagonal, and for p factors a
(p-3)-fold nested integral over the fold angles of the multilateral.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .bessel import besselj, breakpoint_gauss, gauss_legendre
from .errors import DegenerateGeometryError, InvalidInputError, UnsupportedOrderError
from .geometry import classify_triangle, third_side, triangle_angles, triangle_from_sides

MAX_P = 7


def _positive(*sides):
    for s in sides:
        if not (math.isfinite(s) and s > 0):
            raise InvalidInputError(f"sides must be finite and positive, got {s}")


def triple_bessel(l1: int, l2: int, rho1: float, rho2: float, rho3: float) -> float:
    """int J_l1(rho1 lam) J_l2(rho2 lam) J_{l1+l2}(rho3 lam) lam dlam.

    Equals cos(l1 g1 - l2 g3) / (pi rho2 rho3 sin g3) on a strict triangle and
    0 when the sides do not form one.
    """
    _positive(rho1, rho2, rho3)
    kind = classify_triangle(rho1, rho2, rho3)
    if kind == "invalid":
        return 0.0
    if kind == "degenerate":
        raise DegenerateGeometryError("collinear sides: the integral diverges")
    t = triangle_from_sides(rho1, rho2, rho3)
    return math.cos(l1 * t.gamma1 - l2 * t.gamma3) / (math.pi * rho2 * rho3 * math.sin(t.gamma3))


def angular_identity_residual(l1: int, l2: int, rho2: float, rho3: float, lam: float,
                              n: int = 200) -> float:
    """|int_0^pi cos(l1 g1 - l2 g3) J_l1(lam rho1) dg3 - pi J_l2(lam rho2) J_{l1+l2}(lam rho3)|.

    rho1 and g1 vary with g3 through the triangle (rho2, rho3, g3).  The
    integrand is smooth and periodic, so Gauss-Legendre converges fast.
    """
    _positive(rho2, rho3)
    t, w = gauss_legendre(n)
    g3 = 0.5 * math.pi * (t + 1.0)
    w = 0.5 * math.pi * w
    rho1 = third_side(rho2, rho3, g3)
    g1 = np.arctan2(rho2 * np.sin(g3), rho3 - rho2 * np.cos(g3))
    lhs = np.sum(w * np.cos(l1 * g1 - l2 * g3) * besselj(l1, lam * rho1))
    rhs = math.pi * besselj(l2, lam * rho2) * besselj(l1 + l2, lam * rho3)
    return float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# four factors


def _quad_core(l1, l2, l3, rho1, rho2, rho3, rho4, n_theta=256):
    """Vectorised over rho4 (array).  Returns the quad integral for each.

    With t = kappa^2 the Jacobians of both triangles combine into
    dt / sqrt(P1(t) P2(t)), where P1, P2 are the Heron quadratics.  The
    substitution t = mid + half cos(theta) over the intersection of the two
    windows removes the inner square-root pair, leaving a bounded integrand.
    """
    rho4 = np.atleast_1d(np.asarray(rho4, dtype=float))
    a1, b1 = (rho1 - rho2) ** 2, (rho1 + rho2) ** 2
    a2, b2 = (rho3 - rho4) ** 2, (rho3 + rho4) ** 2
    lo = np.maximum(a1, a2)
    hi = np.minimum(b1, b2)
    lo_out = np.minimum(a1, a2)
    hi_out = np.maximum(b1, b2)
    ok = hi > lo
    out = np.zeros_like(rho4)
    if not ok.any():
        return out
    # graded nodes cluster at theta = 0, pi where the outer factor may be nearly singular
    th, wt = breakpoint_gauss([0.0, math.pi], max(1, n_theta // 8), order=8)
    lo, hi, lo_out, hi_out = lo[ok], hi[ok], lo_out[ok], hi_out[ok]
    r4 = rho4[ok]
    mid = 0.5 * (lo + hi)[:, None]
    half = 0.5 * (hi - lo)[:, None]
    tt = mid + half * np.cos(th)[None, :]
    kappa = np.sqrt(tt)
    alpha1, _, beta3 = triangle_angles(rho1, rho2, kappa)
    alpha2, _, gamma4 = triangle_angles(kappa, rho3, r4[:, None])
    num = np.cos((l1 + l2) * alpha2 - l3 * gamma4) * np.cos(l1 * alpha1 - l2 * beta3)
    den = np.sqrt(np.maximum(tt - lo_out[:, None], 0.0) * np.maximum(hi_out[:, None] - tt, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        integrand = np.where(den > 0, num / den, 0.0)
    integrand = np.nan_to_num(integrand, nan=0.0)
    out[ok] = (2.0 / math.pi**2) * integrand @ wt
    return out


def quad_bessel(l1: int, l2: int, l3: int, rho1: float, rho2: float, rho3: float, rho4: float,
                panels: int = 64) -> float:
    """int J_l1(rho1 lam) J_l2(rho2 lam) J_l3(rho3 lam) J_{l1+l2+l3}(rho4 lam) lam dlam.

    Evaluates (1/pi^2) int_0^pi cos((l1+l2) a2 - l3 g4) cos(l1 a1 - l2 b3) /
    (rho2 kappa sin b3) dg4, where kappa(g4) closes the triangle (rho3, rho4)
    and the integrand vanishes when (rho1, rho2, kappa) is not a triangle.
    Returns 0 when no quadrilateral exists.
    """
    if panels < 64:
        raise InvalidInputError("panels must be at least 64")
    _positive(rho1, rho2, rho3, rho4)
    return float(_quad_core(l1, l2, l3, rho1, rho2, rho3, rho4, n_theta=4 * panels)[0])


# ---------------------------------------------------------------------------
# p factors


def _break_sums(sides):
    """All |+-s1 +- s2 ...|: diagonal lengths where an inner integral is singular."""
    sides = list(sides)
    vals = set()
    for signs in itertools.product((1.0, -1.0), repeat=len(sides) - 1):
        vals.add(abs(sides[0] + sum(s * x for s, x in zip(signs, sides[1:]))))
    return sorted(vals)


def _multi(orders, sides, kappa_last, panels):
    """Integral for sides[:-1] + (kappa_last,), vectorised over kappa_last."""
    p = len(sides)
    if p == 4:
        l1, l2, l3 = orders
        return _quad_core(l1, l2, l3, sides[0], sides[1], sides[2], kappa_last, n_theta=4 * panels)
    # peel the last two factors: rho_{p-1} and the closing side kappa_last
    inner_sides = sides[: p - 2]
    inner_orders = orders[: p - 2]
    lsum_inner = sum(inner_orders)
    l_prev = orders[p - 2]
    rho_prev = sides[p - 2]
    breaks = _break_sums(inner_sides)
    out = np.zeros(np.shape(kappa_last))
    for idx, kl in enumerate(np.atleast_1d(kappa_last)):
        # gamma at which the diagonal hits a singular length
        gb = [0.0, math.pi]
        for s in breaks:
            c = (rho_prev**2 + kl**2 - s * s) / (2 * rho_prev * kl)
            if -1 < c < 1:
                gb.append(math.acos(c))
        g, w = breakpoint_gauss(gb, max(2, panels // 8), order=8)
        kappa = third_side(rho_prev, kl, g)
        # alpha is opposite rho_prev in (kappa, rho_prev, kl); gamma is between rho_prev and kl
        alpha = np.arctan2(rho_prev * np.sin(g), kl - rho_prev * np.cos(g))
        inner = _multi(inner_orders, inner_sides + [None], kappa, panels)
        val = np.sum(w * np.cos(lsum_inner * alpha - l_prev * g) * inner) / math.pi
        out.flat[idx] = val
    return out


def multi_bessel(orders, sides, panels: int = 48) -> float:
    """int prod_{k<p} J_{l_k}(rho_k lam) J_{sum l}(rho_p lam) lam dlam for 4 <= p <= 7.

    ``orders`` holds l_1..l_{p-1}.  The last two factors are combined with
    the addition theorem into one factor of the fold diagonal, reducing p by
    one per nested angular integral; the four-factor base is
    :func:`quad_bessel`.
    """
    orders = [int(o) for o in orders]
    sides = [float(s) for s in sides]
    p = len(sides)
    if p < 4 or p > MAX_P:
        raise UnsupportedOrderError(f"p={p} outside 4..{MAX_P}")
    if len(orders) != p - 1:
        raise InvalidInputError(f"need {p - 1} orders for {p} sides")
    if panels < 48:
        raise InvalidInputError("panels must be at least 48")
    _positive(*sides)
    if 2 * max(sides) >= sum(sides):
        return 0.0
    if p == 4:
        return float(_quad_core(*orders, *sides[:3], sides[3], n_theta=4 * max(panels, 64))[0])
    return float(_multi(orders, sides[:-1] + [None], np.array([sides[-1]]), max(panels, 64))[0])
