"""Integer-order Bessel functions of the first kind, Bessel quadrature and
the identity checks (Jacobi-Anger, Graf, Dirac closure) used as oracles.

``besselj_table`` is the workhorse: it returns J_0..J_n at every point of an
array in one sweep of Miller's backward recurrence, so kernels that need a
whole ladder of orders at the same argument pay for it once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGeometryError,
    InvalidInputError,
    OracleUnreliableError,
    UnsupportedOrderError,
)

MAX_ORDER = 512

# below this argument the ascending series has no cancellation to speak of
_SERIES_LIMIT = 2.0
_RESCALE = 1e200


def _check_order(order: int) -> int:
    order = int(order)
    if abs(order) > MAX_ORDER:
        raise UnsupportedOrderError(f"|order| = {abs(order)} exceeds {MAX_ORDER}")
    return order


def _series_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """Ascending series for 0 <= x <= _SERIES_LIMIT, orders 0..nmax."""
    out = np.empty((nmax + 1,) + x.shape)
    half = 0.5 * x
    q = -half * half
    with np.errstate(divide="ignore"):
        loghalf = np.log(half)
    for n in range(nmax + 1):
        # leading term (x/2)^n / n! in log space; underflows cleanly to 0
        if n == 0:
            lead = np.ones_like(x)
        else:
            lead = np.exp(n * loghalf - math.lgamma(n + 1))
        term = np.ones_like(x)
        total = np.ones_like(x)
        for k in range(1, 40):
            term = term * q / (k * (k + n))
            total = total + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        out[n] = lead * total
    return out


def _miller_start(nmax: int, xmax: float) -> int:
    m = max(nmax, int(math.ceil(xmax)))
    start = m + 20 + int(math.ceil(math.sqrt(60.0 * m)))
    return start + (start % 2)


def _miller_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """Miller backward recurrence normalised by J0 + 2*sum J_2k = 1."""
    start = _miller_start(nmax, float(x.max()))
    out = np.zeros((nmax + 1,) + x.shape)
    inv = 2.0 / x
    j_up = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        # j holds J_k (unnormalised), j_up holds J_{k+1}
        if k <= nmax:
            out[k] = j
        if k % 2 == 0:
            norm += 2.0 * j
        j_down = k * inv * j - j_up
        j_up, j = j, j_down
        big = np.abs(j) > _RESCALE
        if big.any():
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j = j * s
            j_up = j_up * s
            norm = norm * s
            out[: nmax + 1] *= s
    out[0] = j
    norm += j
    return out / norm


def besselj_table(nmax: int, x) -> np.ndarray:
    """J_0(x) .. J_nmax(x) for every element of ``x``.

    Returns an array of shape ``(nmax + 1,) + np.shape(x)``.
    """
    nmax = _check_order(nmax)
    if nmax < 0:
        raise InvalidInputError("nmax must be non-negative")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("Bessel argument must be finite")
    if np.any(x < 0):
        raise InvalidInputError("Bessel argument must be non-negative")
    flat = x.ravel()
    out = np.zeros((nmax + 1, flat.size))
    small = flat <= _SERIES_LIMIT
    if small.any():
        out[:, small] = _series_table(nmax, flat[small])
    if (~small).any():
        out[:, ~small] = _miller_table(nmax, flat[~small])
    return out.reshape((nmax + 1,) + x.shape)


def besselj_signed_table(lmax: int, x) -> np.ndarray:
    """J_l(x) for l = -lmax..lmax, indexed by ``l + lmax`` on axis 0."""
    pos = besselj_table(lmax, x)
    sign = np.where(np.arange(lmax + 1) % 2 == 0, 1.0, -1.0)
    sign = sign.reshape((-1,) + (1,) * (pos.ndim - 1))
    neg = (sign * pos)[1:][::-1]
    return np.concatenate([neg, pos], axis=0)


def besselj(order: int, x):
    """Bessel function of the first kind of integer order.

    Negative orders use J_{-n}(x) = (-1)^n J_n(x).  Scalar input gives a float.
    """
    order = _check_order(order)
    n = abs(order)
    scalar = np.ndim(x) == 0
    val = besselj_table(n, x)[n]
    if order < 0 and n % 2:
        val = -val
    return float(val) if scalar else val


def besselj_series_mp(order: int, x, dps: int = 50) -> float:
    """Ascending series in arbitrary precision; an oracle independent of
    the recurrence in :func:`besselj`."""
    import mpmath

    n = abs(int(order))
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        half = xm / 2
        term = half**n / mpmath.factorial(n)
        total = term
        k = 0
        while True:
            k += 1
            term = -term * half * half / (k * (k + n))
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps) * max(abs(total), mpmath.mpf(10) ** (-dps)):
                break
        val = float(total)
    if order < 0 and n % 2:
        val = -val
    return val


# ---------------------------------------------------------------------------
# identity residuals


def validate_jacobi_anger(rho: float, r: float, phi: float, eta: float, L: int) -> float:
    """|exp(i rho r cos(phi-eta)) - sum_{|l|<=L} i^l J_l(rho r) e^{il(phi-eta)}|."""
    x = rho * r
    ells = np.arange(-L, L + 1)
    jv = besselj_signed_table(L, x)
    series = np.sum((1j) ** (ells % 4) * jv * np.exp(1j * ells * (phi - eta)))
    return float(abs(np.exp(1j * x * math.cos(phi - eta)) - series))


def validate_graf(rho2: float, rho3: float, gamma3: float, ell1: int, L: int) -> float:
    """Residual of e^{i l1 g1} J_l1(rho1) = sum_m J_m(rho2) J_{m+l1}(rho3) e^{i m g3}."""
    from .geometry import triangle_from_two_sides_angle

    tri = triangle_from_two_sides_angle(rho2, rho3, gamma3)
    lhs = np.exp(1j * ell1 * tri.gamma1) * besselj(ell1, tri.rho1)
    lmax = L + abs(ell1)
    j2 = besselj_signed_table(lmax, rho2)
    j3 = besselj_signed_table(lmax, rho3)
    m = np.arange(-L, L + 1)
    rhs = np.sum(j2[m + lmax] * j3[m + ell1 + lmax] * np.exp(1j * m * gamma3))
    return float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# quadrature


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (cached)."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def composite_gauss(a: float, b: float, panels: int, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    t, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def breakpoint_gauss(breaks, n: int, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre over consecutive breakpoint intervals.

    Each interval is mapped through a smoothstep so that integrable
    endpoint singularities (log, inverse square root) at the breakpoints
    are flattened out.  ``n`` panels are used on every interval.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    nodes, weights = [], []
    u, wu = composite_gauss(0.0, 1.0, n, order)
    # smoothstep of degree 5: g'(0)=g'(1)=g''(0)=g''(1)=0
    g = u**3 * (10 - 15 * u + 6 * u**2)
    dg = 30 * u**2 * (1 - u) ** 2
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        nodes.append(a + (b - a) * g)
        weights.append((b - a) * dg * wu)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the regularised oscillatory oracle.

    The integral over [0, cutoff] is damped by exp(-eps * lam^2) for each
    eps in ``eps_ladder`` and the results are extrapolated to eps = 0.
    """

    cutoff: float = 200.0
    eps_ladder: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
    panel_count: int = 64
    rel_tol: float = 1e-3
    abs_tol: float = 5e-3

    def __post_init__(self):
        ladder = tuple(float(e) for e in self.eps_ladder)
        object.__setattr__(self, "eps_ladder", ladder)
        if self.cutoff <= 0:
            raise InvalidInputError("cutoff must be positive")
        if len(ladder) < 2 or any(e <= 0 for e in ladder):
            raise InvalidInputError("eps ladder needs at least two positive entries")
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise InvalidInputError("eps ladder must be strictly decreasing")
        if self.panel_count < 64:
            raise InvalidInputError("panel_count must be at least 64")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidInputError("tolerances must be positive")


@dataclass
class OracleResult:
    value: float
    estimates: list[float] = field(default_factory=list)
    extrapolants: list[float] = field(default_factory=list)


def _richardson(eps: np.ndarray, vals: np.ndarray) -> list[list[float]]:
    """Neville table for polynomial extrapolation in eps to eps = 0."""
    table = [list(vals)]
    for k in range(1, len(vals)):
        prev = table[-1]
        row = []
        for i in range(len(prev) - 1):
            e0, e1 = eps[i], eps[i + k]
            row.append((e0 * prev[i + 1] - e1 * prev[i]) / (e0 - e1))
        table.append(row)
    return table


def oscillatory_product_integral(orders, sides, config: QuadratureConfig | None = None,
                                 full_output: bool = False, max_extend: int = 10):
    """Regularised value of int_0^inf prod_k J_{orders[k]}(sides[k] lam) lam dlam.

    The integrand decays like lam^{1 - p/2} and is at best conditionally
    convergent, so it is damped by exp(-eps lam^2); the damped integrals are
    computed by composite Gauss-Legendre and extrapolated to eps = 0 with a
    Richardson table.  When successive linear extrapolants differ by more
    than ``max(10 * rel_tol * |value|, abs_tol / 10)`` the ladder is extended
    by halving eps (up to ``max_extend`` times) before :class:`OracleUnreliableError` is raised.

    Bessel values come from :func:`scipy.special.jv`, so the oracle does not
    share code with :func:`besselj`.
    """
    from scipy.special import jv

    config = config or QuadratureConfig()
    orders = [int(o) for o in orders]
    sides = [float(s) for s in sides]
    if len(orders) != len(sides) or len(orders) < 3:
        raise InvalidInputError("need matching orders/sides with at least 3 factors")
    if any(not (math.isfinite(s) and s > 0) for s in sides):
        raise InvalidInputError("sides must be positive")
    for o in orders:
        _check_order(o)
    if config.cutoff * max(sides) < 50:
        raise InvalidInputError("cutoff * max(side) must be at least 50")
    freq = sum(sides)
    nbase = len(config.eps_ladder)

    def damped(eps, cutoff, npan):
        lam, w = composite_gauss(0.0, cutoff, npan, order=10)
        prod = lam * w
        for o, s in zip(orders, sides):
            prod = prod * jv(o, s * lam)
        return np.array([np.sum(prod * np.exp(-e * lam * lam)) for e in eps])

    def evaluate(eps):
        # beyond this the smallest damping factor is below 1e-16
        cutoff = math.sqrt(37.0 / eps[-1])
        if len(eps) == nbase:
            cutoff = min(config.cutoff, cutoff)
        # resolve the fastest oscillation with ~4 panels per period
        panels = max(config.panel_count, int(math.ceil(cutoff * freq / (2 * math.pi) * 4)))
        vals = damped(eps, cutoff, panels)
        for _ in range(3):
            finer = damped(eps, cutoff, 2 * panels)
            done = np.max(np.abs(finer - vals)) <= 1e-3 * config.rel_tol * max(1.0, np.max(np.abs(finer)))
            vals, panels = finer, 2 * panels
            if done:
                break
        return vals

    eps = np.array(config.eps_ladder)
    for extension in range(max_extend + 1):
        vals = evaluate(eps)
        table = _richardson(eps[-nbase:], vals[-nbase:])
        linear = table[1]
        value = table[-1][0]
        spread = max(abs(a - b) for a, b in zip(linear, linear[1:])) if len(linear) > 1 else 0.0
        if spread <= max(10 * config.rel_tol * abs(value), 0.1 * config.abs_tol):
            break
        eps = np.append(eps, 0.5 * eps[-1])
    else:
        raise OracleUnreliableError(
            "eps extrapolation did not settle", estimates=list(vals), extrapolants=list(linear)
        )
    if full_output:
        return OracleResult(float(value), list(map(float, vals)), list(map(float, linear)))
    return float(value)


def hankel_transform(order: int, rho, values, r, rule: str = "trapezoid") -> float:
    """int J_order(rho r) f(rho) rho drho over the sampled support.

    ``rho`` must be ascending.  ``rule`` is ``"trapezoid"`` for uniform
    samples or ``"weights"`` when ``values`` already carries quadrature weights.
    """
    rho = np.asarray(rho, dtype=float)
    values = np.asarray(values, dtype=float)
    if rho.size == 0:
        raise InvalidInputError("empty grid")
    if rho.shape != values.shape:
        raise InvalidInputError("grid and values differ in shape")
    if np.any(np.diff(rho) <= 0):
        raise InvalidInputError("grid must be strictly ascending")
    if rho.size == 1:
        raise InvalidInputError("need at least two samples")
    integrand = besselj(order, rho * float(r)) * values * rho
    if rule == "weights":
        return float(np.sum(integrand))
    return float(np.trapezoid(integrand, rho))


def dirac_closure(ell: int, kappa: float, width: float, cutoff: float, n: int = 2000) -> float:
    """Pair a narrow bump at kappa with the truncated closure
    int_0^cutoff J_l(rho r) J_l(kappa r) r dr, integrated against b(rho) rho drho.

    The closure kernel tends to delta(rho - kappa) / kappa, so the pairing
    tends to b(kappa); the bump is scaled to b(kappa) = 1 and the value
    tends to 1 once cutoff * width is large.
    """
    if width <= 0 or kappa - width <= 0:
        raise InvalidInputError("bump must sit inside (0, inf)")
    rho, wr = composite_gauss(kappa - width, kappa + width, 64, order=8)
    u = (rho - kappa) / width
    bump = np.exp(1.0 - 1.0 / np.maximum(1e-300, 1 - u * u))
    r, w = composite_gauss(0.0, cutoff, max(64, int(cutoff * (kappa + width))), order=8)
    jk = besselj(ell, kappa * r)
    jr = besselj(ell, np.outer(rho, r))
    inner = jr @ (jk * r * w)
    return float(np.sum(inner * bump * rho * wr))


def truncation_order(x: float, tol: float = 1e-16) -> int:
    """Smallest n >= ceil(x) + 20 with |J_m(x)| < tol for all m >= n.

    J_m(x) decreases monotonically in m once m > x, so the first order
    below ``tol`` bounds the tail.
    """
    x = float(x)
    n = int(math.ceil(x)) + 20
    while n < MAX_ORDER and abs(besselj(n, x)) >= tol:
        n += 5
    return min(n, MAX_ORDER)
