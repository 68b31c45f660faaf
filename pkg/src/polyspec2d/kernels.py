"""Transformation kernels between polyspectra and cumulant functions.

Every kernel here is a truncated series in angular orders.  The truncation
L defaults to an adaptive choice: start at ceil(max rho*r) + 20 and grow by
10 until two successive values differ by less than 1e-12.

Conventions for the location side: x1 = 0 and x_k = r_k (cos phi_k, sin phi_k)
with psi_k = phi_k - phi_p.  For the wave-number side the chain of
:func:`polyspec2d.geometry.chain_from_angles` is used.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .bessel import MAX_ORDER, besselj, besselj_signed_table, besselj_table
from .errors import InvalidInputError, TruncationError, UnsupportedOrderError
from .geometry import chain_from_angles, triangle_from_sides

ADAPT_STEP = 10
ADAPT_TOL = 1e-12


def truncation_floor(*products) -> int:
    """ceil(max rho*r) + 20, the analytic floor for every series."""
    return int(math.ceil(max(float(np.max(p)) for p in products))) + 20


def _resolve(evaluate, floor, L, max_order=MAX_ORDER):
    """Evaluate at a fixed L, or adaptively from the floor."""
    if L is not None:
        L = int(L)
        if L < floor:
            raise InvalidInputError(f"L={L} below the truncation floor {floor}")
        return evaluate(L)
    if floor + ADAPT_STEP > max_order:
        raise TruncationError(f"truncation floor {floor} exceeds the supported order")
    prev = evaluate(floor)
    L = floor
    while L + ADAPT_STEP <= max_order:
        L += ADAPT_STEP
        cur = evaluate(L)
        if np.max(np.abs(cur - prev)) < ADAPT_TOL:
            return cur
        prev = cur
    raise TruncationError("kernel series did not settle below the maximum order")


# ---------------------------------------------------------------------------
# T3


def t3_kernel(eta, rho2, rho3, phi, r2, r3, L: int | None = None):
    """sum_l cos(l phi) J_l(rho2 r2) J_l(rho3 r3) cos(l eta), broadcasting."""
    a = np.asarray(rho2, dtype=float) * np.asarray(r2, dtype=float)
    b = np.asarray(rho3, dtype=float) * np.asarray(r3, dtype=float)
    eta, phi = np.asarray(eta, dtype=float), np.asarray(phi, dtype=float)
    a, b, eta, phi = np.broadcast_arrays(a, b, eta, phi)

    def evaluate(n):
        ja = besselj_table(n, a)
        jb = besselj_table(n, b)
        ell = np.arange(n + 1).reshape((-1,) + (1,) * a.ndim)
        weight = np.where(ell == 0, 1.0, 2.0)
        return np.sum(weight * np.cos(ell * phi) * np.cos(ell * eta) * ja * jb, axis=0)

    out = _resolve(evaluate, truncation_floor(a, b), L)
    return float(out) if out.ndim == 0 else out


def t3_closed_form(eta, rho2, rho3, phi, r2, r3):
    """(J0(w-) + J0(w+)) / 2 with w+- = sqrt(a^2 + b^2 - 2ab cos(phi -+ eta))."""
    a = np.asarray(rho2, dtype=float) * np.asarray(r2, dtype=float)
    b = np.asarray(rho3, dtype=float) * np.asarray(r3, dtype=float)
    eta, phi = np.asarray(eta, dtype=float), np.asarray(phi, dtype=float)

    def w(angle):
        s = np.sin(0.5 * angle)
        return np.sqrt((a - b) ** 2 + 4 * a * b * s * s)

    out = 0.5 * (besselj(0, w(phi - eta)) + besselj(0, w(phi + eta)))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# T4 and Tp


def _t4_terms(rho2, rho3, rho4, gamma4, beta3, r2, r3, r4, n):
    chain = chain_from_angles((rho2, rho3, rho4), (beta3, gamma4))
    alpha2 = chain.triangles[1].gamma1
    ell = np.arange(-n, n + 1)
    j2 = besselj_signed_table(n, rho2 * r2)
    j3 = besselj_signed_table(n, rho3 * r3)
    j4 = besselj_signed_table(2 * n, rho4 * r4)
    l2, l3 = np.meshgrid(ell, ell, indexing="ij")
    amp = (j2[:, None] * j3[None, :] * j4[l2 + l3 + 2 * n]
           * np.cos(l2 * alpha2 - l3 * gamma4) * np.cos(l2 * beta3))
    return l2, l3, amp


def t4_kernel(rho2, rho3, rho4, gamma4, beta3, r2, r3, r4, psi2, psi3,
              L: int | None = None, form: str = "cos"):
    """Fourth-order kernel; ``form="complex"`` returns the e^{i(...)} sum."""
    if form not in ("cos", "complex"):
        raise InvalidInputError("form must be 'cos' or 'complex'")

    def evaluate(n):
        l2, l3, amp = _t4_terms(rho2, rho3, rho4, gamma4, beta3, r2, r3, r4, n)
        if form == "complex":
            return np.sum(np.exp(1j * (l2 * psi2 + l3 * psi3)) * amp)
        return np.sum(np.cos(l2 * psi2 + l3 * psi3) * amp)

    floor = truncation_floor(rho2 * r2, rho3 * r3, rho4 * r4)
    out = _resolve(evaluate, floor, L)
    return complex(out) if form == "complex" else float(out)


def _tp_transfer(rho, beta, r, psi, n):
    """Complex T_p by recursion over the partial sums L_k = l_2 + ... + l_k."""
    p = len(rho) + 1
    chain = chain_from_angles(rho, beta)
    alphas = chain.alphas  # alphas[k-1] is alpha_k
    betas = chain.betas  # betas[k-3] is beta_k
    ell = np.arange(-n, n + 1)
    # state: partial sums from -m..m, m grows by n each step
    state = np.ones(1, dtype=complex)
    m = 0
    for k in range(2, p):
        jk = besselj_signed_table(n, rho[k - 2] * r[k - 2])
        sums = np.arange(-m, m + 1)
        alpha = alphas[k - 2] if k > 2 else 0.0
        b_next = betas[k - 2]
        # factor[L_prev, l_k]
        factor = (np.exp(1j * ell * psi[k - 2]) * jk)[None, :] * np.cos(
            alpha * sums[:, None] - ell[None, :] * b_next)
        new = np.zeros(2 * (m + n) + 1, dtype=complex)
        contrib = state[:, None] * factor
        for i in range(sums.size):
            new[i: i + 2 * n + 1] += contrib[i]
        state, m = new, m + n
    jp = besselj_signed_table(m, rho[-1] * r[-1])
    return np.sum(state * jp)


def tp_kernel(rho, beta, r, psi, L: int | None = None, full_output: bool = False):
    """Order-p kernel T_p(rho_{2:p}, beta_{3:p} | r_{2:p}, psi_{2:p-1}).

    sum over l_2..l_{p-1} of J_{sum l}(rho_p r_p) prod_k e^{i l_k psi_k}
    J_{l_k}(rho_k r_k) cos(alpha_{k-1} (l_2 + ... + l_{k-1}) - l_k beta_{k+1}).
    The imaginary part cancels in conjugate pairs; ``full_output`` returns
    the complex sum so that can be checked.
    """
    rho = [float(v) for v in rho]
    beta = [float(v) for v in beta]
    r = [float(v) for v in r]
    psi = [float(v) for v in psi]
    p = len(rho) + 1
    if p < 3 or p > 6:
        raise UnsupportedOrderError(f"p={p} outside 3..6")
    if len(beta) != p - 2 or len(r) != p - 1 or len(psi) != p - 2:
        raise InvalidInputError("need rho_{2:p}, beta_{3:p}, r_{2:p}, psi_{2:p-1}")
    floor = truncation_floor(*(a * b for a, b in zip(rho, r)))
    out = _resolve(lambda n: _tp_transfer(rho, beta, r, psi, n), floor, L)
    return complex(out) if full_output else float(out.real)


def orientation_average(rho, beta, r, psi) -> float:
    """Independent oracle for T_p: the mean of exp(i sum x_k . omega_k) over
    all rotations and all 2^(p-2) triangle flips of the wave-number polygon.

    The rotation mean of exp(i Re(conj(z) e^{i theta})) is J0(|z|), so each
    flip contributes J0(|sum_k x_k conj(omega_k)|) in complex notation.
    """
    rho = [float(v) for v in rho]
    p = len(rho) + 1
    chain = chain_from_angles(rho, beta)
    sides = chain.sides
    diag = (sides[0],) + chain.diagonals + (sides[-1],)  # |P_k| for k = 1..p-1
    alphas = chain.alphas
    # locations: x_1 = 0, x_k at angle psi_k relative to x_p
    phis = list(psi) + [0.0]
    x = [0j] + [rk * np.exp(1j * ph) for rk, ph in zip(r, phis)]
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=p - 2):
        verts = [0j, complex(sides[0])]
        ang = 0.0
        for k in range(1, p - 1):
            ang += signs[k - 1] * alphas[k - 1]
            verts.append(diag[k] * np.exp(1j * ang))
        verts.append(0j)  # P_p closes the polygon at the origin
        omega = [verts[k] - verts[k - 1] for k in range(1, p + 1)]
        z = sum(xk * np.conj(wk) for xk, wk in zip(x, omega))
        total += besselj(0, abs(z))
    return total / 2 ** (p - 2)


# ---------------------------------------------------------------------------
# circle


def chord_map(R: float, phi2: float, phi3: float) -> tuple[float, float, float]:
    """Distances and angle of the triangle x1 x2 x3 on the circle of radius R.

    x1 sits at angle pi/2, x2 and x3 at phi2 and phi3.  Returns (r2, r3, phi)
    with r_k = |x_k - x1| = R sqrt(2 (1 - cos(pi/2 - phi_k))) and phi the
    angle between x2 - x1 and x3 - x1 (an inscribed angle).
    """
    x1 = complex(0.0, R)
    d2 = R * np.exp(1j * phi2) - x1
    d3 = R * np.exp(1j * phi3) - x1
    r2 = R * math.sqrt(max(0.0, 2 * (1 - math.cos(math.pi / 2 - phi2))))
    r3 = R * math.sqrt(max(0.0, 2 * (1 - math.cos(math.pi / 2 - phi3))))
    if abs(d2) == 0 or abs(d3) == 0:
        return r2, r3, 0.0
    phi = abs(math.remainder(np.angle(d3) - np.angle(d2), 2 * math.pi))
    return r2, r3, phi


def tr3_circle_kernel(R: float, rho1: float, rho2: float, rho3: float, phi2: float,
                      phi3: float, L: int | None = None) -> float:
    """sum_{k2,k3} cos(k2 (phi2 - pi/2) + k3 (phi3 - pi/2)) J_{k2+k3}(R rho1)
    J_k2(R rho2) J_k3(R rho3) cos(k2 g2 - k3 g1) for the triangle (rho1, rho2, rho3)."""
    if R <= 0:
        raise InvalidInputError("R must be positive")
    tri = triangle_from_sides(rho1, rho2, rho3)
    g1, g2 = tri.gamma1, tri.gamma2

    def evaluate(n):
        k = np.arange(-n, n + 1)
        j1 = besselj_signed_table(2 * n, R * rho1)
        j2 = besselj_signed_table(n, R * rho2)
        j3 = besselj_signed_table(n, R * rho3)
        k2, k3 = np.meshgrid(k, k, indexing="ij")
        amp = j1[k2 + k3 + 2 * n] * j2[:, None] * j3[None, :]
        ang = np.cos(k2 * (phi2 - math.pi / 2) + k3 * (phi3 - math.pi / 2))
        return np.sum(ang * amp * np.cos(k2 * g2 - k3 * g1))

    return float(_resolve(evaluate, truncation_floor(R * rho1, R * rho2, R * rho3), L))
