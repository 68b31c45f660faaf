"""Maps between polyspectra and cumulant functions of an isotropic field.

Covariance and radial spectral measure form a Hankel pair

    C2(r) = 2 pi int J0(rho r) F(rho drho),   g(rho) = (1/2 pi) int J0(rho r) C2(r) r dr,

where a density is stored as g with F(rho drho) = g(rho) rho drho.

Higher orders use the kernels of :mod:`polyspec2d.kernels`.  Spectra of
order p live on grids over (rho_2..rho_p, beta_3..beta_p); the cumulant at
locations x_1 = 0, x_k = r_k e^{i phi_k} is

    C_p = 2^(p-1) pi int T_p S_p prod rho_k drho_k prod dbeta_k,

the constant being the 2 pi of the rotation times the 2^(p-2) triangle
flips that the angles beta in (0, pi) fold together.  All integrals are
evaluated by separable contraction over the grid, one wave-number pair
(rho_k, beta_{k+1}) at a time, with the partial order sums as state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import besselj, besselj_signed_table, besselj_table, truncation_order
from .errors import (
    DegenerateGeometryError,
    InvalidInputError,
    NotATriangleError,
    ResourceCapError,
    TruncationError,
    UnsupportedOrderError,
)
from .geometry import classify_triangle, third_side
from .gridio import Axis, GridContainer

DEFAULT_MAX_WORK = 5e10


# ---------------------------------------------------------------------------
# second order


@dataclass(eq=False)
class RadialSpectralMeasure:
    """Atoms (rho_j, mass_j) plus an optional density g on a quadrature axis.

    The measure is F(rho drho) = sum_j mass_j delta_{rho_j} + g(rho) rho drho.
    """

    atoms: tuple = ()
    density_axis: Axis | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        atoms = tuple((float(r), float(m)) for r, m in self.atoms)
        rhos = [a[0] for a in atoms]
        if any(r <= 0 or not math.isfinite(r) for r in rhos):
            raise InvalidInputError("atom positions must be positive")
        if any(m < 0 or not math.isfinite(m) for _, m in atoms):
            raise InvalidInputError("atom masses must be non-negative")
        if any(b <= a for a, b in zip(rhos, rhos[1:])):
            raise InvalidInputError("atom positions must be strictly ascending")
        self.atoms = atoms
        if (self.density_axis is None) != (self.density is None):
            raise InvalidInputError("density needs both an axis and values")
        if self.density is not None:
            self.density = np.asarray(self.density, dtype=float)
            if self.density.shape != (self.density_axis.count,):
                raise InvalidInputError("density length does not match its axis")
            if np.any(self.density < 0) or not np.all(np.isfinite(self.density)):
                raise InvalidInputError("density must be finite and non-negative")
            if self.density_axis.lo < 0:
                raise InvalidInputError("density axis must lie in rho >= 0")

    @property
    def atom_rho(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms])

    @property
    def atom_mass(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms])

    @property
    def rho_max(self) -> float:
        top = [a[0] for a in self.atoms]
        if self.density_axis is not None:
            top.append(self.density_axis.hi)
        return max(top, default=0.0)

    def total_mass(self) -> float:
        total = float(np.sum(self.atom_mass))
        if self.density is not None:
            ax = self.density_axis
            total += float(np.sum(ax.weights * self.density * ax.nodes))
        return total

    def integrate(self, func) -> np.ndarray:
        """int func(rho) F(rho drho); ``func`` maps an array of rho to an array
        whose leading axes broadcast against it (rho is the last axis)."""
        total = 0.0
        if self.atoms:
            total = total + np.sum(func(self.atom_rho) * self.atom_mass, axis=-1)
        if self.density is not None:
            ax = self.density_axis
            total = total + np.sum(func(ax.nodes) * (ax.weights * self.density * ax.nodes), axis=-1)
        return total


def cov_from_spectrum(F: RadialSpectralMeasure, r):
    """C2(r) = 2 pi int J0(rho r) F(rho drho)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidInputError("distances must be non-negative")
    out = 2 * math.pi * F.integrate(lambda rho: besselj(0, r[..., None] * rho))
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def spectrum_from_cov(r, c2, rho, weights=None, decay_tol: float = 1e-3):
    """g(rho) = (1/2 pi) int J0(rho r) C2(r) r dr over the sampled r.

    Without ``weights`` the trapezoid rule on the ascending samples is used.
    Raises :class:`TruncationError` when |C2| at the last sample exceeds
    ``decay_tol`` times its maximum.
    """
    r = np.asarray(r, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if r.ndim != 1 or r.size < 2 or c2.shape != r.shape:
        raise InvalidInputError("need matching 1-d samples with at least two points")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise InvalidInputError("r must be ascending and non-negative")
    scale = float(np.max(np.abs(c2)))
    if scale > 0 and abs(c2[-1]) > decay_tol * scale:
        raise TruncationError(
            f"covariance has not decayed: |C2(r_max)| = {abs(c2[-1]):.3g} vs max {scale:.3g}")
    if weights is None:
        h = np.diff(r)
        weights = np.zeros_like(r)
        weights[:-1] += 0.5 * h
        weights[1:] += 0.5 * h
    weights = np.asarray(weights, dtype=float)
    rho = np.asarray(rho, dtype=float)
    kern = besselj(0, rho[..., None] * r)
    out = (kern @ (c2 * r * weights)) / (2 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# spectral grids


def _check_angle_axis(ax: Axis):
    if ax.lo < 0 or ax.hi > math.pi + 1e-12:
        raise InvalidInputError(f"angle axis {ax.name!r} must lie in [0, pi]")


def _check_radial_axis(ax: Axis):
    if ax.lo < 0:
        raise InvalidInputError(f"radial axis {ax.name!r} must lie in [0, inf)")


@dataclass(eq=False)
class PolyspectrumGrid:
    """S_p on a product grid over (rho_2..rho_p, beta_3..beta_p).

    rho_1 and the fold diagonals are derived from the chain, so every grid
    point is a valid multilateral.
    """

    rhos: tuple
    betas: tuple
    values: np.ndarray

    def __post_init__(self):
        self.rhos = tuple(self.rhos)
        self.betas = tuple(self.betas)
        if len(self.rhos) < 2 or len(self.betas) != len(self.rhos) - 1:
            raise InvalidInputError("need rho_2..rho_p and beta_3..beta_p axes")
        for ax in self.rhos:
            _check_radial_axis(ax)
        for ax in self.betas:
            _check_angle_axis(ax)
        self.values = np.asarray(self.values, dtype=float)
        shape = tuple(a.count for a in self.rhos + self.betas)
        if self.values.shape != shape:
            raise InvalidInputError(f"values shape {self.values.shape} != {shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("spectrum values must be finite")

    @property
    def p(self) -> int:
        return len(self.rhos) + 1

    def sides(self) -> list[np.ndarray]:
        """(rho_1, ..., rho_p) broadcast over the grid."""
        p = self.p
        grids = np.meshgrid(*[a.nodes for a in self.rhos + self.betas], indexing="ij")
        rho = {k: grids[k - 2] for k in range(2, p + 1)}
        beta = {k: grids[p - 1 + k - 3] for k in range(3, p + 1)}
        kappa = rho[p]
        for k in range(p - 2, 0, -1):
            kappa = third_side(rho[k + 1], kappa, beta[k + 2])
        return [kappa] + [rho[k] for k in range(2, p + 1)]

    @classmethod
    def from_function(cls, func, rhos, betas):
        """Sample ``func(rho_1, ..., rho_p)`` over the grid."""
        grid = cls(rhos, betas, np.zeros(tuple(a.count for a in tuple(rhos) + tuple(betas))))
        grid.values = np.asarray(func(*grid.sides()), dtype=float)
        grid.__post_init__()
        return grid


@dataclass(eq=False)
class BispectrumGrid:
    """S_3 over (eta, rho2, rho3); rho1 follows from the law of cosines."""

    eta: Axis
    rho2: Axis
    rho3: Axis
    values: np.ndarray

    def __post_init__(self):
        _check_angle_axis(self.eta)
        _check_radial_axis(self.rho2)
        _check_radial_axis(self.rho3)
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.eta.count, self.rho2.count, self.rho3.count)
        if self.values.shape != shape:
            raise InvalidInputError(f"values shape {self.values.shape} != {shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("bispectrum values must be finite")

    def mesh(self):
        e, r2, r3 = np.meshgrid(self.eta.nodes, self.rho2.nodes, self.rho3.nodes, indexing="ij")
        return third_side(r2, r3, e), r2, r3, e

    @classmethod
    def from_function(cls, func, eta: Axis, rho2: Axis, rho3: Axis):
        """Sample ``func(rho1, rho2, rho3)``."""
        grid = cls(eta, rho2, rho3, np.zeros((eta.count, rho2.count, rho3.count)))
        r1, r2, r3, _ = grid.mesh()
        grid.values = np.asarray(func(r1, r2, r3), dtype=float)
        grid.__post_init__()
        return grid

    def as_polyspectrum(self) -> PolyspectrumGrid:
        return PolyspectrumGrid((self.rho2, self.rho3), (self.eta,),
                                np.transpose(self.values, (1, 2, 0)))

    def to_container(self) -> GridContainer:
        axes = (Axis("eta", self.eta.lo, self.eta.hi, self.eta.count, self.eta.rule),
                Axis("rho2", self.rho2.lo, self.rho2.hi, self.rho2.count, self.rho2.rule),
                Axis("rho3", self.rho3.lo, self.rho3.hi, self.rho3.count, self.rho3.rule))
        return GridContainer(axes, self.values, {"quantity": "bispectrum"})

    @classmethod
    def from_container(cls, c: GridContainer) -> "BispectrumGrid":
        return cls(c.axis("eta"), c.axis("rho2"), c.axis("rho3"), np.real(c.values))


@dataclass(eq=False)
class TrispectrumGrid:
    """S_4 over (rho2, rho3, rho4, gamma4, beta3)."""

    rho2: Axis
    rho3: Axis
    rho4: Axis
    gamma4: Axis
    beta3: Axis
    values: np.ndarray

    def __post_init__(self):
        for ax in (self.rho2, self.rho3, self.rho4):
            _check_radial_axis(ax)
        for ax in (self.gamma4, self.beta3):
            _check_angle_axis(ax)
        self.values = np.asarray(self.values, dtype=float)
        shape = tuple(a.count for a in self.axes)
        if self.values.shape != shape:
            raise InvalidInputError(f"values shape {self.values.shape} != {shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("trispectrum values must be finite")

    @property
    def axes(self) -> tuple[Axis, ...]:
        return (self.rho2, self.rho3, self.rho4, self.gamma4, self.beta3)

    def invariants(self):
        """(rho1, rho2, rho3, rho4, kappa) broadcast over the grid."""
        r2, r3, r4, g4, b3 = np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")
        kappa = third_side(r3, r4, g4)
        return third_side(r2, kappa, b3), r2, r3, r4, kappa

    @classmethod
    def from_function(cls, func, rho2, rho3, rho4, gamma4, beta3):
        """Sample ``func(rho1, rho2, rho3, rho4, kappa)``."""
        axes = (rho2, rho3, rho4, gamma4, beta3)
        grid = cls(*axes, np.zeros(tuple(a.count for a in axes)))
        grid.values = np.asarray(func(*grid.invariants()), dtype=float)
        grid.__post_init__()
        return grid

    def as_polyspectrum(self) -> PolyspectrumGrid:
        return PolyspectrumGrid((self.rho2, self.rho3, self.rho4), (self.beta3, self.gamma4),
                                np.transpose(self.values, (0, 1, 2, 4, 3)))

    def to_container(self) -> GridContainer:
        names = ("rho2", "rho3", "rho4", "gamma4", "beta3")
        axes = tuple(Axis(n, a.lo, a.hi, a.count, a.rule) for n, a in zip(names, self.axes))
        return GridContainer(axes, self.values, {"quantity": "trispectrum"})

    @classmethod
    def from_container(cls, c: GridContainer) -> "TrispectrumGrid":
        names = ("rho2", "rho3", "rho4", "gamma4", "beta3")
        return cls(*[c.axis(n) for n in names], np.real(c.values))


# ---------------------------------------------------------------------------
# chain contraction


def _chain_plan(grid: PolyspectrumGrid, r, max_work):
    p = grid.p
    xmax = max(a.hi * float(rk) for a, rk in zip(grid.rhos, r))
    nl = truncation_order(xmax)
    n = [a.count for a in grid.rhos]
    m = [a.count for a in grid.betas]
    nell = 2 * nl + 1
    rest = int(np.prod(n[1:])) * int(np.prod(m[1:]))
    work = nell * n[0] * m[0] * rest
    for k in range(3, p):
        rest = int(np.prod(n[k - 1:])) * int(np.prod(m[k - 1:]))
        states = 2 * (k - 2) * nl + 1
        work += states * nell * n[k - 2] * m[k - 2] * rest * 4
    if work > max_work:
        raise ResourceCapError(f"estimated work {work:.3g} exceeds the cap {max_work:.3g}")
    return nl


def _chain_transform(grid: PolyspectrumGrid, r, psi, nl):
    """int T_p S_p prod rho drho prod dbeta (without the 2^(p-1) pi)."""
    p = grid.p
    # interleave to (rho2, beta3, rho3, beta4, ..., rho_{p-1}, beta_p, rho_p)
    perm = []
    for k in range(p - 2):
        perm += [k, p - 1 + k]
    perm.append(p - 2)
    S = np.transpose(grid.values, perm)
    rho = [a.nodes for a in grid.rhos]
    rw = [a.weights for a in grid.rhos]
    beta = [a.nodes for a in grid.betas]
    bw = [a.weights for a in grid.betas]

    # diagonals kappa_j (j = p-2 .. 1) on the tail axes, kappa_{p-2} = rho_p
    kappa = {p - 2: rho[p - 2]}
    for k in range(p - 2, 1, -1):
        nd = kappa[k].ndim
        rk = rho[k - 1].reshape((-1, 1) + (1,) * nd)
        bk = beta[k - 1].reshape((1, -1) + (1,) * nd)
        kappa[k - 1] = third_side(rk, kappa[k][None, None], bk)

    ell = np.arange(-nl, nl + 1)

    def pair_matrices(idx, trig):
        jk = besselj_signed_table(nl, rho[idx] * r[idx])
        radial = np.exp(1j * ell * psi[idx])[:, None] * jk * (rho[idx] * rw[idx])[None, :]
        angular = trig(ell[:, None] * beta[idx][None, :]) * bw[idx][None, :]
        return (radial[:, :, None] * angular[:, None, :]).reshape(ell.size, -1)

    # k = 2: alpha_1 carries an empty order sum
    mc = pair_matrices(0, np.cos)
    A = (mc @ S.reshape(mc.shape[1], -1)).reshape((ell.size,) + S.shape[2:])
    m = nl
    for k in range(3, p):
        idx = k - 2
        kap = kappa[k - 1]
        nd = kap.ndim
        rk = rho[idx].reshape((-1, 1) + (1,) * nd)
        bk = beta[idx].reshape((1, -1) + (1,) * nd)
        # alpha_{k-1}: angle opposite rho_k in the triangle (kappa_{k-2}, rho_k, kappa_{k-1})
        alpha = np.arctan2(rk * np.sin(bk), kap[None, None] - rk * np.cos(bk))
        mc = pair_matrices(idx, np.cos)
        ms = pair_matrices(idx, np.sin)
        q = mc.shape[1]
        tail = A.shape[3:]
        new = np.zeros((2 * (m + nl) + 1,) + tail, dtype=complex)
        for i, lsum in enumerate(range(-m, m + 1)):
            a = A[i]
            if not np.any(a):
                continue
            ca = (np.cos(alpha * lsum) * a).reshape(q, -1)
            sa = (np.sin(alpha * lsum) * a).reshape(q, -1)
            new[i: i + ell.size] += (mc @ ca + ms @ sa).reshape((ell.size,) + tail)
        A, m = new, m + nl
    jp = besselj_signed_table(m, rho[p - 2] * r[p - 2])
    return float(np.real(np.sum(A * jp * (rho[p - 2] * rw[p - 2])[None, :])))


def cum_p_from_spectrum_p(p: int, spectrum, r, psi, max_work: float = DEFAULT_MAX_WORK) -> float:
    """C_p(r_2..r_p, psi_2..psi_{p-1}) from an order-p spectrum grid, p in {3, 4, 5}.

    ``spectrum`` is a :class:`PolyspectrumGrid` (or a bispectrum/trispectrum
    grid for p = 3/4).  x_1 = 0, x_k = r_k e^{i phi_k} and psi_k = phi_k - phi_p.
    """
    if p not in (3, 4, 5):
        raise UnsupportedOrderError(f"p={p} outside 3..5")
    if isinstance(spectrum, (BispectrumGrid, TrispectrumGrid)):
        spectrum = spectrum.as_polyspectrum()
    if spectrum.p != p:
        raise InvalidInputError(f"spectrum has order {spectrum.p}, expected {p}")
    r = [float(v) for v in r]
    psi = [float(v) for v in psi]
    if len(r) != p - 1 or len(psi) != p - 2 or any(v < 0 for v in r):
        raise InvalidInputError("need r_2..r_p >= 0 and psi_2..psi_{p-1}")
    nl = _chain_plan(spectrum, r, max_work)
    return 2 ** (p - 1) * math.pi * _chain_transform(spectrum, r, psi, nl)


def tricov_from_trispectrum(S4: TrispectrumGrid, r2, r3, r4, psi2, psi3,
                            max_work: float = DEFAULT_MAX_WORK) -> float:
    """C_4(r2, r3, r4, psi2, psi3) = 8 pi int T_4 S_4 prod rho drho dgamma4 dbeta3."""
    return cum_p_from_spectrum_p(4, S4, (r2, r3, r4), (psi2, psi3), max_work)


# ---------------------------------------------------------------------------
# third order, separable in the angular order


def _distance_angle(r1, r2, r3) -> float:
    """Angle between x2 and x3 for |x2| = r2, |x3| = r3, |x2 - x3| = r1."""
    for v in (r1, r2, r3):
        if not (math.isfinite(v) and v >= 0):
            raise InvalidInputError("distances must be finite and non-negative")
    if r2 == 0 or r3 == 0:
        return 0.0
    if r1 > 0 and classify_triangle(r1, r2, r3) == "invalid":
        raise NotATriangleError(f"distances ({r1}, {r2}, {r3}) do not form a triangle")
    c = (r2 * r2 + r3 * r3 - r1 * r1) / (2 * r2 * r3)
    return math.acos(min(1.0, max(-1.0, c)))


def _order_weights(nl):
    ell = np.arange(nl + 1)
    return ell, np.where(ell == 0, 1.0, 2.0)


def bicov_grid(S3: BispectrumGrid, phi: Axis, r2: Axis, r3: Axis) -> GridContainer:
    """C_3 over (phi, r2, r3): 4 pi int T_3 S_3 deta rho2 drho2 rho3 drho3."""
    nl = truncation_order(max(S3.rho2.hi * r2.hi, S3.rho3.hi * r3.hi))
    ell, c = _order_weights(nl)
    # angular moments of S over eta
    ang = np.cos(ell[:, None] * S3.eta.nodes[None, :]) * S3.eta.weights[None, :]
    s_hat = np.tensordot(ang, S3.values, axes=(1, 0))
    b2 = besselj_table(nl, np.outer(r2.nodes, S3.rho2.nodes)) * (S3.rho2.nodes * S3.rho2.weights)
    b3 = besselj_table(nl, np.outer(r3.nodes, S3.rho3.nodes)) * (S3.rho3.nodes * S3.rho3.weights)
    m = np.einsum("lar,lrs,lbs->lab", b2, s_hat, b3, optimize=True)
    outer = c[:, None] * np.cos(ell[:, None] * phi.nodes[None, :])
    values = 4 * math.pi * np.tensordot(outer, m, axes=(0, 0))
    axes = (Axis("phi", phi.lo, phi.hi, phi.count, phi.rule),
            Axis("r2", r2.lo, r2.hi, r2.count, r2.rule),
            Axis("r3", r3.lo, r3.hi, r3.count, r3.rule))
    return GridContainer(axes, values, {"quantity": "bicovariance", "order": 3})


def bicov_from_bispectrum(S3: BispectrumGrid, r1: float, r2: float, r3: float) -> float:
    """C_3 at the location triangle with sides (r1, r2, r3); r1 = |x2 - x3|."""
    phi = _distance_angle(r1, r2, r3)
    out = bicov_grid(S3, Axis.point("phi", phi), Axis.point("r2", r2), Axis.point("r3", r3))
    return float(out.values[0, 0, 0])


def bispectrum_grid(C3: GridContainer, eta: Axis, rho2: Axis, rho3: Axis) -> BispectrumGrid:
    """S_3 over (eta, rho2, rho3) = (1 / 4 pi^3) int T_3 C_3 dphi r2 dr2 r3 dr3."""
    phi, r2, r3 = C3.axis("phi"), C3.axis("r2"), C3.axis("r3")
    values = np.real(C3.values)
    nl = truncation_order(max(rho2.hi * r2.hi, rho3.hi * r3.hi))
    ell, c = _order_weights(nl)
    ang = np.cos(ell[:, None] * phi.nodes[None, :]) * phi.weights[None, :]
    c_hat = np.tensordot(ang, values, axes=(1, 0))
    b2 = besselj_table(nl, np.outer(rho2.nodes, r2.nodes)) * (r2.nodes * r2.weights)
    b3 = besselj_table(nl, np.outer(rho3.nodes, r3.nodes)) * (r3.nodes * r3.weights)
    m = np.einsum("lar,lrs,lbs->lab", b2, c_hat, b3, optimize=True)
    outer = c[:, None] * np.cos(ell[:, None] * eta.nodes[None, :])
    out = np.tensordot(outer, m, axes=(0, 0)) / (4 * math.pi**3)
    return BispectrumGrid(eta, rho2, rho3, out)


def bispectrum_from_bicov(C3: GridContainer, rho1: float, rho2: float, rho3: float) -> float:
    """S_3 at the wave-number triangle (rho1, rho2, rho3)."""
    for v in (rho1, rho2, rho3):
        if not (math.isfinite(v) and v > 0):
            raise InvalidInputError("wave numbers must be positive")
    kind = classify_triangle(rho1, rho2, rho3)
    if kind == "invalid":
        raise NotATriangleError(f"({rho1}, {rho2}, {rho3}) is not a triangle")
    if kind == "degenerate":
        raise DegenerateGeometryError(f"({rho1}, {rho2}, {rho3}) is collinear")
    eta = _distance_angle(rho1, rho2, rho3)
    out = bispectrum_grid(C3, Axis.point("eta", eta), Axis.point("rho2", rho2),
                          Axis.point("rho3", rho3))
    return float(out.values[0, 0, 0])


# ---------------------------------------------------------------------------
# reference solution


def gaussian_product_cumulant(a: float, points) -> float:
    """Exact C_p for S_p = prod_{k=1}^p exp(-a rho_k^2).

    With delta(sum omega) = (2 pi)^-2 int e^{i lam . sum omega} dlam every
    factor becomes a Gaussian Fourier transform, and the lam integral is
    Gaussian as well.  ``points`` is a (p, 2) array of locations.
    """
    x = np.asarray(points, dtype=float)
    p = x.shape[0]
    spread = np.sum(x * x) - np.sum(np.sum(x, axis=0) ** 2) / p
    return float((2 * math.pi) ** -2 * (math.pi / a) ** p * (4 * math.pi * a / p)
                 * math.exp(-spread / (4 * a)))
