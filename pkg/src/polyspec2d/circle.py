"""Spectra of an isotropic field restricted to a circle of radius R.

On the circle X_R(phi) = sum_l e^{i l phi} Z_{R,l}.  The coefficients are
uncorrelated with

    f_{R,l} = E|Z_{R,l}|^2 = 2 pi int J_l(R rho)^2 F(rho drho),

so that sum_l e^{i l dphi} f_{R,l} reproduces the planar covariance at the
chord distance (addition theorem).  Third-order cumulants vanish unless the
orders sum to zero and

    B_{l2,l3} = Cum(Z_{R,-l2-l3}, Z_{R,l2}, Z_{R,l3})
              = 4 pi int J_{l2+l3}(R rho1) J_{l2}(R rho2) J_{l3}(R rho3)
                       cos(l2 g2 - l3 g1) S3 deta rho2 drho2 rho3 drho3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import besselj, besselj_signed_table, besselj_table, truncation_order
from .errors import InvalidInputError
from .geometry import triangle_angles
from .gridio import Axis, GridContainer
from .kernels import chord_map
from .transforms import BispectrumGrid, RadialSpectralMeasure, cov_from_spectrum


def _check_radius(R):
    if not (math.isfinite(R) and R > 0):
        raise InvalidInputError("R must be positive")


@dataclass(eq=False)
class CircleSpectrum:
    """f_{R,l} for l = -L..L, stored at index l + L."""

    R: float
    f: np.ndarray

    def __post_init__(self):
        _check_radius(self.R)
        self.f = np.asarray(self.f, dtype=float)
        if self.f.ndim != 1 or self.f.size % 2 != 1:
            raise InvalidInputError("f must have odd length 2L + 1")
        if np.any(self.f < 0):
            raise InvalidInputError("circle spectrum must be non-negative")

    @property
    def L(self) -> int:
        return (self.f.size - 1) // 2

    def __getitem__(self, ell: int) -> float:
        if abs(ell) > self.L:
            raise InvalidInputError(f"order {ell} beyond L={self.L}")
        return float(self.f[ell + self.L])

    def covariance(self, dphi):
        """sum_l e^{i l dphi} f_l (real by parity)."""
        ell = np.arange(-self.L, self.L + 1)
        dphi = np.asarray(dphi, dtype=float)
        out = np.cos(np.multiply.outer(dphi, ell)) @ self.f
        return float(out) if out.ndim == 0 else out

    def to_container(self) -> GridContainer:
        ax = Axis("ell", -self.L, self.L, self.f.size, "uniform")
        return GridContainer((ax,), self.f, {"quantity": "circle_spectrum", "R": self.R})

    @classmethod
    def from_container(cls, c: GridContainer) -> "CircleSpectrum":
        return cls(float(c.meta.get("R", 0.0)), np.real(c.values))


def circle_spectrum(F: RadialSpectralMeasure, R: float, L: int) -> CircleSpectrum:
    """f_{R,l} = 2 pi int J_l(R rho)^2 F(rho drho) for |l| <= L."""
    _check_radius(R)
    if L < 0:
        raise InvalidInputError("L must be non-negative")
    half = 2 * math.pi * F.integrate(lambda rho: besselj_table(L, R * rho) ** 2)
    half = np.broadcast_to(np.asarray(half, dtype=float), (L + 1,))
    return CircleSpectrum(R, np.concatenate([half[:0:-1], half]))


def circle_cov_consistency(F: RadialSpectralMeasure, R: float, dphi: float,
                           L: int | None = None) -> float:
    """|sum_m e^{i m dphi} f_{R,m} - C2(chord)| with chord = R sqrt(2 (1 - cos dphi)).

    ``L`` defaults to ceil(R rho_max) + 30.
    """
    if L is None:
        L = int(math.ceil(R * F.rho_max)) + 30
    spec = circle_spectrum(F, R, L)
    chord = R * math.sqrt(max(0.0, 2 * (1 - math.cos(dphi))))
    return abs(spec.covariance(dphi) - cov_from_spectrum(F, chord))


# ---------------------------------------------------------------------------
# third order


@dataclass(eq=False)
class CircleBicoefficient:
    """B_{l2,l3} for |l2|, |l3| <= L, stored at [l2 + L, l3 + L]."""

    R: float
    values: np.ndarray

    @property
    def L(self) -> int:
        return (self.values.shape[0] - 1) // 2

    def __getitem__(self, key) -> complex:
        l2, l3 = key
        if max(abs(l2), abs(l3)) > self.L:
            raise InvalidInputError(f"orders {key} beyond L={self.L}")
        return complex(self.values[l2 + self.L, l3 + self.L])


def _plane_nodes(S3: BispectrumGrid):
    rho1, rho2, rho3, _ = S3.mesh()
    g1, g2, _ = triangle_angles(rho1, rho2, rho3)
    w = (S3.eta.weights[:, None, None] * (S3.rho2.weights * S3.rho2.nodes)[None, :, None]
         * (S3.rho3.weights * S3.rho3.nodes)[None, None, :])
    keep = np.isfinite(g1) & np.isfinite(g2) & (S3.values != 0)
    return (rho1[keep], rho2[keep], rho3[keep], g1[keep], g2[keep],
            (w * S3.values)[keep])


def circle_bicoefficients(S3: BispectrumGrid, R: float, L: int | None = None,
                          chunk: int = 4096) -> CircleBicoefficient:
    """All B_{l2,l3} with |l2|, |l3| <= L on the nodes of ``S3``.

    ``L`` defaults to the truncation order of R times the largest wave number.
    """
    _check_radius(R)
    if L is None:
        L = truncation_order(R * (S3.rho2.hi + S3.rho3.hi))
    ell = np.arange(-L, L + 1)
    rho1, rho2, rho3, g1, g2, w = _plane_nodes(S3)
    out = np.zeros((ell.size, ell.size))
    for s in range(0, rho1.size, chunk):
        sl = slice(s, s + chunk)
        j1 = besselj_signed_table(2 * L, R * rho1[sl])
        j2 = besselj_signed_table(L, R * rho2[sl])
        j3 = besselj_signed_table(L, R * rho3[sl])
        # cos(l2 g2 - l3 g1) = cos cos + sin sin, separable in (l2, l3)
        c2, s2 = np.cos(np.outer(ell, g2[sl])), np.sin(np.outer(ell, g2[sl]))
        c3, s3 = np.cos(np.outer(ell, g1[sl])), np.sin(np.outer(ell, g1[sl]))
        a2c, a2s = j2 * c2 * w[sl], j2 * s2 * w[sl]
        a3c, a3s = j3 * c3, j3 * s3
        for i, m in enumerate(ell):
            row = j1[m + ell + 2 * L]  # J_{m+l3}(R rho1) for every l3
            out[i] += (row * a3c) @ a2c[i] + (row * a3s) @ a2s[i]
    return CircleBicoefficient(R, 4 * math.pi * out.astype(complex))


def circle_bispectrum_from_plane(S3: BispectrumGrid, R: float, l2: int, l3: int) -> complex:
    """B_{l2,l3} = Cum(Z_{R,-l2-l3}, Z_{R,l2}, Z_{R,l3}) from the planar bispectrum."""
    _check_radius(R)
    l2, l3 = int(l2), int(l3)
    rho1, rho2, rho3, g1, g2, w = _plane_nodes(S3)
    vals = (besselj(l2 + l3, R * rho1) * besselj(l2, R * rho2) * besselj(l3, R * rho3)
            * np.cos(l2 * g2 - l3 * g1))
    return complex(4 * math.pi * np.sum(vals * w))


def circle_bicov_from_plane(S3: BispectrumGrid, R: float, phi2: float, phi3: float,
                            L: int | None = None) -> float:
    """Cum(X_R(pi/2), X_R(phi2), X_R(phi3)) = sum B_{l2,l3} e^{i(l2 (phi2-pi/2) + l3 (phi3-pi/2))}."""
    B = circle_bicoefficients(S3, R, L)
    ell = np.arange(-B.L, B.L + 1)
    a = np.exp(1j * ell * (phi2 - math.pi / 2))
    b = np.exp(1j * ell * (phi3 - math.pi / 2))
    return float(np.real(a @ B.values @ b))


def circle_chords(R: float, phi2: float, phi3: float) -> tuple[float, float, float]:
    """(r1, r2, r3) of the location triangle for x1 at pi/2; r1 = |x2 - x3|."""
    r2, r3, _ = chord_map(R, phi2, phi3)
    r1 = R * math.sqrt(max(0.0, 2 * (1 - math.cos(phi3 - phi2))))
    return r1, r2, r3
