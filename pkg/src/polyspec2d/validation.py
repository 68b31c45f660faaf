"""Invariant suites behind ``polyspec2d validate``.

Every check reports the worst observed error against a fixed tolerance.
Random cases are drawn from a seeded generator and nothing time-dependent
enters the report, so a given seed always yields the same bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bessel, closed_form, geometry, kernels, transforms
from .circle import (
    circle_bicov_from_plane,
    circle_chords,
    circle_cov_consistency,
    circle_spectrum,
)
from .gridio import Axis
from .simulate import (
    SimulationConfig,
    estimate_circle_coeffs,
    estimate_cumulants,
    map_blocks,
    squared_field,
    wick_circle_bicoefficient,
)

SUITES = ("bessel", "geometry", "kernels", "transforms", "circle", "simulate")
DEFAULT_SEED = 20240611


@dataclass
class Check:
    name: str
    error: float
    tolerance: float
    cases: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def _rng(seed: int, suite: str) -> np.random.Generator:
    return np.random.default_rng([seed, SUITES.index(suite)])


def _random_triangle(rng, lo=0.5, hi=8.0, min_sin=0.2):
    while True:
        s = rng.uniform(lo, hi, 3)
        g = geometry.triangle_angles(*s)
        if np.all(np.isfinite(g)) and min(np.sin(g)) >= min_sin:
            return s


# ---------------------------------------------------------------------------


def suite_bessel(rng) -> list[Check]:
    x = rng.uniform(0, 40, 50)
    ell = rng.integers(0, 30, 50)
    par = max(abs(bessel.besselj(-int(n), v) - (-1) ** int(n) * bessel.besselj(int(n), v))
              for n, v in zip(ell, x))
    ser = max(abs(bessel.besselj(int(n), v) - bessel.besselj_series_mp(int(n), v))
              for n, v in zip(ell[:20], x[:20]))
    ja = 0.0
    for _ in range(50):
        rho, r = rng.uniform(0.1, 4, 2)
        phi, eta = rng.uniform(-math.pi, math.pi, 2)
        ja = max(ja, bessel.validate_jacobi_anger(rho, r, phi, eta, math.ceil(rho * r) + 20))
    graf = 0.0
    for _ in range(50):
        r2, r3 = rng.uniform(0.2, 8, 2)
        g3 = rng.uniform(0.1, math.pi - 0.1)
        l1 = int(rng.integers(-6, 7))
        graf = max(graf, bessel.validate_graf(r2, r3, g3, l1, math.ceil(r2 + r3) + 20))
    closed = 0.0
    for _ in range(5):
        sides = _random_triangle(rng)
        l1, l2 = (int(v) for v in rng.integers(-6, 7, 2))
        ref = bessel.oscillatory_product_integral((l1, l2, l1 + l2), sides)
        val = closed_form.triple_bessel(l1, l2, *sides)
        closed = max(closed, abs(val - ref) / max(5e-3, 1e-2 * abs(val)))
    return [Check("besselj parity", par, 1e-14, 50),
            Check("triple closed form vs oracle (scaled)", closed, 1.0, 5),
            Check("besselj vs ascending series", ser, 1e-12, 20),
            Check("Jacobi-Anger residual", ja, 1e-10, 50),
            Check("Graf residual", graf, 1e-10, 50)]


def suite_geometry(rng) -> list[Check]:
    law = angsum = 0.0
    for _ in range(100):
        t = geometry.triangle_from_sides(*_random_triangle(rng))
        angsum = max(angsum, abs(t.gamma1 + t.gamma2 + t.gamma3 - math.pi))
        law = max(law, max(t.residuals().values()))
    quad = 0.0
    for _ in range(50):
        rho2, rho3, rho4 = rng.uniform(0.5, 4, 3)
        b3, g4 = rng.uniform(0.2, math.pi - 0.2, 2)
        chain = geometry.chain_from_angles((rho2, rho3, rho4), (b3, g4))
        q = chain.as_quadrilateral()
        again = geometry.quadrilateral_from_gamma4(q.rho1, q.rho2, q.rho3, q.rho4, q.gamma4)
        quad = max(quad, abs(again.kappa - q.kappa), abs(again.beta3 - q.beta3))
    closure = 0.0
    for _ in range(30):
        tail = rng.uniform(0.5, 3, 4)
        betas = rng.uniform(0.2, math.pi - 0.2, 3)
        chain = geometry.chain_from_angles(tail, betas)
        rebuilt = geometry.multilateral_chain(chain.sides, tuple(reversed(chain.betas[1:])))
        closure = max(closure, float(np.max(np.abs(np.subtract(rebuilt.diagonals, chain.diagonals)))))
    return [Check("triangle angle sum", angsum, 1e-12, 100),
            Check("law of cosines residual", law, 1e-10, 100),
            Check("quadrilateral round trip", quad, 1e-10, 50),
            Check("multilateral diagonal round trip", closure, 1e-10, 30)]


def suite_kernels(rng) -> list[Check]:
    t3 = 0.0
    for _ in range(100):
        eta, phi = rng.uniform(0, math.pi, 2)
        rho2, rho3, r2, r3 = rng.uniform(0.1, 5, 4)
        a = kernels.t3_kernel(eta, rho2, rho3, phi, r2, r3)
        b = kernels.t3_closed_form(eta, rho2, rho3, phi, r2, r3)
        t3 = max(t3, abs(a - b))
    tp = imag = 0.0
    for p in (4, 5):
        for _ in range(5):
            rho = rng.uniform(0.5, 2, p - 1)
            beta = rng.uniform(0.2, math.pi - 0.2, p - 2)
            r = rng.uniform(0.2, 2, p - 1)
            psi = rng.uniform(-math.pi, math.pi, p - 2)
            z = kernels.tp_kernel(rho, beta, r, psi, full_output=True)
            tp = max(tp, abs(z.real - kernels.orientation_average(rho, beta, r, psi)))
            imag = max(imag, abs(z.imag))
    chord = 0.0
    for _ in range(20):
        s = _random_triangle(rng, 0.3, 2.0)
        R = rng.uniform(0.5, 3)
        phi2, phi3 = rng.uniform(0, 2 * math.pi, 2)
        tri = geometry.triangle_from_sides(*s)
        r2, r3, phi = kernels.chord_map(R, phi2, phi3)
        a = kernels.tr3_circle_kernel(R, *s, phi2, phi3)
        b = kernels.t3_kernel(tri.gamma3, s[1], s[2], phi, r2, r3)
        chord = max(chord, abs(a - b))
    return [Check("T3 series vs closed form", t3, 1e-10, 100),
            Check("Tp series vs orientation average", tp, 1e-10, 10),
            Check("Tp imaginary residue", imag, 1e-12, 10),
            Check("circle kernel vs chord-mapped T3", chord, 1e-9, 20)]


def _gauss_poly_grid(a, p, n, rmax=6.0):
    f = lambda *s: np.exp(-a * sum(x * x for x in s))  # noqa: E731
    rhos = [Axis(f"rho{k}", 0, rmax, n, "gauss") for k in range(2, p + 1)]
    betas = [Axis(f"beta{k}", 0, math.pi, n, "gauss") for k in range(3, p + 1)]
    return transforms.PolyspectrumGrid.from_function(f, rhos, betas)


def _polar_points(r, psi):
    phis = list(psi) + [0.0]
    return [(0.0, 0.0)] + [(rk * math.cos(ph), rk * math.sin(ph)) for rk, ph in zip(r, phis)]


def suite_transforms(rng) -> list[Check]:
    ax = Axis("rho", 0, 8, 128, "gauss")
    dens = np.exp(-ax.nodes ** 2)
    F = transforms.RadialSpectralMeasure(density_axis=ax, density=dens)
    r = np.linspace(0, 12, 600)
    c2 = transforms.cov_from_spectrum(F, r)
    pair = float(np.max(np.abs(c2 - math.pi * np.exp(-r * r / 4))))
    back = transforms.spectrum_from_cov(r, c2, ax.nodes)
    hankel = float(np.linalg.norm(back - dens) / np.linalg.norm(dens))
    a = 0.5
    prefactor = 0.0
    for p, n in ((3, 32), (4, 16)):
        grid = _gauss_poly_grid(a, p, n)
        for _ in range(3):
            rr = rng.uniform(0.3, 1.5, p - 1)
            psi = rng.uniform(-math.pi, math.pi, p - 2)
            val = transforms.cum_p_from_spectrum_p(p, grid, rr, psi)
            ref = transforms.gaussian_product_cumulant(a, _polar_points(rr, psi))
            prefactor = max(prefactor, abs(val - ref) / abs(ref))
    eta = Axis("eta", 0, math.pi, 32, "uniform")
    rho2 = Axis("rho2", 0.5, 1.5, 32, "gauss")
    rho3 = Axis("rho3", 0.5, 1.5, 32, "gauss")
    S3 = transforms.BispectrumGrid.from_function(_bump_s3, eta, rho2, rho3)
    C3 = transforms.bicov_grid(S3, Axis("phi", 0, math.pi, 32, "uniform"),
                               Axis("r2", 0, 30, 64, "gauss"), Axis("r3", 0, 30, 64, "gauss"))
    S3b = transforms.bispectrum_grid(C3, eta, rho2, rho3)
    rt = float(np.linalg.norm(S3b.values - S3.values) / np.linalg.norm(S3.values))
    return [Check("Gaussian Hankel pair", pair, 1e-3, 600),
            Check("Hankel round trip rel L2", hankel, 1e-3, 128),
            Check("S_p to C_p vs Gaussian-product reference", prefactor, 1e-6, 6),
            Check("bispectrum round trip rel L2", rt, 2e-2, S3.values.size)]


def _bump(x, c=1.0, w=0.5):
    return np.clip(1 - ((x - c) / w) ** 2, 0, None) ** 3


def _bump_s3(rho1, rho2, rho3):
    # a smooth bump in (rho2, rho3) modulated by the third side
    return _bump(rho2) * _bump(rho3) * (1 + 0.25 * np.cos(rho1))


def suite_circle(rng) -> list[Check]:
    cons = 0.0
    for _ in range(20):
        atoms = sorted(rng.uniform(0.2, 3, 3))
        F = transforms.RadialSpectralMeasure(atoms=[(r, m) for r, m in
                                                    zip(atoms, rng.uniform(0.1, 1, 3))])
        R = rng.uniform(0.5, 4)
        cons = max(cons, circle_cov_consistency(F, R, rng.uniform(0, math.pi)))
    F = transforms.RadialSpectralMeasure(atoms=[(0.7, 0.3), (1.9, 0.2)])
    spec = circle_spectrum(F, 2.3, 60)
    parity = float(np.max(np.abs(spec.f - spec.f[::-1])))
    closure = abs(spec.f.sum() - transforms.cov_from_spectrum(F, 0.0))
    S3 = transforms.BispectrumGrid.from_function(
        _bump_s3, Axis("eta", 0, math.pi, 24, "gauss"),
        Axis("rho2", 0.5, 1.5, 16, "gauss"), Axis("rho3", 0.5, 1.5, 16, "gauss"))
    plane = 0.0
    for _ in range(3):
        R = rng.uniform(0.5, 2)
        phi2, phi3 = rng.uniform(0, 2 * math.pi, 2)
        a = circle_bicov_from_plane(S3, R, phi2, phi3)
        b = transforms.bicov_from_bispectrum(S3, *circle_chords(R, phi2, phi3))
        plane = max(plane, abs(a - b) / max(abs(b), 1e-300))
    return [Check("circle covariance consistency", cons, 1e-8, 20),
            Check("circle spectrum parity", parity, 0.0, spec.f.size),
            Check("circle spectrum closure", closure, 1e-10, 1),
            Check("circle bicovariance vs planar at chords (rel)", plane, 1e-6, 3)]


def suite_simulate(rng, threads: int = 1) -> list[Check]:
    F = transforms.RadialSpectralMeasure(atoms=[(0.8, 0.1), (1.6, 0.05)])
    R, L = 2.0, 24
    seed = int(rng.integers(0, 2**63))
    cfg = SimulationConfig(F, L, 4000, seed, points=((0.0, 0.0), (1.0, 0.0)), circle=(R, 128))
    K = 4

    def work(block):
        zx = estimate_circle_coeffs(block, R, 128, K)
        zy = estimate_circle_coeffs(squared_field(block, F), R, 128, K)
        pts = np.column_stack([block.evaluate(r, p) for r, p in cfg.points])
        return zx, zy, pts, block.imag_residue

    out = map_blocks(cfg, work, threads)
    zx = np.vstack([o[0] for o in out])
    zy = np.vstack([o[1] for o in out])
    pts = np.vstack([o[2] for o in out])
    imag = max(o[3] for o in out)
    n = zx.shape[0]
    spec = circle_spectrum(F, R, K)
    zs = 0.0
    for ell in range(-K, K + 1):
        v = np.abs(zx[:, ell + K]) ** 2
        zs = max(zs, abs(v.mean() - spec[ell]) / (v.std(ddof=1) / math.sqrt(n)))
    cov_z = 0.0
    for i, r in enumerate((0.0, 1.0)):
        prod = pts[:, 0] * pts[:, i]
        ref = transforms.cov_from_spectrum(F, r)
        cov_z = max(cov_z, abs(prod.mean() - ref) / (prod.std(ddof=1) / math.sqrt(n)))
    sel = 0.0
    for est in estimate_cumulants(zy, [(1, 1, 0), (2, -1, 0), (1, 1, 1), (3, 0, -1)]):
        sel = max(sel, est.ratio)
    (est,) = estimate_cumulants(zy, [(-1, 0, 1)])
    wick = abs(est.value - wick_circle_bicoefficient(F, R, 0, 1)) / est.se
    head = lambda b: b.z[:2].copy()  # noqa: E731
    determinism = float(max(np.max(np.abs(a - b)) for a, b in
                            zip(map_blocks(cfg, head, 1), map_blocks(cfg, head, 2))))
    return [Check("reality residue", imag, 1e-10, n),
            Check("covariance z-score", cov_z, 4.0, 2),
            Check("circle spectrum z-score", zs, 4.0, 2 * K + 1),
            Check("selection rule |cum|/SE", sel, 4.0, 4),
            Check("Wick circle bicoefficient z-score", wick, 5.0, 1),
            Check("determinism", determinism, 0.0, 2)]


_RUNNERS = {"bessel": suite_bessel, "geometry": suite_geometry, "kernels": suite_kernels,
            "transforms": suite_transforms, "circle": suite_circle, "simulate": suite_simulate}


def run_suites(names, seed: int = DEFAULT_SEED, perturbation: float = 0.0,
               threads: int = 1) -> dict:
    """Run the named suites; ``perturbation`` is added to every error (test hook)."""
    if "all" in names:
        names = SUITES
    report = {"seed": int(seed), "suites": {}}
    ok = True
    for name in names:
        if name not in _RUNNERS:
            raise ValueError(f"unknown suite {name!r}")
        rng = _rng(seed, name)
        checks = _RUNNERS[name](rng, threads) if name == "simulate" else _RUNNERS[name](rng)
        rows = []
        for c in checks:
            c.error = float(c.error) + perturbation
            rows.append({**asdict(c), "passed": c.passed})
            ok &= c.passed
        report["suites"][name] = rows
    report["passed"] = bool(ok)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
