"""Acceptance criteria, each at its stated count and tolerance.

Every test records one pass/fail line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import math
import time

import numpy as np
import pytest

from polyspec2d import bessel, closed_form, geometry, kernels, transforms
from polyspec2d.circle import (
    circle_cov_consistency,
    circle_spectrum,
)
from polyspec2d.cli import main
from polyspec2d.gridio import Axis
from polyspec2d.simulate import (
    SimulationConfig,
    estimate_circle_coeffs,
    estimate_cumulants,
    k_statistic,
    map_blocks,
    polar_to_xy,
    squared_field,
    wick_cum3,
)

SEED = 20240611


def _rng(n):
    return np.random.default_rng([SEED, n])


def _triangle(rng, lo=0.5, hi=8.0, min_sin=0.2):
    while True:
        s = rng.uniform(lo, hi, 3)
        g = geometry.triangle_angles(*s)
        if np.all(np.isfinite(g)) and min(np.sin(g)) >= min_sin:
            return s


def _bump(x, c=1.0, w=0.5):
    return np.clip(1 - ((x - c) / w) ** 2, 0, None) ** 3


def test_criterion_01_triples_vs_oracle(criterion):
    rng = _rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        sides = _triangle(rng)
        l1, l2 = (int(v) for v in rng.integers(-6, 7, 2))
        val = closed_form.triple_bessel(l1, l2, *sides)
        ref = bessel.oscillatory_product_integral((l1, l2, l1 + l2), sides)
        worst = max(worst, abs(val - ref) / max(5e-3, 1e-2 * abs(val)))
    runtime = time.perf_counter() - start
    ok = worst <= 1.0 and runtime <= 120
    criterion(1, "triple closed form vs oracle, 50 triangles", ok,
              f"worst error/tolerance {worst:.3g}, {runtime:.1f}s")
    assert ok


def test_criterion_02_zero_set(criterion):
    rng = _rng(2)
    exact = True
    worst = 0.0
    for _ in range(50):
        a, b = rng.uniform(0.5, 4, 2)
        c = (a + b) * rng.uniform(1.1, 2.0)
        sides = rng.permutation([a, b, c])
        l1, l2 = (int(v) for v in rng.integers(-6, 7, 2))
        exact &= closed_form.triple_bessel(l1, l2, *sides) == 0.0
        worst = max(worst, abs(bessel.oscillatory_product_integral((l1, l2, l1 + l2), sides)))
    ok = exact and worst <= 5e-3
    criterion(2, "zero set outside triangles, 50 cases", ok,
              f"closed form exactly 0: {exact}, max |oracle| {worst:.3g}")
    assert ok


def test_criterion_03_quadrilaterals(criterion):
    rng = _rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(25):
        tail = rng.uniform(0.5, 4, 3)
        b3, g4 = rng.uniform(0.2, math.pi - 0.2, 2)
        sides = geometry.chain_from_angles(tail, (b3, g4)).sides
        orders = tuple(int(v) for v in rng.integers(-3, 4, 3))
        val = closed_form.quad_bessel(*orders, *sides)
        ref = bessel.oscillatory_product_integral(orders + (sum(orders),), sides)
        worst = max(worst, abs(val - ref))
    runtime = time.perf_counter() - start
    ok = worst <= 5e-3 and runtime <= 300
    criterion(3, "quadrilateral formula vs oracle, 25 cases", ok,
              f"max abs error {worst:.3g}, {runtime:.1f}s")
    assert ok


def test_criterion_04_pentagons(criterion):
    rng = _rng(4)
    configs = [((1, 0, 2, -1), (1.0,) * 5)]
    while len(configs) < 5:
        tail = rng.uniform(0.6, 2.0, 4)
        betas = rng.uniform(0.3, math.pi - 0.3, 3)
        sides = geometry.chain_from_angles(tail, betas).sides
        configs.append((tuple(int(v) for v in rng.integers(-2, 3, 4)), sides))
    worst = 0.0
    for orders, sides in configs:
        val = closed_form.multi_bessel(orders, sides)
        ref = bessel.oscillatory_product_integral(orders + (sum(orders),), sides)
        worst = max(worst, abs(val - ref))
    reduction = 0.0
    for _ in range(5):
        tail = rng.uniform(0.5, 3, 3)
        sides = geometry.chain_from_angles(tail, rng.uniform(0.3, math.pi - 0.3, 2)).sides
        orders = tuple(int(v) for v in rng.integers(-3, 4, 3))
        reduction = max(reduction, abs(closed_form.multi_bessel(orders, sides)
                                       - closed_form.quad_bessel(*orders, *sides)))
    ok = worst <= 5e-3 and reduction <= 1e-12
    criterion(4, "five-factor formula vs oracle incl. regular pentagon", ok,
              f"max abs error {worst:.3g}, p=4 reduction {reduction:.3g}")
    assert ok


def test_criterion_05_angular_identity(criterion):
    rng = _rng(5)
    worst = 0.0
    for _ in range(100):
        l1, l2 = (int(v) for v in rng.integers(-6, 7, 2))
        rho2, rho3 = rng.uniform(0.2, 5, 2)
        lam = rng.uniform(0.1, 5)
        worst = max(worst, closed_form.angular_identity_residual(l1, l2, rho2, rho3, lam))
    ok = worst <= 1e-8
    criterion(5, "finite angular identity, 100 cases", ok, f"max residual {worst:.3g}")
    assert ok


def test_criterion_06_t3_closed_form(criterion):
    rng = _rng(6)
    eta, phi = rng.uniform(0, math.pi, (2, 100))
    rho2, rho3, r2, r3 = rng.uniform(0.1, 5, (4, 100))
    worst = float(np.max(np.abs(kernels.t3_kernel(eta, rho2, rho3, phi, r2, r3)
                                - kernels.t3_closed_form(eta, rho2, rho3, phi, r2, r3))))
    ok = worst <= 1e-10
    criterion(6, "T3 series vs closed form, 100 cases", ok, f"max error {worst:.3g}")
    assert ok


def test_criterion_07_graf_and_jacobi_anger(criterion):
    rng = _rng(7)
    worst = 0.0
    for _ in range(100):
        rho, r = rng.uniform(0.1, 4, 2)
        phi, eta = rng.uniform(-math.pi, math.pi, 2)
        worst = max(worst, bessel.validate_jacobi_anger(rho, r, phi, eta, math.ceil(rho * r) + 20))
    for _ in range(100):
        r2, r3 = rng.uniform(0.2, 8, 2)
        g3 = rng.uniform(0.1, math.pi - 0.1)
        l1 = int(rng.integers(-6, 7))
        worst = max(worst, bessel.validate_graf(r2, r3, g3, l1, math.ceil(r2 + r3) + 20))
    ok = worst <= 1e-10
    criterion(7, "Graf and Jacobi-Anger residuals, 200 cases", ok, f"max residual {worst:.3g}")
    assert ok


def test_criterion_08_hankel_round_trip(criterion):
    ax = Axis("rho", 0, 8, 128, "gauss")
    dens = np.exp(-ax.nodes ** 2)
    F = transforms.RadialSpectralMeasure(density_axis=ax, density=dens)
    r = np.linspace(0, 12, 600)
    back = transforms.spectrum_from_cov(r, transforms.cov_from_spectrum(F, r), ax.nodes)
    err = float(np.linalg.norm(back - dens) / np.linalg.norm(dens))
    ok = err <= 1e-3
    criterion(8, "Hankel round trip, Gaussian density", ok, f"rel L2 {err:.3g}")
    assert ok


def test_criterion_09_bispectrum_round_trip(criterion):
    start = time.perf_counter()
    eta = Axis("eta", 0, math.pi, 64, "uniform")
    rho2 = Axis("rho2", 0.5, 1.5, 64, "gauss")
    rho3 = Axis("rho3", 0.5, 1.5, 64, "gauss")
    S3 = transforms.BispectrumGrid.from_function(
        lambda r1, r2, r3: _bump(r2) * _bump(r3) * (1 + 0.25 * np.cos(r1)), eta, rho2, rho3)
    C3 = transforms.bicov_grid(S3, Axis("phi", 0, math.pi, 64, "uniform"),
                               Axis("r2", 0, 30, 64, "gauss"), Axis("r3", 0, 30, 64, "gauss"))
    back = transforms.bispectrum_grid(C3, eta, rho2, rho3)
    err = float(np.linalg.norm(back.values - S3.values) / np.linalg.norm(S3.values))
    runtime = time.perf_counter() - start
    ok = err <= 0.02 and runtime <= 600
    criterion(9, "bispectrum round trip on a 64^3 grid", ok, f"rel L2 {err:.3g}, {runtime:.1f}s")
    assert ok


F_SIM = transforms.RadialSpectralMeasure(atoms=[(0.8, 0.1), (1.6, 0.05)])


def test_criterion_10_circle_spectrum(criterion):
    R, K = 2.0, 4
    cfg = SimulationConfig(F_SIM, 24, 2000, SEED + 10, circle=(R, 128))
    z = np.concatenate(map_blocks(cfg, lambda b: estimate_circle_coeffs(b, R, 128, K)))
    spec = circle_spectrum(F_SIM, R, K)
    worst_z = 0.0
    for ell in range(-K, K + 1):
        v = np.abs(z[:, ell + K]) ** 2
        se = v.std(ddof=1) / math.sqrt(v.size)
        worst_z = max(worst_z, abs(v.mean() - spec[ell]) / se)
    rng = _rng(10)
    cons = 0.0
    for _ in range(20):
        atoms = sorted(rng.uniform(0.2, 3, 3))
        F = transforms.RadialSpectralMeasure(atoms=list(zip(atoms, rng.uniform(0.1, 1, 3))))
        cons = max(cons, circle_cov_consistency(F, rng.uniform(0.5, 4), rng.uniform(0, math.pi)))
    ok = worst_z <= 4 and cons <= 1e-8
    criterion(10, "circle spectrum from 2000 realizations", ok,
              f"max z {worst_z:.3g} over |l| <= 4, consistency {cons:.3g}")
    assert ok


def test_criterion_11_selection_rule(criterion):
    R, K = 2.0, 3
    cfg = SimulationConfig(F_SIM, 24, 4000, SEED + 11, circle=(R, 128))
    zy = np.concatenate(map_blocks(
        cfg, lambda b: estimate_circle_coeffs(squared_field(b, F_SIM), R, 128, K)))
    nonzero = [(1, 1, 0), (1, 0, 0), (2, -1, 0), (1, 1, 1), (2, 1, -1),
               (3, -1, 0), (2, 2, -1), (0, 0, 1), (3, 0, 0), (-2, -1, 0)]
    zero = [(0, 0, 0), (-1, 0, 1), (-2, 1, 1), (1, -2, 1)]
    off = max(e.ratio for e in estimate_cumulants(zy, nonzero))
    on = max(e.ratio for e in estimate_cumulants(zy, zero))
    ok = off < 4 and on > 5
    criterion(11, "selection rule for the squared field", ok,
              f"max |k|/SE with sum != 0: {off:.3g}; max with sum = 0: {on:.3g}")
    assert ok


def test_criterion_12_wick(criterion):
    start = time.perf_counter()
    points = ((0.0, 0.0), (1.0, 0.0), (1.2, 1.1), (0.7, 2.6), (1.5, -1.9))
    triples = [(0, 1, 2), (0, 3, 4), (1, 2, 4)]
    cfg = SimulationConfig(F_SIM, 24, 100_000, SEED + 12, points=points)
    c0 = transforms.cov_from_spectrum(F_SIM, 0.0)
    x = np.concatenate(map_blocks(cfg, lambda b: np.column_stack(
        [b.evaluate(r, ph) for r, ph in points])))
    y = x ** 2 - c0
    worst = 0.0
    for i, j, k in triples:
        val, se = k_statistic([y[:, i], y[:, j], y[:, k]])
        ref = wick_cum3(F_SIM, *(polar_to_xy(*points[v]) for v in (i, j, k)))
        worst = max(worst, abs(val - ref) / se)
    runtime = time.perf_counter() - start
    ok = worst <= 4 and runtime <= 600
    criterion(12, "squared-field third cumulant vs Wick, 1e5 realizations", ok,
              f"max z {worst:.3g}, {runtime:.1f}s")
    assert ok


def test_criterion_13_chord_identity(criterion):
    rng = _rng(13)
    worst = 0.0
    for _ in range(50):
        s = _triangle(rng, 0.3, 2.0)
        R = rng.uniform(0.5, 3)
        phi2, phi3 = rng.uniform(0, 2 * math.pi, 2)
        tri = geometry.triangle_from_sides(*s)
        r2, r3, phi = kernels.chord_map(R, phi2, phi3)
        a = kernels.tr3_circle_kernel(R, *s, phi2, phi3)
        b = kernels.t3_kernel(tri.gamma3, s[1], s[2], phi, r2, r3)
        worst = max(worst, abs(a - b))
    ok = worst <= 1e-9
    criterion(13, "circle kernel equals T3 under the chord map, 50 cases", ok,
              f"max error {worst:.3g}")
    assert ok


def test_criterion_14_determinism(criterion, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    codes = [main(["validate", "--suite", "all", "--seed", "7", "--out", str(p)]) for p in (a, b)]
    same = a.read_bytes() == b.read_bytes()
    ok = same and codes == [0, 0]
    criterion(14, "validate --suite all twice is byte-identical", ok,
              f"exit codes {codes}, identical {same}")
    assert ok
