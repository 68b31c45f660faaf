"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 disagreement or failed check,
4 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import closed_form, transforms
from .bessel import oscillatory_product_integral
from .circle import circle_spectrum
from .errors import OracleUnreliableError, PolyspecError, ResourceCapError
from .gridio import Axis, GridContainer, atomic_write
from .simulate import (
    SimulationConfig,
    estimate_circle_coeffs,
    estimate_cumulants,
    evaluations_csv,
    k_statistic,
    map_blocks,
    polar_to_xy,
    squared_field,
    wick_circle_bicoefficient,
    wick_cum3,
)
from .validation import DEFAULT_SEED, SUITES, report_json, run_suites

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_CAP = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _list(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse list {text!r}") from exc


def _write_json(path, obj) -> None:
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


# ---------------------------------------------------------------------------
# bessel-int


def cmd_bessel_int(args) -> int:
    orders = _list(args.orders, int)
    sides = _list(args.sides, float)
    p = len(sides)
    if p < 3:
        raise UsageError("need at least three sides")
    if len(orders) != p - 1:
        raise UsageError(f"need {p - 1} orders for {p} sides")
    if any(not (math.isfinite(s) and s > 0) for s in sides):
        raise UsageError("sides must be positive")
    full = orders + [sum(orders)]
    report = {"orders": full, "sides": sides}
    closed = oracle = None
    if args.method in ("closed", "both"):
        if p == 3:
            closed = closed_form.triple_bessel(orders[0], orders[1], *sides)
        elif p == 4:
            closed = closed_form.quad_bessel(*orders, *sides)
        else:
            closed = closed_form.multi_bessel(orders, sides)
        report["closed"] = closed
    if args.method in ("oracle", "both"):
        try:
            oracle = oscillatory_product_integral(full, sides)
        except OracleUnreliableError as exc:
            report["oracle_error"] = str(exc)
            _emit(report, args.json)
            return EXIT_FAIL
        report["oracle"] = oracle
    status = EXIT_OK
    if closed is not None and oracle is not None:
        diff = abs(closed - oracle)
        tol = max(args.abs_tol, args.rel_tol * abs(closed))
        report.update(abs_diff=diff, rel_diff=diff / abs(closed) if closed else math.inf,
                      tolerance=tol, agree=diff <= tol)
        status = EXIT_OK if diff <= tol else EXIT_FAIL
    _emit(report, args.json)
    return status


def _emit(report, as_json):
    if as_json:
        print(json.dumps(report, sort_keys=True))
        return
    for key in ("orders", "sides", "closed", "oracle", "abs_diff", "rel_diff", "tolerance",
                "agree", "oracle_error"):
        if key in report:
            val = report[key]
            print(f"{key:>10}: {val:.10g}" if isinstance(val, float) else f"{key:>10}: {val}")


# ---------------------------------------------------------------------------
# transform


def _axis(params, name, default_name=None) -> Axis:
    spec = params.get(name)
    if spec is None:
        raise UsageError(f"params need an axis {name!r}")
    if not isinstance(spec, dict):
        raise UsageError(f"axis {name!r} must be an object")
    d = {"name": default_name or name, **spec}
    return Axis.from_json(d)


def _points(params, width) -> np.ndarray:
    pts = np.asarray(params.get("points", []), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != width or pts.shape[0] == 0:
        raise UsageError(f"params need 'points' as a list of {width}-tuples")
    return pts


def _point_container(values, quantity) -> GridContainer:
    n = len(values)
    return GridContainer((Axis("point", 0, max(n - 1, 0), n, "uniform"),),
                         np.asarray(values, dtype=float), {"quantity": quantity})


def _transform(op, grid: GridContainer, params) -> GridContainer:
    max_work = float(params.get("max_work", transforms.DEFAULT_MAX_WORK))
    if op == "cov":
        ax = grid.axis("rho")
        F = transforms.RadialSpectralMeasure(atoms=params.get("atoms", ()), density_axis=ax,
                                             density=np.real(grid.values))
        r = _axis(params, "r")
        vals = transforms.cov_from_spectrum(F, r.nodes)
        return GridContainer((r,), np.atleast_1d(vals), {"quantity": "covariance"})
    if op == "spec":
        r = grid.axis("r")
        rho = _axis(params, "rho")
        w = r.weights if r.rule == "gauss" else None
        vals = transforms.spectrum_from_cov(r.nodes, np.real(grid.values), rho.nodes, weights=w)
        return GridContainer((rho,), np.atleast_1d(vals), {"quantity": "radial_density"})
    if op == "bicov":
        S3 = transforms.BispectrumGrid.from_container(grid)
        return transforms.bicov_grid(S3, _axis(params, "phi"), _axis(params, "r2"), _axis(params, "r3"))
    if op == "bisp":
        S3 = transforms.bispectrum_grid(grid, _axis(params, "eta"), _axis(params, "rho2"),
                                        _axis(params, "rho3"))
        return S3.to_container()
    if op == "tricov":
        S4 = transforms.TrispectrumGrid.from_container(grid)
        vals = [transforms.tricov_from_trispectrum(S4, *pt, max_work=max_work)
                for pt in _points(params, 5)]
        return _point_container(vals, "tricovariance")
    if op == "cump":
        p = int(params.get("p", 0))
        if p not in (3, 4, 5):
            raise UsageError("params need 'p' in 3..5")
        rhos = tuple(grid.axis(f"rho{k}") for k in range(2, p + 1))
        betas = tuple(grid.axis(f"beta{k}") for k in range(3, p + 1))
        if len(grid.axes) != 2 * p - 3 or [a.name for a in grid.axes] != [a.name for a in rhos + betas]:
            raise UsageError("cump input axes must be rho2..rhop, beta3..betap in that order")
        S = transforms.PolyspectrumGrid(rhos, betas, np.real(grid.values))
        vals = [transforms.cum_p_from_spectrum_p(p, S, pt[: p - 1], pt[p - 1:], max_work=max_work)
                for pt in _points(params, 2 * p - 3)]
        return _point_container(vals, f"cumulant_{p}")
    raise UsageError(f"unknown op {op!r}")


def cmd_transform(args) -> int:
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise UsageError(f"--params is not JSON: {exc}") from exc
    if not isinstance(params, dict):
        raise UsageError("--params must be a JSON object")
    grid = GridContainer.load(args.inp)
    start = time.perf_counter()
    out = _transform(args.op, grid, params)
    runtime = time.perf_counter() - start
    out.save(args.out, encoding=args.encoding)
    sidecar = {
        "op": args.op, "input": str(args.inp), "output": str(args.out), "params": params,
        "input_axes": [a.to_json() for a in grid.axes],
        "output_axes": [a.to_json() for a in out.axes],
        "max_work": float(params.get("max_work", transforms.DEFAULT_MAX_WORK)),
        "runtime_seconds": runtime, "threads": args.threads,
    }
    _write_json(str(args.out) + ".json", sidecar)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _default_triples(K: int) -> list[tuple]:
    zero = [(0, 0, 0), (-1, 0, 1), (-2, 1, 1), (1, -2, 1), (-3, 1, 2)]
    nonzero = [(1, 1, 0), (1, 0, 0), (2, -1, 0), (1, 1, 1), (2, 1, -1),
               (3, -1, 0), (2, 2, -1), (0, 0, 1), (3, 0, 0), (-2, -1, 0)]
    return [t for t in zero + nonzero if max(map(abs, t)) <= K]


def _simulate(cfg: SimulationConfig, raw: dict, threads: int):
    F = cfg.F
    pts = cfg.points
    circle = cfg.circle
    K = None
    if circle is not None:
        K = int(raw.get("circle_orders", min(8, cfg.L)))
        if not 0 <= K <= cfg.L:
            raise UsageError("circle_orders must lie in 0..L")

    def work(block):
        out = {}
        if pts:
            out["x"] = np.column_stack([block.evaluate(r, ph) for r, ph in pts])
        if circle is not None:
            R, N = circle
            out["zx"] = estimate_circle_coeffs(block, R, N, K)
            out["zy"] = estimate_circle_coeffs(squared_field(block, F), R, N, K)
        out["imag"] = block.imag_residue
        return out

    parts = map_blocks(cfg, work, threads)
    res = {key: np.vstack([p[key] for p in parts]) for key in ("x", "zx", "zy") if key in parts[0]}
    res["imag"] = max(p["imag"] for p in parts)
    return res, K


def _summary(cfg: SimulationConfig, raw: dict, res: dict, K) -> dict:
    F = cfg.F
    n = cfg.realization_count
    summ = {"realization_count": n, "seed": int(cfg.seed), "L": int(cfg.L),
            "max_imag_residue": float(res["imag"]),
            "total_mass": F.total_mass(), "c2_zero": transforms.cov_from_spectrum(F, 0.0)}
    if "x" in res:
        x = res["x"]
        rows = []
        for i, (r, ph) in enumerate(cfg.points):
            prod = x[:, 0] * x[:, i]
            gap = polar_to_xy(r, ph) - polar_to_xy(*cfg.points[0])
            ref = transforms.cov_from_spectrum(F, float(np.hypot(*gap)))
            se = float(prod.std(ddof=1) / math.sqrt(n))
            rows.append({"point": [r, ph], "cov_with_first": float(prod.mean()),
                         "analytic": ref, "se": se})
        summ["point_covariances"] = rows
        y = x ** 2 - summ["c2_zero"]
        wick_rows = []
        for tri in raw.get("point_triples", []):
            i, j, k = (int(v) for v in tri)
            if not all(0 <= v < len(cfg.points) for v in (i, j, k)):
                raise UsageError(f"point triple {tri} out of range")
            val, se = k_statistic([y[:, i], y[:, j], y[:, k]])
            ref = wick_cum3(F, *(polar_to_xy(*cfg.points[v]) for v in (i, j, k)))
            wick_rows.append({"points": [i, j, k], "estimate": float(val), "se": float(se),
                              "wick": ref, "z": abs(float(val) - ref) / float(se)})
        if wick_rows:
            summ["wick_third_cumulants"] = wick_rows
    if "zx" in res:
        R, N = cfg.circle
        zx, zy = res["zx"], res["zy"]
        spec = circle_spectrum(F, R, K)
        rows = []
        for ell in range(-K, K + 1):
            v = np.abs(zx[:, ell + K]) ** 2
            se = float(v.std(ddof=1) / math.sqrt(n))
            rows.append({"ell": ell, "empirical": float(v.mean()), "analytic": spec[ell],
                         "se": se, "z": abs(float(v.mean()) - spec[ell]) / se})
        summ["circle"] = {"R": R, "N": N, "spectrum": rows}
        triples = [tuple(t) for t in raw.get("triples", _default_triples(K))]
        table = []
        for est in estimate_cumulants(zy, triples, L=K):
            total = sum(est.indices)
            row = {"indices": list(est.indices), "sum": total, "re": est.value.real,
                   "im": est.value.imag, "se": est.se, "ratio": est.ratio}
            if total == 0:
                ref = wick_circle_bicoefficient(F, R, est.indices[1], est.indices[2])
                row["wick"] = ref.real
                row["flag"] = "non_gaussian" if est.ratio > 5 else ""
            else:
                row["flag"] = "selection_rule_violation" if est.ratio > 4 else ""
            table.append(row)
        summ["circle"]["squared_field_cumulants"] = table
    return summ


def cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not JSON: {exc}") from exc
    cfg = SimulationConfig.from_dict(raw)
    res, K = _simulate(cfg, raw, args.threads)
    summ = _summary(cfg, raw, res, K)
    out = Path(args.out)
    if "zx" in res:
        n = cfg.realization_count
        axes = (Axis("realization", 0, n - 1, n, "uniform"), Axis("ell", -K, K, 2 * K + 1, "uniform"))
        GridContainer(axes, res["zx"], {"quantity": "circle_coefficients", "field": "gaussian"}
                      ).save(out / "coefficients.grid")
        GridContainer(axes, res["zy"], {"quantity": "circle_coefficients", "field": "squared"}
                      ).save(out / "squared_coefficients.grid")
    if "x" in res:
        atomic_write(out / "evaluations.csv", evaluations_csv(cfg.points, res["x"]).encode())
    _write_json(out / "summary.json", summ)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    report = run_suites([args.suite], seed=args.seed, perturbation=args.perturb,
                        threads=args.threads)
    text = report_json(report)
    if args.out:
        atomic_write(args.out, text.encode())
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polyspec2d", description="Polyspectra of isotropic planar fields.")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (results do not depend on it)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bessel-int", help="closed form vs oracle for a Bessel product integral")
    b.add_argument("--orders", required=True, help="l_1,...,l_{p-1}; the last order is their sum")
    b.add_argument("--sides", required=True, help="rho_1,...,rho_p")
    b.add_argument("--method", choices=("closed", "oracle", "both"), default="both")
    b.add_argument("--abs-tol", type=float, default=5e-3)
    b.add_argument("--rel-tol", type=float, default=1e-2)
    b.add_argument("--json", action="store_true", help="print one JSON object")
    b.set_defaults(func=cmd_bessel_int)

    t = sub.add_parser("transform", help="spectrum <-> cumulant transforms on grid files")
    t.add_argument("--op", required=True, choices=("cov", "spec", "bicov", "bisp", "tricov", "cump"))
    t.add_argument("--in", dest="inp", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--params", default="{}", help="JSON object with output axes or points")
    t.add_argument("--encoding", choices=("binary", "csv"), default="binary")
    t.set_defaults(func=cmd_transform)

    s = sub.add_parser("simulate", help="Monte-Carlo realizations and summary statistics")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="run invariant suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.add_argument("--out", help="write the report here instead of stdout")
    v.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OracleUnreliableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except PolyspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
