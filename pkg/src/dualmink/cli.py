"""Command-line harness: solve, verify, sweep, plot, manufacture.

Exit status is the contract: 0 means converged (solve), every certified
inequality held (verify), or every row finished clean (sweep); anything else is
nonzero with diagnostics written where possible.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from dualmink import io, verify
from dualmink.body import SupportFunction, evaluate_geometry
from dualmink.config import RunConfig, load_run_config, load_sweep_spec
from dualmink.fspec import exact_support_values, parse_density
from dualmink.io import DocumentError
from dualmink.solve import solve_homotopy
from dualmink.sphere import build_grid


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DocumentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualmink",
        description="solve and verify prescribed dual curvature measures on S^1/S^2")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("solve", help="run one homotopy solve from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--override-q-range", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify the inequalities on a solve result")
    p.add_argument("--result", required=True)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--ntests", type=int, default=20,
                   help="random test functions in the spectral battery")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a q/amplitude/mode matrix of solves")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default="sweep")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--override-q-range", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a figure for a converged result")
    p.add_argument("--result", required=True)
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("manufacture",
                       help="emit the exact density of an analytic body at index q")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--resolution", required=True, help="N for S^1, NLATxNLON for S^2")
    p.add_argument("--body", required=True,
                   help="ball(r) | ellipse(a,b) | ellipsoid(a1,a2,a3)")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_manufacture)
    return parser


def parse_resolution(dim: int, text: str):
    if dim == 1:
        return int(text)
    parts = text.replace("x", ",").split(",")
    return [int(p) for p in parts]


def run_solve(cfg: RunConfig):
    """Solve one configured problem; returns (result, result document)."""
    grid = cfg.build_grid()
    f = cfg.density.sample(grid, cfg.q)
    result = solve_homotopy(grid, f, cfg.q, cfg.solver)
    doc = io.result_to_doc(result, cfg.to_doc(), f)
    return result, doc


def cmd_solve(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.override_q_range:
        cfg.solver.override_q_range = True
    result, doc = run_solve(cfg)
    out = io.write_document(Path(args.out) / "result.json", doc)
    status = "converged" if result.converged else f"FAILED: {result.failure_reason}"
    print(f"{status}  residual_sup={result.residual_sup:.3e}  -> {out}")
    return 0 if result.converged else 1


def verification_battery(h: SupportFunction, f, q: float, seed: int,
                         ntests: int = 20, newton_tol: float = 1e-11) -> dict:
    """Run every certificate on one body and collect a report document."""
    grid = h.grid
    n = grid.dim
    rng = np.random.default_rng(seed)
    stability = verify.check_stability(h, q)
    dirichlet = verify.check_dirichlet_comparison(h, q)
    spectral_fail = 0
    spectral_worst = np.inf
    for _ in range(ntests):
        chk = verify.check_spectral_inequality(h, verify.random_even_field(grid, rng))
        spectral_fail += 0 if chk.passed else 1
        spectral_worst = min(spectral_worst, chk.rhs - chk.lhs)
    x_alpha = verify.check_radial_moment_inequality(h, q - n - 1.0)
    poincare_fail = 0
    for _ in range(ntests):
        if not verify.poincare_check(grid, verify.random_even_field(grid, rng)).passed:
            poincare_fail += 1
    bounds = verify.c0_c1_report(h, q)
    geom = evaluate_geometry(h)
    dens = verify.dual_density(geom, q)
    certificate = float(np.max(np.abs(dens.values / np.asarray(f) - 1.0)))
    passed = (stability.passed and dirichlet.passed and spectral_fail == 0
              and x_alpha.passed and poincare_fail == 0
              and certificate <= 10.0 * newton_tol)
    return {
        "schema": io.REPORT_SCHEMA,
        "q": q,
        "seed": seed,
        "passed": bool(passed),
        "stability": vars(stability),
        "dirichlet_comparison": vars(dirichlet),
        "spectral_battery": {"ntests": ntests, "failures": spectral_fail,
                             "worst_margin": float(spectral_worst)},
        "radial_moment": vars(x_alpha),
        "poincare_battery": {"ntests": ntests, "failures": poincare_fail},
        "bounds": vars(bounds),
        "density": {"max": dens.max, "min": dens.min, "ratio": dens.ratio},
        "residual_certificate": certificate,
    }


def cmd_verify(args) -> int:
    doc = io.load_result(args.result)
    if not doc["converged"]:
        print("error: result did not converge; nothing to verify", file=sys.stderr)
        return 2
    h = io.result_support(doc)
    f = np.array(doc["f"], dtype=float)
    q = float(doc["q"])
    seed = args.seed if args.seed is not None else doc["config"].get("seed", 0)
    tol = doc.get("newton_tol") or 1e-10
    report = verification_battery(h, f, q, seed, ntests=args.ntests, newton_tol=tol)

    out = Path(args.out)
    io.write_document(out / "report.json", report)
    geom = evaluate_geometry(h)
    dens = verify.dual_density(geom, q)
    io.write_density_csv(out / "density.csv", h.grid, dens.values)
    from dualmink import plots
    plots.render_verify_figure(h, dens.values, report["stability"]["bound"],
                               report["stability"]["delta2"], out / "report.svg")
    flag = "pass" if report["passed"] else "FAIL"
    print(f"{flag}  delta2={report['stability']['delta2']:.3e}  "
          f"bound={report['stability']['bound']:.3e}  -> {out / 'report.json'}")
    return 0 if report["passed"] else 1


def _sweep_row(task):
    """One sweep row; importable at top level so worker processes can run it."""
    index, label, cfg_doc, override = task
    row = {"n": cfg_doc["dim"], "q": label["q"], "epsilon": label["epsilon"],
           "mode": label["mode"], "converged": False, "sup_h_minus_1": None,
           "h_ratio": None, "density_ratio": None, "delta2": None,
           "stability_bound": None, "stability_pass": None}
    try:
        cfg = RunConfig.from_doc(cfg_doc)
        if override:
            cfg.solver.override_q_range = True
        result, doc = run_solve(cfg)
        row["converged"] = bool(result.converged)
        if result.converged:
            h = result.h
            row["sup_h_minus_1"] = float(np.max(np.abs(h.values - 1.0)))
            stab = verify.check_stability(h, cfg.q)
            row["h_ratio"] = verify.c0_c1_report(h, cfg.q).h_ratio
            row["density_ratio"] = stab.ratio
            row["delta2"] = stab.delta2
            row["stability_bound"] = stab.bound
            row["stability_pass"] = bool(stab.passed)
        return index, row, doc, None
    except Exception as exc:          # noqa: BLE001 - row failures must not kill the sweep
        return index, row, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    matrix = spec.run_matrix()
    out = Path(args.out)
    tasks = [(i, label, cfg.to_doc(), args.override_q_range)
             for i, (label, cfg) in enumerate(matrix)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(_sweep_row, tasks))
    else:
        outcomes = [_sweep_row(t) for t in tasks]
    outcomes.sort(key=lambda item: item[0])

    rows = []
    clean = True
    for index, row, doc, error in outcomes:
        rows.append(row)
        if doc is not None:
            io.write_document(out / f"run_{index:03d}" / "result.json", doc)
        if error is not None:
            io.write_document(out / f"run_{index:03d}" / "error.json",
                              {"error": error})
        ok = row["converged"] and row.get("stability_pass")
        clean = clean and bool(ok) and error is None
    io.write_sweep_csv(out / "summary.csv", rows)
    from dualmink import plots
    plots.render_sweep_figure(rows, out / "summary.svg")
    n_ok = sum(1 for r in rows if r["converged"])
    print(f"{n_ok}/{len(rows)} rows converged  -> {out / 'summary.csv'}")
    return 0 if clean else 1


def cmd_plot(args) -> int:
    doc = io.load_result(args.result)
    if not doc["converged"]:
        print("error: refusing to plot a nonconverged result", file=sys.stderr)
        return 2
    h = io.result_support(doc)
    from dualmink import plots
    path = plots.render_result_figure(h, np.array(doc["f"], dtype=float),
                                      float(doc["q"]), args.out)
    print(f"figure -> {path}")
    return 0


def cmd_manufacture(args) -> int:
    resolution = parse_resolution(args.dim, args.resolution)
    grid = build_grid(args.dim, resolution if args.dim == 1 else tuple(resolution))
    spec = parse_density(f"manufacture:{args.body}", args.dim)
    f = spec.sample(grid, args.q)
    doc = {
        "schema": io.DENSITY_SCHEMA,
        "dim": args.dim,
        "resolution": io.resolution_to_doc(grid),
        "q": args.q,
        "body": args.body,
        "f": [float(v) for v in f],
        "h_exact": [float(v) for v in exact_support_values(spec.body, grid)],
    }
    path = io.write_document(args.out, doc)
    print(f"density -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
