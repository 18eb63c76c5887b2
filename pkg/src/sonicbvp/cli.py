"""Command-line entry point: ``sonicbvp {solve,verify,compare,sweep}``.

Exit codes: 0 success, 1 input error, 2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    RIGHT_WINDOW,
    AsymptoticsTolerances,
    _random_profile,
    asymptotics_report,
    check_comparison,
    check_field_bounds,
    estimate_intrinsic_radii,
    fit_boundary_exponent,
    stability_norms,
    weighted_difference_limit,
)
from .exceptions import ConvergenceError, InvariantError, SonicBVPError
from .profiles import ProfileOrder, parse_profile, profile_order
from .solver import (
    DEFAULT_J_SCHEDULE,
    SolutionPair,
    SolveOptions,
    build_grid,
    continuation_solve,
    solve_pair,
    write_solution_csv,
)
from .validation import check_alpha

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3

log = logging.getLogger("sonicbvp")


class InputError(Exception):
    pass


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _window(text):
    vals = _float_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("window needs two numbers 'lo,hi'")
    return tuple(vals)


def _add_solver_flags(p):
    p.add_argument("--alpha", type=float, default=5.0, help="relaxation parameter alpha >= 0")
    p.add_argument("--N", type=int, default=400, help="number of grid cells")
    p.add_argument("--grading-exponent", type=float, default=2.0)
    p.add_argument("--j-schedule", type=_float_list, default=list(DEFAULT_J_SCHEDULE))
    p.add_argument("--newton-tol", type=float, default=1e-10)
    p.add_argument("--max-newton-iters", type=int, default=50)
    p.add_argument("--damping-min", type=float, default=2.0**-20)
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sonicbvp",
        description="Interior subsonic steady states with sonic boundary: solve and verify.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for one doping profile")
    p.add_argument("--profile", required=True, help="e.g. constant:2.0, sinebump:2,0.5, or an x,b CSV")
    _add_solver_flags(p)

    p = sub.add_parser("verify", help="solve and check the boundary asymptotics and field bounds")
    p.add_argument("--profile", required=False, default=None)
    _add_solver_flags(p)
    p.add_argument("--slope-rtol", type=float, default=0.02)
    p.add_argument("--weighted-slope-rtol", type=float, default=0.02)
    p.add_argument("--identity-tol", type=float, default=1e-8)
    p.add_argument("--exponent-tol", type=float, default=0.05)
    p.add_argument("--min-r2", type=float, default=0.99)
    p.add_argument("--rho0-rtol", type=float, default=0.05)
    p.add_argument("--right-window", type=_window, default=RIGHT_WINDOW,
                   help="window lo,hi for the right exponent fit")
    p.add_argument("--weighted-slope-window", type=_window, default=RIGHT_WINDOW,
                   help="window lo,hi for the weighted slope extrapolation")
    p.add_argument("--synthetic-power-law", action="store_true",
                   help="test hook: fit an exact power law instead of solving")

    p = sub.add_parser("compare", help="structural stability of two ordered profiles")
    p.add_argument("profiles", nargs=2, metavar="PROFILE")
    _add_solver_flags(p)
    p.add_argument("--strict-order", action="store_true",
                   help="reject profiles given in dominated order instead of swapping them")
    p.add_argument("--comparison-tol", type=float, default=1e-8)

    p = sub.add_parser("sweep", help="compare b against b - eps over an (alpha, eps) grid")
    p.add_argument("--base", default="constant:2.0",
                   help="base profile spec, or 'random' to draw one with --seed")
    p.add_argument("--eps", type=_float_list, default=[1e-2, 1e-3, 1e-4])
    p.add_argument("--alphas", type=_float_list, default=[6.0])
    p.add_argument("--jobs", type=int, default=1)
    _add_solver_flags(p)
    p.add_argument("--comparison-tol", type=float, default=1e-8)
    return parser


def _options(args):
    return SolveOptions(
        N=args.N,
        grading_exponent=args.grading_exponent,
        j_schedule=tuple(args.j_schedule),
        newton_tol=args.newton_tol,
        max_newton_iters=args.max_newton_iters,
        damping_min=args.damping_min,
    )


def _resolved_config(args, out):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "verbose", "out")}
    cfg["out"] = str(out)
    return _jsonable(cfg)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _out_dir(args):
    out = args.out or Path("out") / f"{args.command}-{datetime.now():%Y%m%d-%H%M%S}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _solve_summary(sol):
    return {
        "residual_norm": sol.residual_norm,
        "j_final": sol.j_final,
        "profile_id": sol.profile_id,
        "stages": [
            {"j": st.j, "iterations": st.iterations, "residual_norm": st.residual_norm}
            for st in sol.stages
        ],
    }


def cmd_solve(args):
    profile = parse_profile(args.profile)
    alpha = check_alpha(args.alpha)
    opts = _options(args)
    out = _out_dir(args)
    sol = continuation_solve(profile, alpha, opts)
    write_solution_csv(sol, out / "solution.csv")
    report = {
        "config": _resolved_config(args, out),
        "solver": _solve_summary(sol),
        "bounds": check_field_bounds(sol, profile).to_dict(),
        "n_min_interior": float(sol.n[1:-1].min()),
        "n_max": float(sol.n.max()),
        "sup_b": profile.sup_b,
    }
    _write_json(out / "solve_report.json", report)
    print(f"solution written to {out}")
    return EXIT_OK


def _tolerances(args):
    return AsymptoticsTolerances(
        slope_rtol=args.slope_rtol,
        weighted_slope_rtol=args.weighted_slope_rtol,
        identity_tol=args.identity_tol,
        exponent_tol=args.exponent_tol,
        min_r2=args.min_r2,
        rho0_rtol=args.rho0_rtol,
        right_window=tuple(args.right_window),
        weighted_slope_window=tuple(args.weighted_slope_window),
    )


def _synthetic_verify(args, out):
    grid = build_grid(args.N, args.grading_exponent)
    x = grid.nodes
    n = 1.0 + 3.0 * np.sqrt(1.0 - x)
    n[-1] = 1.0
    sol = SolutionPair(grid, n, np.zeros_like(x), alpha=0.0, profile_id="synthetic-power-law")
    tol = _tolerances(args)
    fit = fit_boundary_exponent(sol, "right", tol.right_window)
    checks = {
        "right_exponent": abs(fit.exponent - tol.exponent_target) <= tol.exponent_tol
        and fit.r2 >= tol.min_r2,
    }
    report = {
        "config": _resolved_config(args, out),
        "synthetic": True,
        "right_fit": fit.to_dict(),
        "checks": checks,
    }
    _write_json(out / "asymptotics_report.json", report)
    return [k for k, ok in checks.items() if not ok]


def cmd_verify(args):
    check_alpha(args.alpha)
    out = _out_dir(args)
    if args.synthetic_power_law:
        failed = _synthetic_verify(args, out)
    else:
        if args.profile is None:
            raise InputError("verify requires --profile")
        profile = parse_profile(args.profile)
        sol = continuation_solve(profile, check_alpha(args.alpha), _options(args))
        asym = asymptotics_report(sol, profile, _tolerances(args))
        bounds = check_field_bounds(sol, profile)
        if asym.A_applicable is False:
            log.info("left slope formula not applicable (alpha below threshold); check skipped")
        failed = asym.failed_checks() + [f"bounds:{f}" for f in bounds.failures]
        report = {
            "config": _resolved_config(args, out),
            "solver": _solve_summary(sol),
            "asymptotics": asym.to_dict(),
            "bounds": bounds.to_dict(),
            "failed_checks": failed,
            "passed": not failed,
        }
        _write_json(out / "asymptotics_report.json", report)
    if failed:
        print("verification failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    print(f"all checks passed; report in {out}")
    return EXIT_OK


def cmd_compare(args):
    b1, b2 = (parse_profile(s) for s in args.profiles)
    alpha = check_alpha(args.alpha)
    opts = _options(args)
    order = profile_order(b1, b2, n_grid=opts.N)
    swapped = False
    if order is ProfileOrder.INCOMPARABLE:
        raise InputError(
            "profiles are not pointwise ordered; the comparison principle needs b1 >= b2 > 1"
        )
    if order is ProfileOrder.DOMINATED:
        if args.strict_order:
            raise InputError("first profile must dominate the second (--strict-order)")
        b1, b2, swapped = b2, b1, True
    out = _out_dir(args)
    sol1, sol2 = solve_pair(b1, b2, alpha, opts)
    comparison = check_comparison(sol1, sol2, ProfileOrder.DOMINATES, args.comparison_tol)
    norms = stability_norms(sol1, sol2, b1, b2, tol=args.comparison_tol)
    radii = estimate_intrinsic_radii(sol1, sol2, b1, b2, norms)
    report = {
        "config": _resolved_config(args, out),
        "profiles": {"b1": b1.label, "b2": b2.label, "swapped": swapped},
        "comparison": comparison.to_dict(),
        "stability": norms.to_dict(),
        "intrinsic_radii": {"delta0_hat": radii[0], "delta1_hat": radii[1]},
        "weighted_limit_at_1": weighted_difference_limit(sol1, sol2).to_dict(),
        "bounds": {
            "b1": check_field_bounds(sol1, b1).to_dict(),
            "b2": check_field_bounds(sol2, b2).to_dict(),
        },
    }
    _write_json(out / "stability_report.json", report)
    if not norms.comparison_ok:
        print(f"comparison failed: min(n1 - n2) = {norms.min_n_diff:.3e}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"comparison holds; report in {out}")
    return EXIT_OK


SWEEP_COLUMNS = ["alpha", "eps", "sup_n_diff", "weighted_deriv_diff", "E_c1_diff", "ratio", "status"]


def _sweep_cell(cell):
    """Run one (alpha, eps) comparison; never raises."""
    base, alpha, eps, opts, tol = cell
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(alpha=alpha, eps=eps)
    if eps == 0:
        row["status"] = "degenerate_eps"
        return row
    try:
        lower = base.shifted(-eps)
        s1, s2 = solve_pair(base, lower, alpha, opts)
        rep = stability_norms(s1, s2, base, lower, tol=tol)
    except (ConvergenceError, InvariantError) as exc:
        row["status"] = f"solver_failure: {exc}"
        return row
    except SonicBVPError as exc:
        row["status"] = f"input_error: {exc}"
        return row
    row.update(
        sup_n_diff=rep.sup_n_diff,
        weighted_deriv_diff=rep.weighted_deriv_diff,
        E_c1_diff=rep.E_c1_diff,
        ratio=rep.ratio,
        status="ok" if rep.comparison_ok else "comparison_failed",
    )
    return row


def cmd_sweep(args):
    if args.base == "random":
        base = _random_profile(np.random.default_rng(args.seed))
    else:
        base = parse_profile(args.base)
    alphas = [check_alpha(a) for a in args.alphas]
    if any(e < 0 for e in args.eps):
        raise InputError("eps values must be nonnegative")
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    opts = _options(args)
    out = _out_dir(args)
    cells = [(base, a, e, opts, args.comparison_tol) for a in alphas for e in args.eps]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for k, v in row.items()})
    failed = [r for r in rows if r["status"] not in ("ok", "degenerate_eps")]
    _write_json(out / "sweep_report.json", {
        "config": _resolved_config(args, out),
        "base_profile": base.label,
        "rows": len(rows),
        "failed_rows": len(failed),
    })
    if failed:
        print(f"{len(failed)} sweep cell(s) failed; see {out / 'sweep.csv'}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"sweep written to {out / 'sweep.csv'}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for solver failures here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConvergenceError, InvariantError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, SonicBVPError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
