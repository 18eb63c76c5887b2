"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected and repeated in the pytest terminal summary.
"""

import numpy as np

from sonicbvp.analysis import (
    check_comparison,
    check_field_bounds,
    fit_boundary_exponent,
    fit_left_slope,
    fit_rho0_limit,
    fit_right_weighted_slope,
    left_slope_limit,
    random_ordered_pairs,
    rho0_limit_predicted,
    right_weighted_slope_limit,
    stability_norms,
)
from sonicbvp.model import ModelState
from sonicbvp.profiles import parse_profile
from sonicbvp.solver import assemble_weak_residual, build_grid, solve_pair

RESULTS = {}

PROFILES = ("constant:2.0", "sinebump:2.0,0.5", "affine:2.0,1.0")
ALPHAS = (0.0, 5.0, 10.0)


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_criterion_01_sonic_constant_residual():
    grid = build_grid(400)
    x = grid.nodes
    worst = 0.0
    for alpha in ALPHAS:
        state = ModelState(np.ones_like(x), np.full_like(x, alpha), 1.0)
        r = assemble_weak_residual(state, np.ones_like(x), alpha, grid)
        worst = max(worst, float(np.max(np.abs(r))))
    record(1, worst == 0.0, f"max |R| = {worst:g} for n = 1, b = 1")


def test_criterion_02_existence_and_bounds(solve):
    problems = []
    for spec in PROFILES:
        b = parse_profile(spec)
        for alpha in ALPHAS:
            sol = solve(spec, alpha)
            inner = sol.n[1:-1]
            if not sol.residual_norm <= 1e-10:
                problems.append(f"{spec} a={alpha}: residual {sol.residual_norm:.2e}")
            if not (inner.min() > 1.0 and inner.max() <= b.sup_b + 1e-6):
                problems.append(f"{spec} a={alpha}: n range [{inner.min()}, {inner.max()}]")
            if sol.E[0] != alpha or not sol.E[-1] < alpha:
                problems.append(f"{spec} a={alpha}: E(0)={sol.E[0]}, E(1)={sol.E[-1]}")
    record(2, not problems, "; ".join(problems) or "9 cases converge within bounds")


def test_criterion_03_right_exponent(solve):
    fits = {}
    for spec in PROFILES:
        fits[spec] = fit_boundary_exponent(solve(spec, 5.0), "right", (0.9, 0.999))
    ok = all(abs(f.exponent - 0.5) <= 0.05 and f.r2 >= 0.99 for f in fits.values())
    detail = ", ".join(f"{s}: p={f.exponent:.4f} r2={f.r2:.4f}" for s, f in fits.items())
    record(3, ok, detail)


def test_criterion_04_left_slope(solve):
    A = left_slope_limit(2.0, 5.0)
    errs = [abs(fit_left_slope(solve("constant:2.0", 5.0, N)) - A) / A for N in (400, 800)]
    ok = errs[0] <= 0.02 and errs[1] < errs[0]
    record(4, ok, f"A = {A:.7f}, rel err N=400 {errs[0]:.2e}, N=800 {errs[1]:.2e}")


def test_criterion_05_right_weighted_slope(solve):
    parts, ok = [], True
    for spec in PROFILES:
        sol = solve(spec, 5.0)
        b = parse_profile(spec)
        B = right_weighted_slope_limit(sol, b)
        rel = abs(fit_right_weighted_slope(sol) - B) / abs(B)
        gap = abs(B**2 - 0.25 * (5.0 - sol.E[-1]))
        ok &= rel <= 0.02 and gap <= 1e-8
        parts.append(f"{spec}: rel {rel:.2e}, identity {gap:.1e}")
    record(5, ok, ", ".join(parts))


def test_criterion_06_comparison_principle():
    worst = np.inf
    for b1, b2, alpha in random_ordered_pairs(seed=42, count=20):
        s1, s2 = solve_pair(b1, b2, alpha)
        worst = min(worst, check_comparison(s1, s2).worst_value)
    record(6, worst >= -1e-8, f"min(n1 - n2) over 20 pairs = {worst:.3e}")


def test_criterion_07_uniqueness(solve):
    base = solve("constant:2.0", 5.0)
    other = solve("constant:2.0", 5.0, 400, 1.5)
    d = float(np.max(np.abs(base.n - other.n)))
    record(7, d <= 1e-9, f"sup |n - n'| = {d:.2e} from amplitude x1.5")


def _sweep(solve, eps_list=(1e-2, 1e-3, 1e-4), base=2.5, alpha=6.0):
    b1 = parse_profile(f"constant:{base}")
    s1 = solve(f"constant:{base}", alpha)
    cells = []
    for eps in eps_list:
        spec2 = f"constant:{base - eps}"
        b2 = parse_profile(spec2)
        s2 = solve(spec2, alpha)
        cells.append((eps, b1, b2, s1, s2, stability_norms(s1, s2, b1, b2)))
    return cells


def test_criterion_08_structural_stability(solve):
    ratios = [rep.ratio for *_, rep in _sweep(solve)]
    finite = all(r is not None and np.isfinite(r) for r in ratios)
    spread = max(ratios) / min(ratios) if finite else np.inf
    record(8, finite and spread < 2.0,
           "ratios " + ", ".join(f"{r:.4f}" for r in ratios) + f", spread {spread:.4f}")


def test_criterion_09_field_bounds(solve):
    problems = []
    for eps, b1, b2, s1, s2, rep in _sweep(solve):
        for sol, b in ((s1, b1), (s2, b2)):
            fb = check_field_bounds(sol, b)
            if fb.max_abs_E > fb.E_bound:
                problems.append(f"eps={eps}: max|E| {fb.max_abs_E} > {fb.E_bound}")
        if not rep.e1_minus_e2_at_1 <= rep.ratio * eps:
            problems.append(f"eps={eps}: |dE(1)| {rep.e1_minus_e2_at_1:.3e} > {rep.ratio * eps:.3e}")
    record(9, not problems, "; ".join(problems) or "all sweep cells within bounds")


def test_criterion_10_rho0_limit(solve):
    sol = solve("constant:2.0", 5.0)
    pred = rho0_limit_predicted(2.0, 5.0)
    fit = fit_rho0_limit(sol)
    rel = abs(fit - pred) / abs(pred)
    record(10, fit < 5.0 and rel <= 0.05, f"rho0(0+) = {fit:.6f}, predicted {pred:.6f}, rel {rel:.2e}")


def test_criterion_11_convergence_discipline(solve):
    sols = [solve("constant:2.0", 5.0, N) for N in (200, 400, 800, 1600)]
    cauchy = [float(np.max(np.abs(f.n[::2] - c.n))) for c, f in zip(sols, sols[1:])]
    factors = [a / b for a, b in zip(cauchy, cauchy[1:])]
    stages = [s.n for s in sols[1].stages]
    stage_diffs = [float(np.max(np.abs(b - a))) for a, b in zip(stages, stages[1:])]
    shrinking = all(b < a for a, b in zip(stage_diffs, stage_diffs[1:]))
    ok = all(f >= 1.8 for f in factors) and shrinking
    record(11, ok, "refinement factors " + ", ".join(f"{f:.2f}" for f in factors)
           + "; stage diffs " + ", ".join(f"{d:.1e}" for d in stage_diffs))
