"""Post-processing of computed solutions: boundary asymptotics, field bounds,
comparison of ordered pairs and structural-stability norms.

Every check returns a report object with pass/fail information instead of
raising, so sweeps can aggregate partial failures.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import (
    DomainError,
    IncomparableGridsError,
    InconsistencyError,
    InsufficientDataError,
)
from .model import centered_derivative, weighted_ratio_fields
from .profiles import (
    DopingProfile,
    ProfileOrder,
    profile_order,
    profile_sup_distance,
)

RIGHT_WINDOW = (1.0 - 1e-1, 1.0 - 1e-3)
LEFT_WINDOW = (1e-3, 1e-1)
MIN_FIT_NODES = 8
BOUNDARY_SKIP = 2
RADIUS_CAP = 0.5
NEAR_THRESHOLD = 0.10


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, ProfileOrder):
        return obj.value
    return obj


class _Report:
    def to_dict(self):
        return _to_jsonable(asdict(self))


# ---------------------------------------------------------------------------
# left endpoint


def slope_threshold(b0):
    """Smallest alpha for which the closed-form left slope is real."""
    return 2.0 * math.sqrt(2.0) * math.sqrt(b0 - 1.0)


def left_slope_limit(b0: float, alpha: float) -> float | None:
    """Limit of ``n_x`` at x -> 0+, or None below the applicability threshold.

    The limit solves ``2 A**2 - alpha A + (b0 - 1) = 0``; the smaller root is
    the one realized by the interior subsonic solution.  It is evaluated as
    ``2 (b0 - 1) / (alpha + sqrt(disc))`` to avoid cancellation.
    """
    b0, alpha = float(b0), float(alpha)
    if not b0 > 1.0:
        raise DomainError(f"b(0) must exceed 1, got {b0!r}")
    if alpha < slope_threshold(b0):
        return None
    disc = max(alpha * alpha - 8.0 * (b0 - 1.0), 0.0)
    return 2.0 * (b0 - 1.0) / (alpha + math.sqrt(disc))


def fit_left_slope(sol, n_points=MIN_FIT_NODES):
    """Extrapolated ``n_x(0+)`` from the first ``n_points`` interior nodes.

    The forward differences ``(n_k - n_0) / x_k`` approach the limit like
    ``A + c x_k + O(x_k**2)``; a least-squares quadratic in ``x_k`` evaluated
    at zero removes the first two error terms.
    """
    x, n = sol.x, sol.n
    if len(x) < n_points + 2:
        raise InsufficientDataError("grid too small for the left slope fit")
    xs = x[1 : n_points + 1]
    diffs = (n[1 : n_points + 1] - n[0]) / (xs - x[0])
    return float(np.polyval(np.polyfit(xs, diffs, 2), 0.0))


def fit_rho0_limit(sol, n_points=MIN_FIT_NODES):
    """Extrapolated limit of ``(E - alpha/n)/(n - 1)`` at x -> 0+."""
    rf = weighted_ratio_fields(sol.x, sol.state(), sol.alpha)
    xs = rf.x_left[BOUNDARY_SKIP : BOUNDARY_SKIP + n_points]
    ys = rf.rho0[BOUNDARY_SKIP : BOUNDARY_SKIP + n_points]
    if len(xs) < n_points:
        raise InsufficientDataError("too few nodes near x = 0 for the ratio limit")
    return float(np.polyval(np.polyfit(xs, ys, 2), 0.0))


def rho0_limit_predicted(b0, alpha):
    """``alpha + (1 - b0)/A``; None where the left slope formula does not apply."""
    A = left_slope_limit(b0, alpha)
    if A is None:
        return None
    return alpha + (1.0 - b0) / A


# ---------------------------------------------------------------------------
# right endpoint


def right_weighted_slope_limit(sol, b) -> float:
    """Predicted limit of ``sqrt(1-x) n_x`` at x -> 1-: ``-sqrt(int (b - n)) / 2``."""
    x = sol.x
    b_vals = b(x) if callable(b) else np.broadcast_to(np.asarray(b, dtype=float), x.shape)
    deficit = float(trapezoid(b_vals - sol.n, x))
    if deficit < 0:
        raise InconsistencyError(
            f"int (b - n) = {deficit:.3e} < 0 contradicts E(1) < alpha"
        )
    return -0.5 * math.sqrt(deficit)


def _window_mask(x, window):
    lo, hi = window
    idx = np.arange(len(x))
    last = len(x) - 1
    mask = (x > lo) & (x < hi)
    mask &= (idx > BOUNDARY_SKIP) & (idx < last - BOUNDARY_SKIP)
    return mask


def fit_right_weighted_slope(sol, window=RIGHT_WINDOW, degree=3):
    """Extrapolated ``sqrt(1-x) n_x`` at x -> 1- from a polynomial fit in ``sqrt(1-x)``.

    ``n - 1`` expands in powers of ``s = sqrt(1-x)``, so ``s n_x`` is smooth
    in ``s``; over the default window a cubic keeps the truncation error well
    under one percent.
    """
    x = sol.x
    mask = _window_mask(x, window)[1:-1]
    xi = x[1:-1][mask]
    if len(xi) < MIN_FIT_NODES:
        raise InsufficientDataError(f"{len(xi)} nodes in window {window}, need {MIN_FIT_NODES}")
    s = np.sqrt(1.0 - xi)
    y = s * sol.nx()[mask]
    return float(np.polyval(np.polyfit(s, y, degree), 0.0))


@dataclass
class ExponentFit(_Report):
    coefficient: float
    exponent: float
    r2: float
    n_points: int


def fit_boundary_exponent(sol, endpoint="right", window=None) -> ExponentFit:
    """Least-squares fit of ``log(n - 1)`` against ``log(d)``.

    ``d = x`` at the left endpoint and ``d = 1 - x`` at the right one; the two
    nodes nearest each boundary are excluded.
    """
    if endpoint not in ("left", "right"):
        raise DomainError(f"endpoint must be 'left' or 'right', got {endpoint!r}")
    if window is None:
        window = RIGHT_WINDOW if endpoint == "right" else LEFT_WINDOW
    lo, hi = window
    if not 0.0 < lo < hi < 1.0:
        raise DomainError(f"window {window} must lie inside (0, 1)")
    x, n = sol.x, sol.n
    mask = _window_mask(x, window)
    if mask.sum() < MIN_FIT_NODES:
        raise InsufficientDataError(
            f"{int(mask.sum())} nodes in window {window}, need {MIN_FIT_NODES}"
        )
    d = x[mask] if endpoint == "left" else 1.0 - x[mask]
    u = n[mask] - 1.0
    if np.any(u <= 0):
        raise InsufficientDataError("n - 1 must be positive inside the fit window")
    ld, lu = np.log(d), np.log(u)
    slope, intercept = np.polyfit(ld, lu, 1)
    resid = lu - (slope * ld + intercept)
    ss_tot = float(np.sum((lu - lu.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(math.exp(intercept)), float(slope), r2, int(mask.sum()))


def estimate_lower_amplitude(sol):
    """Largest m with ``n >= 1 + m sin(pi x)`` on the interior nodes."""
    x, n = sol.x[1:-1], sol.n[1:-1]
    return float(np.min((n - 1.0) / np.sin(np.pi * x)))


@dataclass(frozen=True)
class AsymptoticsTolerances:
    slope_rtol: float = 0.02
    weighted_slope_rtol: float = 0.02
    identity_tol: float = 1e-8
    exponent_target: float = 0.5
    exponent_tol: float = 0.05
    min_r2: float = 0.99
    rho0_rtol: float = 0.05
    # exponent fits; the weighted slope extrapolation keeps its own window
    right_window: tuple[float, float] = RIGHT_WINDOW
    left_window: tuple[float, float] = LEFT_WINDOW
    weighted_slope_window: tuple[float, float] = RIGHT_WINDOW


@dataclass
class AsymptoticsReport(_Report):
    alpha: float
    b0: float
    A_predicted: float | None
    A_fitted: float
    A_applicable: bool
    A_near_threshold: bool
    B_predicted: float
    B_fitted: float
    B_identity_gap: float
    left_exponent: float
    left_r2: float
    right_exponent: float
    right_coefficient: float
    right_r2: float
    rho0_limit_predicted: float | None
    rho0_limit_fitted: float
    m_estimate: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v for v in self.checks.values() if v is not None)

    def failed_checks(self):
        return [k for k, v in self.checks.items() if v is False]


def asymptotics_report(sol, b: DopingProfile, tol=None) -> AsymptoticsReport:
    tol = tol or AsymptoticsTolerances()
    alpha = sol.alpha
    b0 = float(b(0.0))
    A_pred = left_slope_limit(b0, alpha)
    near = A_pred is not None and alpha < (1.0 + NEAR_THRESHOLD) * slope_threshold(b0)
    A_fit = fit_left_slope(sol)
    B_pred = right_weighted_slope_limit(sol, b)
    B_fit = fit_right_weighted_slope(sol, tol.weighted_slope_window)
    identity_gap = abs(B_pred**2 - 0.25 * (alpha - float(sol.E[-1])))
    left = fit_boundary_exponent(sol, "left", tol.left_window)
    right = fit_boundary_exponent(sol, "right", tol.right_window)
    rho_pred = rho0_limit_predicted(b0, alpha)
    rho_fit = fit_rho0_limit(sol)

    checks = {}
    # closed-form agreement is only asserted clear of the applicability threshold
    if A_pred is None or near:
        checks["left_slope"] = None
        checks["rho0_limit"] = None
    else:
        checks["left_slope"] = abs(A_fit - A_pred) <= tol.slope_rtol * A_pred
        checks["rho0_limit"] = bool(
            rho_fit < alpha and abs(rho_fit - rho_pred) <= tol.rho0_rtol * abs(rho_pred)
        )
    checks["B_negative"] = B_pred < 0
    # the closed form for B assumes the boundary flux at x = 0 equals alpha, which
    # fails when the left end carries its own square-root layer (below threshold)
    if A_pred is None:
        checks["right_weighted_slope"] = None
    else:
        checks["right_weighted_slope"] = abs(B_fit - B_pred) <= tol.weighted_slope_rtol * abs(B_pred)
    checks["B_identity"] = identity_gap <= tol.identity_tol
    checks["right_exponent"] = bool(
        abs(right.exponent - tol.exponent_target) <= tol.exponent_tol and right.r2 >= tol.min_r2
    )
    return AsymptoticsReport(
        alpha=alpha,
        b0=b0,
        A_predicted=A_pred,
        A_fitted=A_fit,
        A_applicable=A_pred is not None,
        A_near_threshold=near,
        B_predicted=B_pred,
        B_fitted=B_fit,
        B_identity_gap=identity_gap,
        left_exponent=left.exponent,
        left_r2=left.r2,
        right_exponent=right.exponent,
        right_coefficient=right.coefficient,
        right_r2=right.r2,
        rho0_limit_predicted=rho_pred,
        rho0_limit_fitted=rho_fit,
        m_estimate=estimate_lower_amplitude(sol),
        checks={k: (None if v is None else bool(v)) for k, v in checks.items()},
    )


# ---------------------------------------------------------------------------
# field bounds


@dataclass
class FieldBoundsReport(_Report):
    max_abs_E: float
    E_bound: float
    E0: float
    E1: float
    alpha: float
    bound_margin: float
    E1_margin: float
    passed: bool
    failures: list = field(default_factory=list)


def check_field_bounds(sol, b: DopingProfile) -> FieldBoundsReport:
    """``max |E| <= alpha + 2 sup b``, ``E(0) = alpha`` and ``E(1) < alpha``."""
    alpha = sol.alpha
    bound = alpha + 2.0 * b.sup_b
    max_abs = float(np.max(np.abs(sol.E)))
    E0, E1 = float(sol.E[0]), float(sol.E[-1])
    failures = []
    if max_abs > bound:
        failures.append("field_bound")
    if E0 != alpha:
        failures.append("E0_equals_alpha")
    if not E1 < alpha:
        failures.append("E1_below_alpha")
    return FieldBoundsReport(
        max_abs_E=max_abs,
        E_bound=bound,
        E0=E0,
        E1=E1,
        alpha=alpha,
        bound_margin=bound - max_abs,
        E1_margin=alpha - E1,
        passed=not failures,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# pairs


def _require_same_grid(sol1, sol2):
    if sol1.grid != sol2.grid:
        raise IncomparableGridsError("solutions live on different grids")


@dataclass
class ComparisonResult(_Report):
    ok: bool
    worst_index: int
    worst_x: float
    worst_value: float


def check_comparison(sol1, sol2, order=ProfileOrder.DOMINATES, tol=1e-8) -> ComparisonResult:
    """Whether ``n1 >= n2 - tol`` at every node, for a pair with ``b1 >= b2``."""
    _require_same_grid(sol1, sol2)
    if ProfileOrder(order) is not ProfileOrder.DOMINATES:
        raise DomainError(f"comparison requires b1 to dominate b2, got {order}")
    diff = sol1.n - sol2.n
    k = int(np.argmin(diff))
    return ComparisonResult(
        ok=bool(diff[k] >= -tol), worst_index=k, worst_x=float(sol1.x[k]), worst_value=float(diff[k])
    )


@dataclass
class StabilityReport(_Report):
    sup_n_diff: float
    weighted_deriv_diff: float
    E_c1_diff: float
    b_dist: float
    ratio: float | None
    comparison_ok: bool
    e1_minus_e2_at_1: float
    order: str = ProfileOrder.DOMINATES.value
    min_n_diff: float = 0.0

    @property
    def numerator(self):
        return self.sup_n_diff + self.weighted_deriv_diff + self.E_c1_diff


def stability_norms(sol1, sol2, b1, b2, tol=1e-8) -> StabilityReport:
    """Discrete versions of the three solution norms bounded by ``C ||b1 - b2||``."""
    _require_same_grid(sol1, sol2)
    x = sol1.x
    dn = sol1.n - sol2.n
    dE = sol1.E - sol2.E
    weighted = np.sqrt(1.0 - x[1:-1]) * centered_derivative(x, dn)
    weighted = weighted[BOUNDARY_SKIP:-BOUNDARY_SKIP]
    sup_n = float(np.max(np.abs(dn)))
    wdd = float(np.max(np.abs(weighted)))
    e_c1 = float(np.max(np.abs(dE)) + np.max(np.abs(centered_derivative(x, dE))))
    b_dist = profile_sup_distance(b1, b2, n_grid=sol1.grid.N)
    numerator = sup_n + wdd + e_c1
    if b_dist == 0.0:
        limit = 100.0 * max(sol1.newton_tol, sol2.newton_tol)
        if numerator > limit:
            raise InconsistencyError(
                f"identical profiles gave solutions differing by {numerator:.3e}"
            )
        ratio = None
    else:
        ratio = numerator / b_dist
    order = profile_order(b1, b2, n_grid=sol1.grid.N)
    return StabilityReport(
        sup_n_diff=sup_n,
        weighted_deriv_diff=wdd,
        E_c1_diff=e_c1,
        b_dist=b_dist,
        ratio=ratio,
        comparison_ok=bool(dn.min() >= -tol),
        e1_minus_e2_at_1=float(abs(dE[-1])),
        order=order.value,
        min_n_diff=float(dn.min()),
    )


def estimate_intrinsic_radii(sol1, sol2, b1, b2, report=None):
    """Empirical radii of the endpoint neighborhoods where the local bounds hold.

    ``delta0`` is the largest ``d`` with ``|n1 - n2| + |(n1 - n2)_x| <= 10 ratio
    ||b1 - b2||`` on ``[0, d)``; ``delta1`` the largest ``d`` with
    ``|n1 - n2| / sqrt(1 - x) <= 10 ratio ||b1 - b2||`` on ``(1 - d, 1)``.
    Both are capped at 1/2.
    """
    report = report or stability_norms(sol1, sol2, b1, b2)
    x = sol1.x
    dn = sol1.n - sol2.n
    if report.ratio is None or report.numerator == 0.0:
        return RADIUS_CAP, RADIUS_CAP
    bound = 10.0 * report.ratio * report.b_dist

    deriv = np.empty_like(dn)
    deriv[1:-1] = centered_derivative(x, dn)
    deriv[0] = (dn[1] - dn[0]) / (x[1] - x[0])
    deriv[-1] = (dn[-1] - dn[-2]) / (x[-1] - x[-2])
    left_bad = np.flatnonzero(np.abs(dn) + np.abs(deriv) > bound)
    delta0 = float(x[left_bad[0]]) if left_bad.size else 1.0

    weighted = np.abs(dn[:-1]) / np.sqrt(1.0 - x[:-1])
    right_bad = np.flatnonzero(weighted > bound)
    delta1 = float(1.0 - x[right_bad[-1]]) if right_bad.size else 1.0
    return min(delta0, RADIUS_CAP), min(delta1, RADIUS_CAP)


@dataclass
class WeightedLimit(_Report):
    fitted: float
    predicted: float
    finite: bool


def weighted_difference_limit(sol1, sol2, window=RIGHT_WINDOW) -> WeightedLimit:
    """Limit of ``|n1 - n2| / sqrt(1 - x)`` at x -> 1-.

    Since ``n_i - 1 ~ sqrt(alpha - E_i(1)) sqrt(1 - x)``, the predicted value
    is the difference of those coefficients.
    """
    _require_same_grid(sol1, sol2)
    x = sol1.x
    mask = _window_mask(x, window)
    if mask.sum() < MIN_FIT_NODES:
        raise InsufficientDataError(f"too few nodes in window {window}")
    s = np.sqrt(1.0 - x[mask])
    y = np.abs(sol1.n - sol2.n)[mask] / s
    fitted = float(np.polyval(np.polyfit(s, y, 3), 0.0))
    alpha = sol1.alpha
    predicted = abs(
        math.sqrt(max(alpha - sol1.E[-1], 0.0)) - math.sqrt(max(alpha - sol2.E[-1], 0.0))
    )
    return WeightedLimit(fitted, predicted, bool(np.isfinite(fitted)))


# ---------------------------------------------------------------------------
# random ordered pairs


def _random_profile(rng):
    family = rng.choice(["constant", "affine", "sine-bump", "piecewise-linear"])
    base = rng.uniform(1.5, 3.0)
    if family == "constant":
        return DopingProfile.constant(base)
    if family == "affine":
        return DopingProfile.affine(base, rng.uniform(-0.4, 0.4))
    if family == "sine-bump":
        return DopingProfile.sine_bump(base, rng.uniform(-0.4, 0.8))
    inner = np.sort(rng.uniform(0.1, 0.9, size=2))
    xs = np.concatenate([[0.0], inner, [1.0]])
    return DopingProfile.piecewise_linear(xs, base + rng.uniform(0.0, 0.8, size=4))


def _dominating_profile(rng, b2):
    """A profile of a random family that lies above ``b2`` everywhere."""
    lift = rng.uniform(0.0, 0.6)
    family = rng.choice(["shift", "constant", "sine-bump"])
    if family == "constant":
        return DopingProfile.constant(b2.sup_b + lift)
    if family == "sine-bump":
        # b2 + lift + a sin(pi x) with a >= 0 stays above b2; realized on b2's own family
        if b2.kind.value in ("constant", "sine-bump"):
            c, a = b2.params[0], b2.params[1] if len(b2.params) > 1 else 0.0
            return DopingProfile.sine_bump(c + lift, a + rng.uniform(0.0, 0.5))
    return b2.shifted(lift)


def random_ordered_pairs(seed=42, count=20, alpha_range=(4.0, 12.0)):
    """Seeded list of ``(b1, b2, alpha)`` with ``b1 >= b2`` pointwise."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        b2 = _random_profile(rng)
        b1 = _dominating_profile(rng, b2)
        if profile_order(b1, b2) is not ProfileOrder.DOMINATES:
            continue
        pairs.append((b1, b2, float(rng.uniform(*alpha_range))))
    return pairs
