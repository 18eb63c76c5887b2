"""Discrete weak-form solver for the sonic boundary value problem.

The density is approximated by continuous piecewise-linear functions on a
grid graded toward x = 1.  Testing the regularized weak form against the hat
function of each interior node gives one residual per node::

    R_k = A_{k-1/2} - A_{k+1/2} + (n_k - b_k) * (h_{k-1} + h_k) / 2

where ``A_{k+1/2}`` is the regularized flux at the cell midpoint value
``(n_k + n_{k+1})/2`` with the cell slope.  The solve follows a schedule of
regularization levels ``j`` ending at 1, warm-starting each stage.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .exceptions import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FluxDegeneracyError,
    InvariantError,
)
from .model import ModelState, centered_derivative, reconstruct_E
from .profiles import DopingProfile

log = logging.getLogger(__name__)

MIN_NODES = 16
MAX_MESH_RATIO = 4.0
DEFAULT_J_SCHEDULE = (0.5, 0.9, 0.99, 0.999, 1.0)


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    grading_exponent: float = 1.0

    def __post_init__(self):
        x = np.array(self.nodes, dtype=float)
        if x.ndim != 1 or len(x) < 3:
            raise ConfigError("grid needs at least 3 nodes")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ConfigError("grid endpoints must be exactly 0 and 1")
        h = np.diff(x)
        if np.any(h <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        ratio = h[1:] / h[:-1]
        if np.any(ratio > MAX_MESH_RATIO) or np.any(ratio < 1.0 / MAX_MESH_RATIO):
            raise ConfigError(
                f"local mesh ratio {ratio.max():.3g}/{ratio.min():.3g} outside "
                f"[1/{MAX_MESH_RATIO:g}, {MAX_MESH_RATIO:g}]"
            )
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @property
    def N(self):
        return len(self.nodes) - 1

    @property
    def h(self):
        return np.diff(self.nodes)

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())


def build_grid(N: int, grading_exponent: float = 2.0) -> Grid:
    """Grid with ``N`` cells, uniform on [0, 1/2] and power-graded toward x = 1.

    With ``t_k = k/N`` the right part is ``x_k = 1 - (1 - t_k)**g``, which
    reaches 1/2 at ``t* = 1 - 2**(-1/g)``; the left part maps ``[0, t*]``
    linearly onto ``[0, 1/2]``.  Grids for N and 2N are nested.

    The last two cells have ratio ``2**g - 1``, so exponents above
    ``log2(5)`` break the mesh-ratio bound and raise ConfigError.
    """
    if int(N) != N or N < MIN_NODES:
        raise ConfigError(f"N must be an integer >= {MIN_NODES}, got {N!r}")
    g = float(grading_exponent)
    if not 1.0 <= g <= 4.0:
        raise ConfigError(f"grading exponent must lie in [1, 4], got {g!r}")
    N = int(N)
    t = np.arange(N + 1) / N
    t_star = 1.0 - 0.5 ** (1.0 / g)
    x = np.where(t >= t_star, 1.0 - (1.0 - t) ** g, 0.5 * t / t_star)
    x[0], x[-1] = 0.0, 1.0
    return Grid(x, g)


@dataclass(frozen=True)
class SolveOptions:
    N: int = 400
    grading_exponent: float = 2.0
    j_schedule: tuple[float, ...] = DEFAULT_J_SCHEDULE
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    damping_min: float = 2.0**-20
    admissibility_margin: float = 0.0
    initial_amplitude_scale: float = 1.0

    def __post_init__(self):
        sched = tuple(float(j) for j in self.j_schedule)
        object.__setattr__(self, "j_schedule", sched)
        if not sched or sched[-1] != 1.0:
            raise ConfigError("j_schedule must end at 1")
        if any(not 0.0 < j <= 1.0 for j in sched):
            raise ConfigError("j_schedule entries must lie in (0, 1]")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("j_schedule must be strictly increasing")
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be positive")
        if self.max_newton_iters < 1:
            raise ConfigError("max_newton_iters must be >= 1")
        if not 0.0 < self.damping_min <= 1.0:
            raise ConfigError("damping_min must lie in (0, 1]")
        if self.admissibility_margin < 0:
            raise ConfigError("admissibility_margin must be nonnegative")
        if not self.initial_amplitude_scale > 0:
            raise ConfigError("initial_amplitude_scale must be positive")

    def to_dict(self):
        return {
            "N": self.N,
            "grading_exponent": self.grading_exponent,
            "j_schedule": list(self.j_schedule),
            "newton_tol": self.newton_tol,
            "max_newton_iters": self.max_newton_iters,
            "damping_min": self.damping_min,
            "admissibility_margin": self.admissibility_margin,
            "initial_amplitude_scale": self.initial_amplitude_scale,
        }


@dataclass
class StageRecord:
    j: float
    iterations: int
    residual_norm: float
    n: np.ndarray = field(repr=False)


@dataclass
class StepReport:
    damping: float
    halvings: int
    residual_before: float
    residual_after: float

    @property
    def reduction(self):
        if self.residual_before == 0:
            return 1.0
        return self.residual_after / self.residual_before


@dataclass
class SolutionPair:
    """Converged density/field pair on a grid.

    Constructed unchecked; ``check_invariants`` enforces the post-conditions
    of a j = 1 solve.
    """

    grid: Grid
    n: np.ndarray
    E: np.ndarray
    alpha: float
    profile_id: str = ""
    residual_norm: float = 0.0
    j_final: float = 1.0
    newton_tol: float = 1e-10
    stages: list[StageRecord] = field(default_factory=list, repr=False)

    @property
    def x(self):
        return self.grid.nodes

    def state(self):
        return ModelState(self.n, self.E, self.j_final)

    def nx(self):
        """Centered-difference ``n_x`` on interior nodes."""
        return centered_derivative(self.x, self.n)

    def check_invariants(self, b: DopingProfile):
        n = self.n
        if n[0] != 1.0 or n[-1] != 1.0:
            raise InvariantError(f"boundary values n(0)={n[0]!r}, n(1)={n[-1]!r} are not 1")
        interior = n[1:-1]
        if np.any(interior <= 1.0):
            k = 1 + int(np.argmin(interior))
            raise InvariantError(f"n <= 1 at interior node {k}: n = {n[k]!r}")
        ceiling = b.sup_b + 10 * self.newton_tol
        if n.max() > ceiling:
            raise InvariantError(f"max n = {n.max()!r} exceeds sup b + 10 tol = {ceiling!r}")
        if not self.residual_norm <= self.newton_tol:
            raise InvariantError(
                f"residual {self.residual_norm:.3e} above tolerance {self.newton_tol:.1e}"
            )


class DiscreteProblem:
    """Weak residual and its tridiagonal Jacobian for fixed ``(b, alpha, j)``.

    The unknown is the excess density ``u = n - 1`` (zero at both ends).
    Iterating on ``u`` instead of ``n`` keeps cell slopes accurate on the
    smallest cells, where ``n`` is within a few ulps of 1.
    """

    def __init__(self, grid, b_vals, alpha, j):
        self.grid = grid
        self.x = grid.nodes
        self.h = grid.h
        self.weights = 0.5 * (self.h[1:] + self.h[:-1])
        self.b = np.asarray(b_vals, dtype=float)
        self.alpha = float(alpha)
        self.j = float(j)
        # 1 - j**2 without cancellation for j close to 1
        self._gap = (1.0 - self.j) * (1.0 + self.j)

    def admissible(self, u, margin=0.0):
        floor = self.j - 1.0 + margin
        mid = 0.5 * (u[1:] + u[:-1])
        return bool(np.all(u[1:-1] > floor) and np.all(mid > floor))

    def _cells(self, u):
        mid = 0.5 * (u[1:] + u[:-1])
        floor = self.j - 1.0
        # n == j is the degenerate point itself, where the flux is still defined
        if not np.all(u[1:-1] >= floor) or not np.all(mid >= floor):
            raise FluxDegeneracyError(
                f"state leaves the admissible set n >= j = {self.j:g} "
                f"(min interior n = {1 + u[1:-1].min():.6g}, min midpoint = {1 + mid.min():.6g})"
            )
        z = 1.0 + mid
        coef = (self._gap + mid * (2.0 + mid)) / z**3
        slope = np.diff(u) / self.h
        return z, coef, slope

    def residual(self, u):
        z, coef, slope = self._cells(u)
        flux = coef * slope + self.alpha * self.j / z
        return flux[:-1] - flux[1:] + (1.0 + u[1:-1] - self.b[1:-1]) * self.weights

    def jacobian(self, u):
        """Banded ``(3, N-1)`` Jacobian with respect to the interior values."""
        z, coef, slope = self._cells(u)
        j, a = self.j, self.alpha
        dcoef = -1.0 / z**2 + 3.0 * j * j / z**4
        common = 0.5 * (dcoef * slope - a * j / z**2)
        d_left = common - coef / self.h
        d_right = common + coef / self.h
        m = len(u) - 2
        ab = np.zeros((3, m))
        ab[0, 1:] = -d_right[1:-1]
        ab[1] = d_right[:-1] - d_left[1:] + self.weights
        ab[2, :-1] = d_left[1:-1]
        return ab


def assemble_weak_residual(state, b, alpha, grid):
    """Weak residual vector, one entry per interior node.

    ``b`` may be a profile or nodal values.  Raises FluxDegeneracyError if
    ``n < j`` at an interior node or a cell midpoint.
    """
    n = np.asarray(state.n, dtype=float)
    if n[0] != 1.0 or n[-1] != 1.0:
        raise DomainError("state must satisfy the sonic boundary values n(0) = n(1) = 1")
    b_vals = b(grid.nodes) if callable(b) else b
    return DiscreteProblem(grid, b_vals, alpha, state.j).residual(n - 1.0)


def newton_step(problem, u, residual, jacobian, damping_min=2.0**-20, margin=0.0):
    """One damped Newton update of the excess density ``u = n - 1``.

    The step is halved while the trial iterate is inadmissible or raises the
    max-norm of the residual.  Returns ``(u_new, residual_new, StepReport)``.
    """
    rn = float(np.max(np.abs(residual)))
    if rn == 0.0:
        return u.copy(), residual, StepReport(1.0, 0, 0.0, 0.0)
    delta = solve_banded((1, 1), jacobian, -residual)
    lam, halvings = 1.0, 0
    while True:
        trial = u.copy()
        trial[1:-1] += lam * delta
        if problem.admissible(trial, margin):
            r_trial = problem.residual(trial)
            rn_trial = float(np.max(np.abs(r_trial)))
            if rn_trial <= rn:
                return trial, r_trial, StepReport(lam, halvings, rn, rn_trial)
        lam *= 0.5
        halvings += 1
        if lam < damping_min:
            raise ConvergenceError(
                f"damping floor {damping_min:g} reached without residual reduction "
                f"at j = {problem.j:g} (residual {rn:.3e})",
                j=problem.j,
                residual_norm=rn,
                last_iterate=1.0 + u,
            )


def initial_guess(x, b: DopingProfile, scale=1.0):
    """``1 + scale * (inf b - 1)/2 * sin(pi x)`` pinned to 1 at both ends."""
    n0 = 1.0 + scale * 0.5 * (b.inf_b - 1.0) * np.sin(np.pi * x)
    n0[0] = n0[-1] = 1.0
    return n0


def _solve_stage(problem, u, opts, step_log=None):
    r = problem.residual(u)
    rn = float(np.max(np.abs(r)))
    for it in range(opts.max_newton_iters + 1):
        if rn <= opts.newton_tol:
            return u, rn, it
        if it == opts.max_newton_iters:
            break
        u, r, report = newton_step(
            problem, u, r, problem.jacobian(u), opts.damping_min, opts.admissibility_margin
        )
        rn = report.residual_after
        if step_log is not None:
            step_log.append((problem.j, report))
    raise ConvergenceError(
        f"Newton did not converge at stage j = {problem.j:g}: residual {rn:.3e} "
        f"after {opts.max_newton_iters} iterations",
        j=problem.j,
        residual_norm=rn,
        last_iterate=1.0 + u,
    )


def continuation_solve(b, alpha, opts=None, *, step_log=None) -> SolutionPair:
    """Interior subsonic solution for profile ``b`` by continuation in ``j``.

    ``step_log``, if a list, receives ``(j, StepReport)`` for every accepted
    Newton step.
    """
    opts = opts or SolveOptions()
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha!r}")
    grid = build_grid(opts.N, opts.grading_exponent)
    x = grid.nodes
    b_vals = b(x)
    u = initial_guess(x, b, opts.initial_amplitude_scale) - 1.0
    stages = []
    rn = math.inf
    for j in opts.j_schedule:
        problem = DiscreteProblem(grid, b_vals, alpha, j)
        try:
            u, rn, iters = _solve_stage(problem, u, opts, step_log)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"{b.label}, alpha={alpha:g}: {exc}",
                j=exc.j,
                residual_norm=exc.residual_norm,
                last_iterate=exc.last_iterate,
            ) from exc
        log.debug("stage j=%g converged in %d iterations, residual %.2e", j, iters, rn)
        stages.append(StageRecord(j, iters, rn, 1.0 + u))
    n = 1.0 + u
    sol = SolutionPair(
        grid=grid,
        n=n,
        E=reconstruct_E(x, n, b_vals, alpha),
        alpha=alpha,
        profile_id=b.label,
        residual_norm=rn,
        j_final=opts.j_schedule[-1],
        newton_tol=opts.newton_tol,
        stages=stages,
    )
    sol.check_invariants(b)
    return sol


def solve_pair(b1, b2, alpha, opts=None):
    """Solve for two profiles on the same grid."""
    opts = opts or SolveOptions()
    return continuation_solve(b1, alpha, opts), continuation_solve(b2, alpha, opts)


def write_solution_csv(sol: SolutionPair, path):
    """Write ``x,n,E,nx,weighted_nx``; boundary rows leave the derivative cells empty."""
    x = sol.x
    nx = sol.nx()
    weighted = np.sqrt(1.0 - x[1:-1]) * nx
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "n", "E", "nx", "weighted_nx"])
        last = len(x) - 1
        for k in range(len(x)):
            if 0 < k < last:
                w.writerow([_fmt(x[k]), _fmt(sol.n[k]), _fmt(sol.E[k]),
                            _fmt(nx[k - 1]), _fmt(weighted[k - 1])])
            else:
                w.writerow([_fmt(x[k]), _fmt(sol.n[k]), _fmt(sol.E[k]), "", ""])
    return path


def _fmt(v):
    return repr(float(v))


def read_solution_csv(path):
    """Read back a solution CSV into arrays ``x, n, E, nx, weighted_nx`` (NaN where empty)."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    cols = {}
    for name in ("x", "n", "E", "nx", "weighted_nx"):
        cols[name] = np.array([float(r[name]) if r[name] else np.nan for r in rows])
    return cols
