"""Estimator-style front end for the steady-state solver.

``SonicSteadyState().fit(profile)`` solves the boundary value problem for a
doping profile; ``predict`` and ``transform`` then interpolate the density and
the field at arbitrary points of [0, 1].  Hyperparameters follow the usual
``get_params``/``set_params`` protocol so the estimator can be cloned and
grid-searched.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .analysis import asymptotics_report, check_field_bounds, stability_norms
from .solver import DEFAULT_J_SCHEDULE, SolveOptions, continuation_solve
from .validation import check_alpha, check_points, check_profile


class SonicSteadyState(TransformerMixin, BaseEstimator):
    """Interior subsonic steady state for a given doping profile.

    Parameters
    ----------
    alpha : float
        Reciprocal momentum relaxation time, ``alpha >= 0``.
    n_cells : int
        Number of grid cells.
    grading_exponent : float
        Clustering strength toward x = 1.
    j_schedule : tuple of float
        Regularization levels, strictly increasing and ending at 1.
    newton_tol : float
        Max-norm tolerance on the discrete weak residual.
    max_newton_iters : int
    damping_min : float
    initial_amplitude_scale : float
        Multiplier on the amplitude of the initial guess.

    Attributes
    ----------
    solution_ : SolutionPair
    profile_ : DopingProfile
    x_, n_, E_ : ndarray
        Grid nodes and nodal fields.
    """

    def __init__(
        self,
        alpha=5.0,
        n_cells=400,
        grading_exponent=2.0,
        j_schedule=DEFAULT_J_SCHEDULE,
        newton_tol=1e-10,
        max_newton_iters=50,
        damping_min=2.0**-20,
        initial_amplitude_scale=1.0,
    ):
        self.alpha = alpha
        self.n_cells = n_cells
        self.grading_exponent = grading_exponent
        self.j_schedule = j_schedule
        self.newton_tol = newton_tol
        self.max_newton_iters = max_newton_iters
        self.damping_min = damping_min
        self.initial_amplitude_scale = initial_amplitude_scale

    def _options(self):
        return SolveOptions(
            N=self.n_cells,
            grading_exponent=self.grading_exponent,
            j_schedule=tuple(self.j_schedule),
            newton_tol=self.newton_tol,
            max_newton_iters=self.max_newton_iters,
            damping_min=self.damping_min,
            initial_amplitude_scale=self.initial_amplitude_scale,
        )

    def fit(self, X, y=None):
        """Solve for the doping profile ``X`` (a DopingProfile or a spec string)."""
        profile = check_profile(X)
        alpha = check_alpha(self.alpha)
        sol = continuation_solve(profile, alpha, self._options())
        self.profile_ = profile
        self.solution_ = sol
        self.x_ = sol.x
        self.n_ = sol.n
        self.E_ = sol.E
        return self

    def predict(self, X):
        """Density at the points ``X`` by linear interpolation of the nodal values."""
        check_is_fitted(self, "solution_")
        pts = check_points(X)
        return np.interp(pts, self.x_, self.n_)

    def transform(self, X):
        """Columns ``(n, E)`` at the points ``X``."""
        check_is_fitted(self, "solution_")
        pts = check_points(X)
        return np.column_stack([np.interp(pts, self.x_, self.n_), np.interp(pts, self.x_, self.E_)])

    def field(self, X):
        check_is_fitted(self, "solution_")
        return np.interp(check_points(X), self.x_, self.E_)

    def asymptotics(self, tol=None):
        check_is_fitted(self, "solution_")
        return asymptotics_report(self.solution_, self.profile_, tol)

    def field_bounds(self):
        check_is_fitted(self, "solution_")
        return check_field_bounds(self.solution_, self.profile_)

    def stability_against(self, other):
        """Stability norms of this fit (as ``b1``) against another fitted estimator."""
        check_is_fitted(self, "solution_")
        check_is_fitted(other, "solution_")
        return stability_norms(self.solution_, other.solution_, self.profile_, other.profile_)
