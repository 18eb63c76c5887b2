"""Interior subsonic steady states of the 1D hydrodynamic semiconductor model
with sonic boundary conditions, and numerical checks of their boundary
asymptotics, comparison principle and structural stability."""

__version__ = "0.1.0"

from .analysis import (
    AsymptoticsReport,
    StabilityReport,
    asymptotics_report,
    check_comparison,
    check_field_bounds,
    estimate_intrinsic_radii,
    fit_boundary_exponent,
    left_slope_limit,
    right_weighted_slope_limit,
    stability_norms,
)
from .estimator import SonicSteadyState
from .exceptions import SonicBVPError
from .model import (
    ModelState,
    PhysicalParams,
    flux_coefficient,
    reconstruct_E,
    regularized_flux,
    strong_residual,
    weighted_ratio_fields,
)
from .profiles import (
    DopingProfile,
    ProfileOrder,
    eval_profile,
    parse_profile,
    profile_order,
    profile_sup_distance,
)
from .solver import (
    Grid,
    SolutionPair,
    SolveOptions,
    assemble_weak_residual,
    build_grid,
    continuation_solve,
    newton_step,
    solve_pair,
)
