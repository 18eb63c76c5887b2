"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError
from .profiles import DopingProfile, parse_profile


def check_alpha(alpha):
    try:
        a = float(alpha)
    except (TypeError, ValueError):
        raise DomainError(f"alpha must be a number, got {alpha!r}") from None
    if not math.isfinite(a) or a < 0:
        raise DomainError(f"alpha must be finite and nonnegative, got {alpha!r}")
    return a


def check_profile(profile) -> DopingProfile:
    """Accept a DopingProfile, a profile spec string or a CSV path."""
    if isinstance(profile, DopingProfile):
        return profile
    if isinstance(profile, (str, bytes)) or hasattr(profile, "__fspath__"):
        return parse_profile(profile)
    raise DomainError(f"expected a doping profile or spec string, got {type(profile).__name__}")


def check_points(X):
    """Flatten ``X`` to a 1-d float array of points in [0, 1]."""
    pts = np.asarray(X, dtype=float).ravel()
    if pts.size == 0:
        raise DomainError("no evaluation points given")
    if not np.all(np.isfinite(pts)) or pts.min() < 0.0 or pts.max() > 1.0:
        raise DomainError("evaluation points must lie in [0, 1]")
    return pts
