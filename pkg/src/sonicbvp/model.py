"""Continuous equations of the isothermal steady hydrodynamic model (T = J = 1).

The unknowns are the electron density ``n`` and the electric field ``E`` on
[0, 1]; the doping profile ``b`` and the relaxation parameter ``alpha`` are
data.  Strong form::

    (1 - 1/n**2) n_x = n E - alpha,     E_x = n - b,     n(0) = n(1) = 1.

The regularized flux with level ``j`` in (0, 1] is
``A(z, p) = (1/z - j**2/z**3) p + alpha j / z``; at ``j = 1`` the flux
coincides with ``E`` along a solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import DegenerateStateError, DomainError

LEFT_REGIME = 0.25
RIGHT_REGIME = 0.75


@dataclass(frozen=True)
class PhysicalParams:
    """Relaxation parameter ``alpha = 1/tau``; temperature and current are fixed to 1."""

    alpha: float

    T = 1.0
    J = 1.0

    def __post_init__(self):
        a = float(self.alpha)
        if not np.isfinite(a) or a < 0:
            raise DomainError(f"alpha must be a finite nonnegative number, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


@dataclass
class ModelState:
    """Nodal density and field at regularization level ``j``."""

    n: np.ndarray
    E: np.ndarray
    j: float = 1.0

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        if not 0.0 < self.j <= 1.0:
            raise DomainError(f"regularization level j must lie in (0, 1], got {self.j!r}")

    def boundary_pinned(self):
        return self.n[0] == 1.0 and self.n[-1] == 1.0

    def e_tilde(self, alpha):
        """The shifted field ``E - alpha/n``."""
        return self.E - alpha / self.n


def flux_coefficient(z, j):
    """Diffusion coefficient ``1/z - j**2/z**3`` of the regularized flux."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("flux coefficient requires z > 0")
    out = 1.0 / z - j * j / z**3
    return out if out.ndim else float(out)


def regularized_flux(z, p, j, alpha):
    """``A(z, p) = (1/z - j**2/z**3) p + alpha j / z``."""
    c = flux_coefficient(z, j)
    out = c * np.asarray(p, dtype=float) + alpha * j / np.asarray(z, dtype=float)
    return out if np.ndim(out) else float(out)


def centered_derivative(x, f):
    """Three-point centered differences on the interior nodes of a nonuniform grid.

    Returns an array of length ``len(x) - 2``; exact for quadratics.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    return (
        -h2 / (h1 * (h1 + h2)) * f[:-2]
        + (h2 - h1) / (h1 * h2) * f[1:-1]
        + h1 / (h2 * (h1 + h2)) * f[2:]
    )


def strong_residual(x, state, b_vals, alpha, node=None):
    """Pointwise residuals ``(r1, r2)`` of the strong form.

    ``r1 = (1 - 1/n**2) n_x - (n E - alpha)`` and ``r2 = E_x - (n - b)`` with
    derivatives from centered differences.  With ``node=None`` arrays over all
    interior nodes are returned; otherwise the pair at that interior node.
    """
    x = np.asarray(x, dtype=float)
    n, E = state.n, state.E
    b_vals = np.broadcast_to(np.asarray(b_vals, dtype=float), n.shape)
    last = len(x) - 1
    if node is not None and not 0 < node < last:
        raise DomainError(f"strong residual undefined at boundary node {node}")
    nx = centered_derivative(x, n)
    Ex = centered_derivative(x, E)
    ni, Ei, bi = n[1:-1], E[1:-1], b_vals[1:-1]
    r1 = (1.0 - 1.0 / ni**2) * nx - (ni * Ei - alpha)
    r2 = Ex - (ni - bi)
    if node is None:
        return r1, r2
    return float(r1[node - 1]), float(r2[node - 1])


def reconstruct_E(x, n, b, alpha):
    """``E(x) = alpha + int_0^x (n - b) dy`` by cumulative trapezoid on the grid.

    ``b`` may be a profile (evaluated at the nodes) or an array of nodal values.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    b_vals = b(x) if callable(b) else np.broadcast_to(np.asarray(b, dtype=float), n.shape)
    return alpha + cumulative_trapezoid(n - b_vals, x, initial=0.0)


class RatioFields(NamedTuple):
    x_left: np.ndarray
    rho0: np.ndarray
    x_right: np.ndarray
    rho1: np.ndarray


def weighted_ratio_fields(x, state, alpha) -> RatioFields:
    """Endpoint ratio fields used by the local stability analysis.

    ``rho0 = (E - alpha/n) / (n - 1)`` on interior nodes with x <= 0.25 and
    ``rho1 = (n - 1) / sqrt(1 - x)`` on interior nodes with x >= 0.75.
    """
    x = np.asarray(x, dtype=float)
    n = state.n
    inner = slice(1, len(x) - 1)
    if np.any(n[inner] == 1.0):
        k = 1 + int(np.flatnonzero(n[inner] == 1.0)[0])
        raise DegenerateStateError(f"n == 1 at interior node {k} (x = {x[k]:.6g})")
    xi, ni, Ei = x[inner], n[inner], state.E[inner]
    left = xi <= LEFT_REGIME
    right = xi >= RIGHT_REGIME
    rho0 = (Ei[left] - alpha / ni[left]) / (ni[left] - 1.0)
    rho1 = (ni[right] - 1.0) / np.sqrt(1.0 - xi[right])
    return RatioFields(xi[left], rho0, xi[right], rho1)
