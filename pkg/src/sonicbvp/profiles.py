"""Subsonic doping profiles b(x) on [0, 1] and their pointwise order relations.

A profile is either one of a few analytic families or a table of samples
interpolated linearly. Every profile is validated at construction to be
strictly subsonic, ``inf b >= 1 + SUBSONIC_MARGIN``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DomainError, SubsonicityError

SUBSONIC_MARGIN = 1e-6
# dense sampling for order/distance checks is this many times the solver grid size
SAMPLING_FACTOR = 10
DEFAULT_GRID_SIZE = 400


class ProfileKind(str, enum.Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    SINE_BUMP = "sine-bump"
    PIECEWISE_LINEAR = "piecewise-linear"
    TABULATED = "tabulated"


class ProfileOrder(str, enum.Enum):
    DOMINATES = "dominates"
    DOMINATED = "dominated"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True, eq=False)
class DopingProfile:
    """Continuous background density with cached bounds.

    ``params`` holds the coefficients of the analytic families:

    * constant: ``(c,)`` with b(x) = c
    * affine: ``(b0, slope)`` with b(x) = b0 + slope * x
    * sine-bump: ``(c, a)`` with b(x) = c + a * sin(pi x)

    Piecewise-linear and tabulated profiles store their knots in ``knots``
    as an ``(m, 2)`` array of ``(x, b)`` rows with x[0] = 0 and x[-1] = 1.
    """

    kind: ProfileKind
    params: tuple[float, ...] = ()
    knots: np.ndarray | None = field(default=None, repr=False)
    label: str = ""
    inf_b: float = field(init=False)
    sup_b: float = field(init=False)

    def __post_init__(self):
        kind = ProfileKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if kind in (ProfileKind.PIECEWISE_LINEAR, ProfileKind.TABULATED):
            knots = _check_knots(self.knots)
            knots.setflags(write=False)
            object.__setattr__(self, "knots", knots)
            lo, hi = float(knots[:, 1].min()), float(knots[:, 1].max())
        else:
            lo, hi = _analytic_bounds(kind, self.params)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"non-finite profile coefficients: {self.params}")
        if lo < 1.0 + SUBSONIC_MARGIN:
            raise SubsonicityError(
                f"profile is not strictly subsonic: inf b = {lo!r} < 1 + {SUBSONIC_MARGIN:g}"
            )
        object.__setattr__(self, "inf_b", lo)
        object.__setattr__(self, "sup_b", hi)
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    # constructors

    @classmethod
    def constant(cls, c):
        return cls(ProfileKind.CONSTANT, (c,))

    @classmethod
    def affine(cls, b0, slope):
        return cls(ProfileKind.AFFINE, (b0, slope))

    @classmethod
    def sine_bump(cls, c, amplitude):
        return cls(ProfileKind.SINE_BUMP, (c, amplitude))

    @classmethod
    def piecewise_linear(cls, xs, bs):
        return cls(ProfileKind.PIECEWISE_LINEAR, knots=np.column_stack([xs, bs]))

    @classmethod
    def tabulated(cls, xs, bs, label=""):
        return cls(ProfileKind.TABULATED, knots=np.column_stack([xs, bs]), label=label)

    @classmethod
    def from_csv(cls, path):
        """Read a two-column ``x,b`` table."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            if header != ["x", "b"]:
                raise DomainError(f"{path}: expected header 'x,b', got {','.join(header)!r}")
            rows = [r for r in reader if r and any(c.strip() for c in r)]
        try:
            data = np.array([[float(c) for c in r] for r in rows], dtype=float)
        except ValueError as exc:
            raise DomainError(f"{path}: non-numeric entry ({exc})") from None
        if data.ndim != 2 or data.shape[1] != 2:
            raise DomainError(f"{path}: every row must have exactly two columns")
        return cls.tabulated(data[:, 0], data[:, 1], label=str(path))

    # evaluation

    def __call__(self, x):
        """Vectorized evaluation; raises DomainError outside [0, 1]."""
        xa = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(xa)) or np.any(xa < 0.0) or np.any(xa > 1.0):
            raise DomainError("profile evaluated outside [0, 1]")
        kind, p = self.kind, self.params
        if kind is ProfileKind.CONSTANT:
            out = np.full_like(xa, p[0])
        elif kind is ProfileKind.AFFINE:
            out = p[0] + p[1] * xa
        elif kind is ProfileKind.SINE_BUMP:
            out = p[0] + p[1] * np.sin(np.pi * xa)
        else:
            out = np.interp(xa, self.knots[:, 0], self.knots[:, 1])
        # clip removes rounding excursions past the cached bounds
        out = np.clip(out, self.inf_b, self.sup_b)
        return out if out.ndim else float(out)

    def shifted(self, delta):
        """Return the profile ``b + delta`` of the same kind."""
        kind, p = self.kind, self.params
        if kind in (ProfileKind.CONSTANT, ProfileKind.AFFINE, ProfileKind.SINE_BUMP):
            return DopingProfile(kind, (p[0] + delta,) + p[1:])
        knots = np.array(self.knots)
        knots[:, 1] += delta
        return DopingProfile(kind, knots=knots)

    def sample_points(self, n_grid=DEFAULT_GRID_SIZE):
        """Dense check nodes: ``SAMPLING_FACTOR * n_grid`` uniform cells plus any knots."""
        xs = np.linspace(0.0, 1.0, SAMPLING_FACTOR * int(n_grid) + 1)
        if self.knots is not None:
            xs = np.union1d(xs, self.knots[:, 0])
        return xs

    def to_spec(self):
        return self.label

    def _default_label(self):
        kind, p = self.kind, self.params
        if kind is ProfileKind.CONSTANT:
            return f"constant:{p[0]!r}"
        if kind is ProfileKind.AFFINE:
            return f"affine:{p[0]!r},{p[1]!r}"
        if kind is ProfileKind.SINE_BUMP:
            return f"sinebump:{p[0]!r},{p[1]!r}"
        pairs = ",".join(f"{x!r}:{b!r}" for x, b in self.knots)
        return f"pwlinear:{pairs}" if kind is ProfileKind.PIECEWISE_LINEAR else f"tabulated:{pairs}"

    def __repr__(self):
        return f"DopingProfile({self.label!r}, inf_b={self.inf_b:.6g}, sup_b={self.sup_b:.6g})"


def _analytic_bounds(kind, p):
    expected = {ProfileKind.CONSTANT: 1, ProfileKind.AFFINE: 2, ProfileKind.SINE_BUMP: 2}[kind]
    if len(p) != expected:
        raise DomainError(f"{kind.value} profile takes {expected} coefficient(s), got {len(p)}")
    if kind is ProfileKind.CONSTANT:
        return p[0], p[0]
    if kind is ProfileKind.AFFINE:
        ends = (p[0], p[0] + p[1])
        return min(ends), max(ends)
    # sin(pi x) ranges over [0, 1] on [0, 1]
    return p[0] + min(0.0, p[1]), p[0] + max(0.0, p[1])


def _check_knots(knots):
    if knots is None:
        raise DomainError("tabulated profile requires knots")
    k = np.array(knots, dtype=float)
    if k.ndim != 2 or k.shape[1] != 2 or k.shape[0] < 2:
        raise DomainError("knots must be an (m, 2) array with m >= 2")
    if not np.all(np.isfinite(k)):
        raise DomainError("knots must be finite")
    xs = k[:, 0]
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise DomainError("knots must start at x=0 and end at x=1")
    if np.any(np.diff(xs) <= 0):
        raise DomainError("knot abscissae must be strictly increasing")
    return k


def eval_profile(p: DopingProfile, x: float) -> float:
    """Evaluate ``b(x)`` at a single point of [0, 1]."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x = {x!r} outside [0, 1]")
    return float(p(x))


def _joint_samples(p1, p2, n_grid):
    return np.union1d(p1.sample_points(n_grid), p2.sample_points(n_grid))


def profile_order(p1, p2, tol=0.0, n_grid=DEFAULT_GRID_SIZE) -> ProfileOrder:
    """Pointwise order of two profiles on the dense sampling.

    Equal profiles report ``DOMINATES``.
    """
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    xs = _joint_samples(p1, p2, n_grid)
    diff = p1(xs) - p2(xs)
    if np.all(diff >= -tol):
        return ProfileOrder.DOMINATES
    if np.all(diff <= tol):
        return ProfileOrder.DOMINATED
    return ProfileOrder.INCOMPARABLE


def profile_sup_distance(p1, p2, n_grid=DEFAULT_GRID_SIZE) -> float:
    """Max of ``|b1 - b2|`` over the dense sampling."""
    xs = _joint_samples(p1, p2, n_grid)
    return float(np.max(np.abs(p1(xs) - p2(xs))))


_ALIASES = {
    "constant": ProfileKind.CONSTANT,
    "const": ProfileKind.CONSTANT,
    "affine": ProfileKind.AFFINE,
    "sinebump": ProfileKind.SINE_BUMP,
    "sine-bump": ProfileKind.SINE_BUMP,
    "pwlinear": ProfileKind.PIECEWISE_LINEAR,
    "piecewise-linear": ProfileKind.PIECEWISE_LINEAR,
}


def parse_profile(spec) -> DopingProfile:
    """Build a profile from a CLI string or a CSV path.

    Accepted forms: ``constant:2.0``, ``affine:2.0,0.5``, ``sinebump:2.0,0.5``,
    ``pwlinear:0:2,0.5:3,1:2`` and a path to an ``x,b`` CSV file.
    """
    if isinstance(spec, DopingProfile):
        return spec
    text = str(spec).strip()
    name, sep, rest = text.partition(":")
    kind = _ALIASES.get(name.lower()) if sep else None
    if kind is None:
        path = Path(text)
        if path.suffix.lower() == ".csv" or path.exists():
            if not path.exists():
                raise DomainError(f"profile file not found: {path}")
            return DopingProfile.from_csv(path)
        raise DomainError(f"unrecognized profile spec {text!r}")
    try:
        if kind is ProfileKind.PIECEWISE_LINEAR:
            pairs = [item.split(":") for item in rest.split(",")]
            xs, bs = zip(*[(float(a), float(b)) for a, b in pairs])
            return DopingProfile(kind, knots=np.column_stack([xs, bs]), label=text)
        coeffs = tuple(float(c) for c in rest.split(","))
    except ValueError:
        raise DomainError(f"malformed profile spec {text!r}") from None
    return DopingProfile(kind, coeffs, label=text)
