"""Equidistant lattices in a bounding box and sampled, lifted graphs on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyGraphError, LatticeTooLarge
from .linalg import matrix_minors, minors_degrees, minors_vector, signed_singular_values

DEFAULT_CAP = 50_000_000
VALUE_CAP = 1e15

# r/delta is snapped to the nearest integer when this close, so that e.g.
# 1.1 / 0.034375 counts 32 steps rather than 31.999999999999996.
_STEP_SNAP = 1e-9


@dataclass(frozen=True)
class LatticeSpec:
    d: int
    delta: float
    radius: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("lattice dimension must be positive")
        if not (self.delta > 0 and self.radius > 0):
            raise ValueError("delta and radius must be positive")
        if self.delta > 2 * self.radius:
            raise ValueError("delta must not exceed 2 * radius")

    @property
    def steps(self) -> int:
        """Number of positive lattice steps ``m = floor(r / delta)``."""
        ratio = self.radius / self.delta
        near = round(ratio)
        if abs(ratio - near) <= _STEP_SNAP * max(1.0, ratio):
            return int(near)
        return int(math.floor(ratio))

    @property
    def count(self) -> int:
        return (2 * self.steps + 1) ** self.d

    def axis(self):
        m = self.steps
        return np.arange(-m, m + 1) * self.delta


@dataclass(frozen=True)
class Lattice:
    spec: LatticeSpec
    points: np.ndarray

    @property
    def count(self) -> int:
        return self.points.shape[0]


def generate_lattice(spec: LatticeSpec, cap: int = DEFAULT_CAP) -> Lattice:
    """Cartesian lattice ``delta Z^d`` in ``[-r, r]^d``, last axis varying fastest."""
    if spec.count > cap:
        raise LatticeTooLarge(f"lattice would have {spec.count} points, cap is {cap}")
    axis = spec.axis()
    grids = np.meshgrid(*([axis] * spec.d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    return Lattice(spec, points)


@dataclass(frozen=True)
class SampledGraph:
    """Lifted lattice points with their finite function values.

    ``index`` maps every retained row back to its lattice row; ``degrees``
    holds the polynomial degree of each lifted coordinate and ``radius`` the
    box radius, both used to scale LP constraints.
    """

    lifted: np.ndarray
    values: np.ndarray
    index: np.ndarray
    degrees: np.ndarray
    radius: float
    lifting: str = "svpc"

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.lifted.shape[1]


def finite_mask(values):
    values = np.asarray(values, dtype=float)
    return np.isfinite(values) & (values <= VALUE_CAP)


def lift(points, lifting="svpc"):
    """Lift lattice coordinates: signed singular values or flattened matrices."""
    points = np.asarray(points, dtype=float)
    if lifting == "svpc":
        return minors_vector(points)
    if lifting == "pc":
        d = math.isqrt(points.shape[-1])
        return matrix_minors(points.reshape(*points.shape[:-1], d, d))
    raise ValueError(f"unknown lifting {lifting!r}")


def evaluate_on_points(points, phi, lifting="svpc"):
    """Density values on lattice points; matrix points go through ``nu(F)``."""
    points = np.asarray(points, dtype=float)
    if lifting == "pc":
        d = math.isqrt(points.shape[-1])
        nu = signed_singular_values(points.reshape(-1, d, d))
    else:
        nu = points
    return np.asarray(phi(nu), dtype=float).reshape(-1)


def sample_density(lattice: Lattice, phi, lifting: str = "svpc") -> SampledGraph:
    """Evaluate ``phi`` on the lattice, lift the points and drop non-finite rows.

    ``phi`` is called once on the whole ``(N, d)`` array of signed singular
    values and must return ``N`` values.  Rows whose value is NaN, +inf or
    above ``VALUE_CAP`` are removed.
    """
    values = evaluate_on_points(lattice.points, phi, lifting)
    keep = np.flatnonzero(finite_mask(values))
    if keep.size == 0:
        raise EmptyGraphError("density is infinite on every lattice point")
    lifted = lift(lattice.points[keep], lifting)
    d = lattice.spec.d if lifting == "svpc" else math.isqrt(lattice.spec.d)
    return SampledGraph(
        lifted=lifted,
        values=values[keep],
        index=keep,
        degrees=minors_degrees(d, lifting),
        radius=lattice.spec.radius,
        lifting=lifting,
    )
