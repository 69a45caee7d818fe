"""Pydantic models for grids, parameters, solver settings and reports."""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import DomainError

# Largest lattice the lab will allocate (2**28 float64 values = 2 GiB).
MAX_POINTS = 2**28


class LambdaMode(str, Enum):
    """Treatment of the orthogonal factor acting on the trailing coordinates."""

    FULL_AVERAGE = "full_average"
    RADIAL_CONSTRAINT = "radial_constraint"
    TRIVIAL = "trivial"


class InitMode(str, Enum):
    """Initial guess of the descent solver."""

    RANDOM_BUMP = "random_bump"
    BUBBLE_SEEDED = "bubble_seeded"
    USER_FIELD = "user_field"


def critical_exponent(dimension: int, order: float) -> float:
    """Critical Sobolev exponent 2N/(N-2s)."""
    if dimension <= 2 * order:
        raise DomainError(f"critical exponent needs N > 2s, got N={dimension}, s={order}")
    return 2.0 * dimension / (dimension - 2.0 * order)


class GridSpec(BaseModel):
    """Periodic box [-L/2, L/2)^N sampled with M points per axis."""

    model_config = ConfigDict(frozen=True)

    dimension: int = Field(ge=1)
    order: float
    box_length: float = Field(gt=0)
    points_per_axis: int = Field(ge=4)

    @model_validator(mode="after")
    def _check_domain(self) -> "GridSpec":
        if not 0.0 < self.order < 1.0:
            raise DomainError(f"order s must lie in (0, 1), got {self.order}")
        if self.points_per_axis % 2:
            raise DomainError(f"points_per_axis must be even, got {self.points_per_axis}")
        if self.dimension <= 2 * self.order:
            raise DomainError(
                f"critical exponent is infinite for N={self.dimension}, s={self.order}"
            )
        if self.points_per_axis**self.dimension > MAX_POINTS:
            raise DomainError(
                f"{self.points_per_axis}^{self.dimension} points exceed the lattice limit"
            )
        return self

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def volume(self) -> float:
        return self.box_length**self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def critical_exponent(self) -> float:
        return critical_exponent(self.dimension, self.order)

    @property
    def axis(self) -> np.ndarray:
        """Lattice coordinates along one axis, starting at -L/2."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.points_per_axis)

    def mesh(self) -> list[np.ndarray]:
        """Sparse open mesh: one broadcastable coordinate array per axis."""
        return np.meshgrid(*([self.axis] * self.dimension), indexing="ij", sparse=True)

    def radius_squared(self, center: tuple[float, ...] | None = None) -> np.ndarray:
        """|x - center|^2 at every lattice point (no periodization)."""
        center = center or (0.0,) * self.dimension
        r2 = np.zeros(self.shape)
        for x, c in zip(self.mesh(), center):
            r2 = r2 + (x - c) ** 2
        return r2

    def contains(self, point: tuple[float, ...]) -> bool:
        half = 0.5 * self.box_length
        return len(point) == self.dimension and all(-half <= p < half for p in point)

    def lattice_point(self, index: tuple[int, ...]) -> tuple[float, ...]:
        return tuple(float(self.axis[i]) for i in index)


class BubbleParams(BaseModel):
    """Amplitude, scale and center of an extremizer."""

    model_config = ConfigDict(frozen=True)

    mu: float = 1.0
    scale: float = Field(1.0, gt=0)
    center: tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_amplitude(self) -> "BubbleParams":
        if self.mu == 0:
            raise DomainError("bubble amplitude mu must be nonzero")
        return self


class EquivariantGroup(BaseModel):
    """Descriptor of G_j = Gamma^j x Lambda_j with the product character sigma_j."""

    model_config = ConfigDict(frozen=True)

    j: int = Field(ge=1)
    ambient_dimension: int
    theta_samples: int = 8
    include_rho: bool = True
    lambda_mode: LambdaMode = LambdaMode.RADIAL_CONSTRAINT
    lambda_samples: int = Field(8, ge=1)
    lambda_seed: int = 0

    @model_validator(mode="after")
    def _check_shape(self) -> "EquivariantGroup":
        if self.ambient_dimension < 4 * self.j:
            raise DomainError(
                f"G_{self.j} needs N >= {4 * self.j}, got N={self.ambient_dimension}"
            )
        if self.theta_samples < 4 or self.theta_samples % 4:
            raise DomainError(f"theta_samples must be a multiple of 4, got {self.theta_samples}")
        return self

    @property
    def trailing_dimension(self) -> int:
        return self.ambient_dimension - 4 * self.j

    @property
    def lambda_active(self) -> bool:
        """Lambda_j is O(N-4j) for j below floor(N/4) and trivial at j = floor(N/4)."""
        return (
            self.trailing_dimension > 0
            and self.j < self.ambient_dimension // 4
            and self.lambda_mode != LambdaMode.TRIVIAL
        )


class SolverConfig(BaseModel):
    """Settings of the Nehari-constrained descent."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(5000, ge=0)
    gradient_tolerance: float = Field(1e-6, gt=0)
    step_size: float = Field(1.0, gt=0)
    backtracking_factor: float = Field(0.5, gt=0, lt=1)
    armijo: float = Field(1e-4, gt=0, lt=1)
    seed: int = 0
    group: EquivariantGroup | None = None
    init: InitMode = InitMode.RANDOM_BUMP
    regularize_zero_mode: bool = True


class SolverReport(BaseModel):
    """Certified outputs of a descent run."""

    energy: float
    nehari_value: float
    gradient_residual: float
    min_value: float
    max_value: float
    iterations: int
    converged: bool
    sign_changing: bool
    equivariance_defect: float = 0.0
    circle_defect: float = 0.0
    zero_mode_regularized: bool = False
    initial_energy: float | None = None
    seed_used: int | None = None


class ConcentrationProfile(BaseModel):
    """Samples of the Levy concentration function Q_u(r)."""

    radii: list[float]
    values: list[float]
    centers: list[tuple[float, ...]]

    @model_validator(mode="after")
    def _check_monotone(self) -> "ConcentrationProfile":
        if any(b < a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be ascending")
        top = max(self.values, default=0.0)
        if any(v < 0 for v in self.values):
            raise ValueError("concentration values must be nonnegative")
        if any(b < a - 1e-12 * top for a, b in zip(self.values, self.values[1:])):
            raise ValueError("concentration values must be nondecreasing")
        return self


class ConcentrationScale(BaseModel):
    """Radius and center enclosing a prescribed mass.

    ``mass`` is Q_u measured at ``radius``; the lower and upper shells bracket
    delta between consecutive lattice shell radii.
    """

    radius: float
    center: tuple[float, ...]
    delta: float
    mass: float
    lower_radius: float
    lower_mass: float
    upper_radius: float
    upper_mass: float
    support_distance: float
    within_radius: bool


class CoveringBound(BaseModel):
    """Both sides of Q_u(R) <= floor((N+1)R/r) Q_u(r)."""

    lhs: float
    rhs: float
    holds: bool
    slack: float


class AssumptionReport(BaseModel):
    """Outcome of the orbit, witness and character checks on a group."""

    passed: bool
    points_checked: int
    continuous_orbits: int
    fixed_points: int
    witness: tuple[float, ...]
    pairs_checked: int


class RunConfig(BaseModel):
    """Flat run configuration shared by config files and command-line flags."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dim: int = 2
    s: float = 0.5
    box: float = 40.0
    grid: int = 128
    group_j: int = Field(0, ge=0)
    theta_samples: int = 8
    lambda_mode: LambdaMode = LambdaMode.RADIAL_CONSTRAINT
    init: InitMode = InitMode.BUBBLE_SEEDED
    seed: int = 0
    max_iter: int = Field(5000, ge=0)
    tol: float = Field(1e-6, gt=0)
    step_size: float = Field(1.0, gt=0)
    backtracking_factor: float = Field(0.5, gt=0, lt=1)
    regularize_zero_mode: bool = True
    out_dir: Path = Path("outputs/run")

    def grid_spec(self) -> GridSpec:
        return GridSpec(
            dimension=self.dim, order=self.s, box_length=self.box, points_per_axis=self.grid
        )

    def group(self) -> EquivariantGroup | None:
        if self.group_j == 0:
            return None
        return EquivariantGroup(
            j=self.group_j,
            ambient_dimension=self.dim,
            theta_samples=self.theta_samples,
            lambda_mode=self.lambda_mode,
        )

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            max_iterations=self.max_iter,
            gradient_tolerance=self.tol,
            step_size=self.step_size,
            backtracking_factor=self.backtracking_factor,
            seed=self.seed,
            group=self.group(),
            init=self.init,
            regularize_zero_mode=self.regularize_zero_mode,
        )


class IterationRecord(NamedTuple):
    """One line of the convergence log."""

    iteration: int
    energy: float
    nehari: float
    grad_residual: float
    min_u: float
    max_u: float
