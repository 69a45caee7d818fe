"""Periodic spectral discretization: fields, transforms and quadrature.

Coefficients follow the convention

    u_hat[k] = h^N sum_x u(x) exp(-i 2 pi k.x / L),   h = L / M,

with x on the lattice -L/2 + h n. Since the lattice starts at -L/2 the
coefficients differ from a plain FFT by the sign (-1)^(k_1 + ... + k_N).
Arrays are stored in the FFT frequency order of ``scipy.fft.fftfreq``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as fft

from .exceptions import InvalidField, NonHermitianInput
from .models import GridSpec

HERMITIAN_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Field:
    """Real samples of u on the lattice; ``values`` has shape ``grid.shape``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise InvalidField(
                f"expected {self.grid.size} values for the grid, got {values.size}"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise InvalidField("field contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_flat(cls, grid: GridSpec, flat: np.ndarray) -> "Field":
        """Build from a row-major vector with the last axis fastest."""
        return cls(grid, np.asarray(flat, dtype=np.float64).reshape(grid.shape))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.cell_volume * np.sum(self.values**2)))

    def inner(self, other: "Field") -> float:
        """Discrete L^2 pairing h^N sum_x u v."""
        return float(self.grid.cell_volume * np.sum(self.values * other.values))

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    """Coefficients u_hat[k] in FFT frequency order, shape ``grid.shape``."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=np.complex128).reshape(self.grid.shape)
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    def coefficient(self, k: tuple[int, ...]) -> complex:
        """Coefficient at the integer frequency vector k (negative k allowed)."""
        m = self.grid.points_per_axis
        return complex(self.coefficients[tuple(ki % m for ki in k)])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.grid, scalar * self.coefficients)

    __rmul__ = __mul__


@lru_cache(maxsize=32)
def integer_frequencies(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Integer frequency vectors k in {-M/2, ..., M/2 - 1}^N as an open mesh."""
    k = np.rint(fft.fftfreq(grid.points_per_axis, d=1.0 / grid.points_per_axis)).astype(int)
    return tuple(np.meshgrid(*([k] * grid.dimension), indexing="ij", sparse=True))


@lru_cache(maxsize=32)
def wavenumber_squared(grid: GridSpec) -> np.ndarray:
    """|2 pi k / L|^2 on the frequency lattice."""
    scale = 2.0 * np.pi / grid.box_length
    xi2 = np.zeros(grid.shape)
    for k in integer_frequencies(grid):
        xi2 = xi2 + (scale * k) ** 2
    xi2.setflags(write=False)
    return xi2


@lru_cache(maxsize=32)
def _lattice_phase(grid: GridSpec) -> np.ndarray:
    total = sum(integer_frequencies(grid))
    phase = np.where(np.broadcast_to(total, grid.shape) % 2 == 0, 1.0, -1.0)
    phase.setflags(write=False)
    return phase


def forward_transform(u: Field) -> SpectralField:
    """Coefficients of u in the convention of this module."""
    grid = u.grid
    coefficients = grid.cell_volume * _lattice_phase(grid) * fft.fftn(u.values)
    return SpectralField(grid, coefficients)


def inverse_transform(v: SpectralField) -> Field:
    """Real field reconstructed from Hermitian-symmetric coefficients."""
    grid = v.grid
    samples = fft.ifftn(_lattice_phase(grid) * v.coefficients) / grid.cell_volume
    real_norm = float(np.linalg.norm(samples.real))
    imag_norm = float(np.linalg.norm(samples.imag))
    if imag_norm > HERMITIAN_TOLERANCE * max(real_norm, np.finfo(float).tiny):
        raise NonHermitianInput(
            f"reconstruction has imaginary part {imag_norm:.3e} against real part {real_norm:.3e}",
            imaginary_ratio=imag_norm / max(real_norm, np.finfo(float).tiny),
        )
    return Field(grid, samples.real)


def integrate_power(u: Field, p: float) -> float:
    """h^N sum_x |u(x)|^p."""
    return float(u.grid.cell_volume * np.sum(np.abs(u.values) ** p))
