"""Levy concentration Q_u(r) = sup_z int_{B(z,r)} |u|^q and the tools built on it.

Centers z range over lattice points and balls are periodic: a cell belongs
to B(z, r) when its minimal periodic offset from z has length <= r. The ball
sums for all centers at once are a circular convolution of |u|^q with the
ball indicator.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.fft as fft
from scipy import ndimage

from .exceptions import DeltaOutOfRange, DomainError, RadiusTooLarge
from .grid import Field, integrate_power
from .models import ConcentrationProfile, ConcentrationScale, CoveringBound, GridSpec

logger = logging.getLogger(__name__)

MEMBERSHIP_SLACK = 1e-12
TIE_TOLERANCE = 1e-12


def _periodic_offset_squared(grid: GridSpec) -> np.ndarray:
    """Squared minimal periodic distance from lattice index 0 to every cell."""
    m = grid.points_per_axis
    n = np.arange(m)
    offset = grid.spacing * np.minimum(n, m - n)
    squared = np.zeros(grid.shape)
    for axis in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[axis] = m
        squared = squared + (offset**2).reshape(shape)
    return squared


def ball_indicator(grid: GridSpec, r: float) -> np.ndarray:
    """Cells within periodic distance r of index 0."""
    return (_periodic_offset_squared(grid) <= r * r * (1.0 + MEMBERSHIP_SLACK)).astype(float)


def ball_masses(u: Field, r: float) -> np.ndarray:
    """int_{B(z,r)} |u|^q for every lattice center z."""
    grid = u.grid
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    if r > 0.5 * grid.box_length:
        raise RadiusTooLarge(f"radius {r} exceeds half the box {0.5 * grid.box_length}")
    density = grid.cell_volume * np.abs(u.values) ** grid.critical_exponent
    kernel = ball_indicator(grid, r)
    masses = fft.irfftn(fft.rfftn(density) * fft.rfftn(kernel), s=grid.shape)
    return np.clip(masses, 0.0, None)


def _argmax_lowest(values: np.ndarray) -> int:
    best = float(np.max(values))
    return int(np.flatnonzero(values.reshape(-1) >= best - TIE_TOLERANCE * best)[0])


def levy_concentration(u: Field, r: float) -> tuple[float, tuple[float, ...]]:
    """Q_u(r) and the lowest-index lattice center attaining it."""
    masses = ball_masses(u, r)
    index = _argmax_lowest(masses)
    center = u.grid.lattice_point(np.unravel_index(index, u.grid.shape))
    return float(masses.reshape(-1)[index]), center


def concentration_profile(u: Field, radii: list[float]) -> ConcentrationProfile:
    values, centers = [], []
    for r in radii:
        value, center = levy_concentration(u, r)
        values.append(value)
        centers.append(center)
    return ConcentrationProfile(radii=list(radii), values=values, centers=centers)


def _lattice_shift(grid: GridSpec, xi: tuple[float, ...]) -> tuple[int, ...] | None:
    steps = np.asarray(xi, dtype=float) / grid.spacing
    rounded = np.rint(steps)
    if np.allclose(steps, rounded, atol=1e-9, rtol=0.0):
        return tuple(int(k) for k in rounded)
    return None


def rescale(u: Field, lam: float, xi: tuple[float, ...] | None = None, order: int = 3) -> Field:
    """u_{lam,xi}(x) = lam^{(N-2s)/2} u(lam x + xi).

    When lam is a power of 2 and xi a lattice vector the result lives on the
    box of length L/lam with the same M and is an exact relabelling of the
    samples. Otherwise u is interpolated (periodically) on the same grid.
    """
    grid = u.grid
    if lam <= 0:
        raise DomainError(f"scale must be positive, got {lam}")
    xi = tuple(xi) if xi else (0.0,) * grid.dimension
    if len(xi) != grid.dimension:
        raise DomainError(f"shift has {len(xi)} components, grid is {grid.dimension}-dimensional")
    amplitude = lam ** (0.5 * (grid.dimension - 2.0 * grid.order))

    exponent = math.log2(lam)
    shift = _lattice_shift(grid, xi)
    if exponent == round(exponent) and shift is not None:
        target = grid.model_copy(update={"box_length": grid.box_length / lam})
        values = np.roll(u.values, tuple(-k for k in shift), axis=tuple(range(grid.dimension)))
        return Field(target, amplitude * values)

    axes = np.meshgrid(*([grid.axis] * grid.dimension), indexing="ij")
    index = np.stack(
        [(lam * a + x + 0.5 * grid.box_length) / grid.spacing for a, x in zip(axes, xi)]
    )
    values = ndimage.map_coordinates(u.values, index, order=order, mode="grid-wrap")
    return Field(grid, amplitude * values)


def covering_bound_check(u: Field, r: float, big_r: float) -> CoveringBound:
    """Compare Q_u(R) with floor((N+1) R / r) Q_u(r)."""
    if not 0 < r < big_r:
        raise DomainError(f"need 0 < r < R, got r={r}, R={big_r}")
    lhs, _ = levy_concentration(u, big_r)
    small, _ = levy_concentration(u, r)
    count = math.floor((u.grid.dimension + 1) * big_r / r)
    rhs = count * small
    return CoveringBound(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12 * max(1.0, lhs), slack=rhs - lhs)


def shell_radii(grid: GridSpec) -> np.ndarray:
    """Distinct radii at which the periodic ball gains cells, up to L/2."""
    radii = np.unique(np.sqrt(_periodic_offset_squared(grid)))
    return radii[radii <= 0.5 * grid.box_length]


def _support_distance(u: Field, center: tuple[float, ...]) -> float:
    grid = u.grid
    peak = float(np.max(np.abs(u.values)))
    support = np.abs(u.values) > TIE_TOLERANCE * peak
    squared = np.zeros(grid.shape)
    for x, c in zip(grid.mesh(), center):
        d = np.abs(x - c) % grid.box_length
        squared = squared + np.minimum(d, grid.box_length - d) ** 2
    return float(np.sqrt(np.min(squared[support])))


def concentration_scale(u: Field, delta: float) -> ConcentrationScale:
    """Radius r and center z with Q_u(r) = delta.

    Q_u is a step function of r that jumps at lattice shell radii; the shell
    where it first reaches delta is found by bisection and r is interpolated
    linearly from the previous shell. ``mass`` is Q_u measured at r, and the
    bracketing shells satisfy lower_mass < delta <= upper_mass.
    """
    total = integrate_power(u, u.grid.critical_exponent)
    if not 0 < delta < total:
        raise DeltaOutOfRange(f"delta must lie in (0, {total:.6g}), got {delta}")

    radii = shell_radii(u.grid)

    def mass(i: int) -> tuple[float, tuple[float, ...]]:
        if radii[i] == 0:
            density = u.grid.cell_volume * np.abs(u.values) ** u.grid.critical_exponent
            index = _argmax_lowest(density)
            return float(density.reshape(-1)[index]), u.grid.lattice_point(
                np.unravel_index(index, u.grid.shape)
            )
        return levy_concentration(u, float(radii[i]))

    top, top_center = mass(len(radii) - 1)
    if top < delta:
        raise DeltaOutOfRange(
            f"delta {delta:.6g} exceeds the largest ball mass {top:.6g} at radius L/2"
        )

    lo, hi = 0, len(radii) - 1
    hi_value, hi_center = top, top_center
    lo_value, lo_center = mass(0)
    if lo_value >= delta:
        # a single cell already holds delta
        radius, center, measured = 0.0, lo_center, lo_value
        lower_radius, lower_mass, upper_radius, upper_mass = 0.0, 0.0, 0.0, lo_value
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            mid_value, mid_center = mass(mid)
            if mid_value >= delta:
                hi, hi_value, hi_center = mid, mid_value, mid_center
            else:
                lo, lo_value = mid, mid_value
        weight = (delta - lo_value) / (hi_value - lo_value)
        radius = float(radii[lo] + weight * (radii[hi] - radii[lo]))
        center = hi_center
        measured, _ = levy_concentration(u, radius)
        lower_radius, lower_mass = float(radii[lo]), lo_value
        upper_radius, upper_mass = float(radii[hi]), hi_value

    distance = _support_distance(u, center)
    logger.debug(
        f"concentration scale: delta={delta:.6g} r={radius:.6g} Q(r)={measured:.6g} center={center}"
    )
    return ConcentrationScale(
        radius=radius,
        center=center,
        delta=delta,
        mass=float(measured),
        lower_radius=lower_radius,
        lower_mass=float(lower_mass),
        upper_radius=upper_radius,
        upper_mass=float(upper_mass),
        support_distance=distance,
        within_radius=distance <= radius,
    )
