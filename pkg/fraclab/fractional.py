"""Fractional Laplacian, the constants C(N,s) and S(N,s), norms and bubbles.

One normalization is used throughout: (-Delta)^s is the Fourier multiplier
|xi|^{2s} and the Sobolev energy is

    quadratic_form(u) = L^{-N} sum_k |2 pi k / L|^{2s} |u_hat[k]|^2,

the discrete counterpart of ||(-Delta)^{s/2} u||^2_{L^2}. The Gagliardo
double integral equals 2 C(N,s) times this quantity; C(N,s) only enters
through ``gagliardo_seminorm`` and the cross-checks in the tests.

The ``regularized`` variants give the constant mode the weight (2 pi / L)^{2s}
of the lowest nonzero frequency instead of 0. On the torus the plain form
vanishes on constants, so near-constant fields sit on the Nehari manifold
with energy close to 0; the solver works with the regularized form.
"""

from __future__ import annotations

import logging
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .exceptions import DomainError, NoDecayWarning
from .grid import (
    Field,
    SpectralField,
    forward_transform,
    integrate_power,
    inverse_transform,
    wavenumber_squared,
)
from .models import BubbleParams, GridSpec, critical_exponent

logger = logging.getLogger(__name__)

QUAD_OPTIONS = {"epsabs": 0.0, "epsrel": 1e-12, "limit": 200}
DECAY_THRESHOLD = 1e-3


def _check_order(order: float) -> None:
    if not 0.0 < order < 1.0:
        raise DomainError(f"order s must lie in (0, 1), got {order}")


def dirichlet_constant(dimension: int, order: float) -> float:
    """C(N,s) = int_{R^N} (1 - cos eta_1) / |eta|^{N+2s} d eta.

    Integrating out eta_2..eta_N leaves |t|^{-1-2s} times a transverse
    radial integral, so C(N,s) is the product of two one-dimensional
    quadratures, each split at 1 (singular part / tail).
    """
    _check_order(order)
    if dimension < 1:
        raise DomainError(f"dimension must be positive, got {dimension}")

    exponent = 1.0 + 2.0 * order

    # 1 - cos t = 2 sin^2(t/2) avoids cancellation near the origin
    near, _ = integrate.quad(
        lambda t: 2.0 * np.sin(0.5 * t) ** 2 * t ** (-exponent), 0.0, 1.0, **QUAD_OPTIONS
    )
    oscillating, _ = integrate.quad(
        lambda t: t ** (-exponent), 1.0, np.inf, weight="cos", wvar=1.0, limit=200
    )
    longitudinal = 2.0 * (near + 1.0 / (2.0 * order) - oscillating)

    if dimension == 1:
        return longitudinal

    power = 0.5 * (dimension + 2.0 * order)

    def radial(rho: float) -> float:
        return rho ** (dimension - 2) * (1.0 + rho * rho) ** (-power)

    inner, _ = integrate.quad(radial, 0.0, 1.0, **QUAD_OPTIONS)
    tail, _ = integrate.quad(radial, 1.0, np.inf, **QUAD_OPTIONS)
    sphere = 2.0 * np.pi ** (0.5 * (dimension - 1)) / np.exp(gammaln(0.5 * (dimension - 1)))
    return float(longitudinal * sphere * (inner + tail))


def sobolev_constant(dimension: int, order: float) -> float:
    """Sharp constant S(N,s) of ||u||^2_{L^{2*}} <= S ||(-Delta)^{s/2} u||^2_{L^2}."""
    _check_order(order)
    if dimension <= 2 * order:
        raise DomainError(f"Sobolev constant needs N > 2s, got N={dimension}, s={order}")
    n, s = float(dimension), float(order)
    log_value = (
        -2.0 * s * np.log(2.0)
        - s * np.log(np.pi)
        + gammaln(0.5 * (n - 2.0 * s))
        - gammaln(0.5 * (n + 2.0 * s))
        + (2.0 * s / n) * (gammaln(n) - gammaln(0.5 * n))
    )
    return float(np.exp(log_value))


def ground_state_level(dimension: int, order: float) -> float:
    """Least energy on the Nehari manifold of R^N: (s/N) S(N,s)^{-N/(2s)}."""
    return (order / dimension) * sobolev_constant(dimension, order) ** (
        -dimension / (2.0 * order)
    )


def zero_mode_weight(grid: GridSpec) -> float:
    """(2 pi / L)^{2s}, the smallest nonzero value of the symbol."""
    return float((2.0 * np.pi / grid.box_length) ** (2.0 * grid.order))


@lru_cache(maxsize=64)
def fractional_symbol(grid: GridSpec, regularized: bool = False) -> np.ndarray:
    """|xi|^{2s} on the frequency lattice; the zero mode gets zero_mode_weight when regularized."""
    symbol = wavenumber_squared(grid) ** grid.order
    if regularized:
        symbol[(0,) * grid.dimension] = zero_mode_weight(grid)
    symbol.setflags(write=False)
    return symbol


def fractional_laplacian(u: Field, regularized: bool = False) -> Field:
    """(-Delta)^s u as the Fourier multiplier |xi|^{2s}; annihilates constants unless regularized."""
    v = forward_transform(u)
    symbol = fractional_symbol(u.grid, regularized)
    return inverse_transform(SpectralField(v.grid, symbol * v.coefficients))


def quadratic_form(u: Field, regularized: bool = False) -> float:
    """L^{-N} sum_k |xi_k|^{2s} |u_hat_k|^2, zero exactly on constants unless regularized."""
    v = forward_transform(u)
    weighted = fractional_symbol(u.grid, regularized) * np.abs(v.coefficients) ** 2
    return float(np.sum(weighted) / u.grid.volume)


def sobolev_norm(u: Field, regularized: bool = False) -> float:
    return float(np.sqrt(quadratic_form(u, regularized)))


def dual_norm(g: Field, regularized: bool = False) -> float:
    """H^{-s} norm dual to ``sobolev_norm``; without regularization the constant mode is dropped."""
    v = forward_transform(g)
    symbol = fractional_symbol(g.grid, regularized)
    inverse = np.zeros_like(symbol)
    np.divide(1.0, symbol, out=inverse, where=symbol > 0)
    return float(np.sqrt(np.sum(inverse * np.abs(v.coefficients) ** 2) / g.grid.volume))


def gagliardo_seminorm(u: Field) -> float:
    """Double-integral form of the energy: 2 C(N,s) quadratic_form(u)."""
    grid = u.grid
    return 2.0 * dirichlet_constant(grid.dimension, grid.order) * quadratic_form(u)


def sobolev_quotient(u: Field) -> float:
    """(int |u|^{2*})^{2/2*} / quadratic_form(u).

    On R^N this is at most S(N,s). On the torus the constant mode of a slowly
    decaying field adds to the numerator but not to the form, so the sampled
    bubble can exceed S(N,s).
    """
    q = u.grid.critical_exponent
    energy = quadratic_form(u)
    if energy == 0:
        raise DomainError("Sobolev quotient undefined for constant fields")
    return integrate_power(u, q) ** (2.0 / q) / energy


def bubble(grid: GridSpec, params: BubbleParams) -> Field:
    """Sample mu lambda^{-(N-2s)/2} (1 + |x-x0|^2/lambda^2)^{-(N-2s)/2} (no periodization)."""
    center = params.center or (0.0,) * grid.dimension
    if not grid.contains(center):
        raise DomainError(f"bubble center {center} lies outside the box")
    decay = 0.5 * (grid.dimension - 2.0 * grid.order)
    r2 = grid.radius_squared(center)
    values = params.mu * params.scale ** (-decay) * (1.0 + r2 / params.scale**2) ** (-decay)
    return Field(grid, values)


def boundary_ratio(u: Field) -> float:
    """Largest |u| on the outermost lattice planes relative to the peak."""
    peak = float(np.max(np.abs(u.values)))
    if peak == 0:
        return 0.0
    edge = max(
        float(np.max(np.abs(np.take(u.values, [0, -1], axis=axis))))
        for axis in range(u.grid.dimension)
    )
    return edge / peak


def bubble_pde_residual(grid: GridSpec, params: BubbleParams) -> tuple[float, float]:
    """Best amplitude and relative residual of the sampled bubble in the PDE.

    For the mu = 1 profile w, c w solves the equation when
    c (-Delta)^s w = c^{2*-1} w^{2*-1}; the relative residual
    ||A - t B|| / ||A|| with A = (-Delta)^s w, B = |w|^{2*-2} w is a
    least-squares problem in t = c^{2*-2}.
    """
    q = critical_exponent(grid.dimension, grid.order)
    profile = bubble(grid, params.model_copy(update={"mu": 1.0}))

    ratio = boundary_ratio(profile)
    if ratio > DECAY_THRESHOLD:
        warnings.warn(
            f"bubble has not decayed at the box boundary (edge/peak = {ratio:.2e})",
            NoDecayWarning,
            stacklevel=2,
        )

    linear = fractional_laplacian(profile)
    nonlinear = profile.with_values(np.abs(profile.values) ** (q - 2.0) * profile.values)

    t = linear.inner(nonlinear) / nonlinear.inner(nonlinear)
    if t <= 0:
        raise DomainError("bubble residual has no positive amplitude minimizer")
    residual = (linear - nonlinear * t).l2_norm() / linear.l2_norm()
    best_mu = t ** (1.0 / (q - 2.0))

    logger.debug(f"bubble residual: mu={best_mu:.6g}, relative residual={residual:.3e}")
    return float(best_mu), float(residual)
