"""Energy and Nehari functionals, Nehari projection and the constrained descent solver.

With q = 2N/(N-2s) and the quadratic form Q(u) of ``fractional``:

    E(u) = Q(u)/2 - (1/q) int |u|^q,     N(u) = Q(u) - int |u|^q.

Since 1/2 - 1/q = s/N, every field on the Nehari manifold has E(u) = (s/N) Q(u).

Every functional takes ``regularized``; with it Q gives the constant mode the
weight (2 pi / L)^{2s}, which lifts the Nehari level of constants to
(s/N) (2 pi)^N. The identities above hold for either form.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from tenacity import retry, retry_if_exception_type, stop_after_attempt

from .equivariance import circle_defect, is_equivariant, symmetrize
from .exceptions import DegenerateIterate, Diverged, DomainError, InvalidField, NotOnManifold, ZeroField
from .fractional import bubble, dual_norm, fractional_laplacian, quadratic_form, sobolev_norm
from .grid import Field, integrate_power
from .models import BubbleParams, GridSpec, InitMode, IterationRecord, SolverConfig, SolverReport

logger = logging.getLogger(__name__)

MAX_REDRAWS = 16
DIVERGENCE_FACTOR = 1e6
COLLAPSE_NORM = 1e-12
SIGN_MARGIN = 1e-6
MANIFOLD_TOLERANCE = 1e-6
MIN_STEP_RATIO = 1e-14


def energy(u: Field, regularized: bool = False) -> float:
    q = u.grid.critical_exponent
    return 0.5 * quadratic_form(u, regularized) - integrate_power(u, q) / q


def nehari_value(u: Field, regularized: bool = False) -> float:
    return quadratic_form(u, regularized) - integrate_power(u, u.grid.critical_exponent)


def nehari_scale(u: Field, regularized: bool = False) -> float:
    """t* > 0 with nehari_value(t* u) = 0."""
    q = u.grid.critical_exponent
    power = integrate_power(u, q)
    if power == 0:
        raise ZeroField("Nehari projection undefined for the zero field")
    form = quadratic_form(u, regularized)
    if form == 0:
        raise DomainError("Nehari projection undefined for constant fields")
    return (form / power) ** (1.0 / (q - 2.0))


def nehari_project(u: Field, regularized: bool = False) -> Field:
    return u * nehari_scale(u, regularized)


def energy_gradient(u: Field, regularized: bool = False) -> Field:
    """L^2 gradient (-Delta)^s u - |u|^{q-2} u in the pairing h^N sum_x."""
    q = u.grid.critical_exponent
    nonlinear = np.abs(u.values) ** (q - 2.0) * u.values
    return Field(u.grid, fractional_laplacian(u, regularized).values - nonlinear)


def energy_along_ray(u: Field, t: float, regularized: bool = False) -> float:
    """E(t u) = Q(u) (t^2/2 - t^q/q) for u on the Nehari manifold."""
    form = quadratic_form(u, regularized)
    value = nehari_value(u, regularized)
    if abs(value) > MANIFOLD_TOLERANCE * form:
        raise NotOnManifold(
            f"|N(u)| = {abs(value):.3e} exceeds {MANIFOLD_TOLERANCE:g} Q(u)", nehari_value=value
        )
    q = u.grid.critical_exponent
    return form * (0.5 * t * t - t**q / q)


def pairing_identities(u: Field, regularized: bool = False) -> dict[str, float]:
    """Residuals of <E'(u), u> = N(u), E - <E'(u),u>/q = (s/N) Q and E - <E'(u),u>/2 = (s/N) int|u|^q."""
    grid = u.grid
    q = grid.critical_exponent
    ratio = grid.order / grid.dimension
    pairing = energy_gradient(u, regularized).inner(u)
    value = energy(u, regularized)
    return {
        "nehari_pairing": abs(pairing - nehari_value(u, regularized)),
        "quadratic_identity": abs(value - pairing / q - ratio * quadratic_form(u, regularized)),
        "power_identity": abs(value - 0.5 * pairing - ratio * integrate_power(u, q)),
    }


def gradient_residual(u: Field, regularized: bool = False) -> float:
    """||E'(u)||_{H^-s} / ||u||_{H^s}; the constant mode only counts when regularized."""
    norm = sobolev_norm(u, regularized)
    if norm == 0:
        raise ZeroField("gradient residual undefined for constant fields")
    return dual_norm(energy_gradient(u, regularized), regularized) / norm


def sign_changing(u: Field) -> bool:
    margin = SIGN_MARGIN * float(np.max(np.abs(u.values)))
    return float(np.min(u.values)) < -margin and float(np.max(u.values)) > margin


def smooth_cutoff(grid: GridSpec, radius: float) -> Field:
    """1 on |x| <= radius/2, cos^2 transition to 0 at |x| = radius."""
    r = np.sqrt(grid.radius_squared())
    t = np.clip((r - 0.5 * radius) / (0.5 * radius), 0.0, 1.0)
    return Field(grid, np.cos(0.5 * np.pi * t) ** 2)


def domain_level_sequence(grid: GridSpec, radius: float, scales: list[float]) -> list[float]:
    """Nehari levels of bubbles of decreasing scale cut off inside the ball of ``radius``."""
    if not 0 < radius <= 0.5 * grid.box_length:
        raise DomainError(f"cutoff radius must lie in (0, L/2], got {radius}")
    cutoff = smooth_cutoff(grid, radius).values
    levels = []
    for scale in scales:
        profile = bubble(grid, BubbleParams(scale=scale))
        levels.append(energy(nehari_project(Field(grid, profile.values * cutoff))))
    return levels


class DescentSolver:
    """Projected gradient descent on the Nehari manifold, optionally sigma-equivariant.

    Each step is u <- P(S(u - alpha d)) where d is the energy gradient, S the
    average over the lattice core of the group and P the Nehari projection.
    alpha is found by Armijo backtracking and grows again by 1/beta after
    each accepted step. The circle angles 2 pi k / K are not averaged over
    (interpolated averaging is not a projection); the final field reports
    its defect under them as ``circle_defect``.
    """

    def __init__(
        self,
        config: SolverConfig,
        grid: GridSpec,
        initial: Field | None = None,
        callback: Callable[[IterationRecord], None] | None = None,
    ):
        if config.group is not None and config.group.ambient_dimension != grid.dimension:
            raise DomainError(
                f"group acts on R^{config.group.ambient_dimension}, grid is {grid.dimension}-dimensional"
            )
        if config.init == InitMode.USER_FIELD and initial is None:
            raise DomainError("init=user_field needs an initial field")
        if initial is not None and initial.grid != grid:
            raise DomainError(f"initial field lives on {initial.grid}, the solve on {grid}")
        self.config = config
        self.grid = grid
        self.initial = initial
        self.callback = callback
        self.regularized = config.regularize_zero_mode
        self._draws = 0
        self.seed_used: int | None = None

    def _symmetrize(self, u: Field) -> Field:
        if self.config.group is None:
            return u
        return symmetrize(u, self.config.group)

    def _draw(self, seed: int) -> Field:
        grid = self.grid
        rng = np.random.default_rng(seed)
        half = 0.5 * grid.box_length
        if self.config.init == InitMode.USER_FIELD:
            return self.initial
        if self.config.init == InitMode.BUBBLE_SEEDED:
            center = (0.0,) * grid.dimension
            if self._draws > 1:
                center = tuple(rng.uniform(-0.25 * half, 0.25 * half, grid.dimension))
            return bubble(grid, BubbleParams(scale=1.0, center=center))

        width = grid.box_length / 8.0
        values = np.zeros(grid.shape)
        for _ in range(3):
            center = rng.uniform(-0.5 * half, 0.5 * half, grid.dimension)
            sign = rng.choice((-1.0, 1.0))
            values += sign * np.exp(-grid.radius_squared(tuple(center)) / (2.0 * width**2))
        return Field(grid, values)

    @retry(
        retry=retry_if_exception_type(ZeroField),
        stop=stop_after_attempt(MAX_REDRAWS + 1),
        reraise=True,
    )
    def _initial_guess(self) -> Field:
        self._draws += 1
        seed = self.config.seed + self._draws - 1
        raw = self._draw(seed)
        averaged = self._symmetrize(raw)
        if averaged.l2_norm() <= COLLAPSE_NORM * max(raw.l2_norm(), 1.0):
            if self.config.init == InitMode.USER_FIELD:
                raise DegenerateIterate("user field vanishes after equivariant averaging")
            logger.info(f"Initial guess (seed {seed}) vanishes after averaging, redrawing")
            raise ZeroField("initial guess vanishes after averaging")
        self.seed_used = seed
        return nehari_project(averaged, self.regularized)

    def _record(self, iteration: int, u: Field, residual: float) -> IterationRecord:
        record = IterationRecord(
            iteration=iteration,
            energy=energy(u, self.regularized),
            nehari=nehari_value(u, self.regularized),
            grad_residual=residual,
            min_u=float(np.min(u.values)),
            max_u=float(np.max(u.values)),
        )
        logger.debug(
            f"iter {iteration}: E={record.energy:.10g} N={record.nehari:.3e} "
            f"res={residual:.3e}"
        )
        if self.callback is not None:
            self.callback(record)
        return record

    def _converged(self, u: Field, residual: float) -> bool:
        tol = self.config.gradient_tolerance
        form = quadratic_form(u, self.regularized)
        return residual <= tol and abs(nehari_value(u, self.regularized)) <= tol * form

    def _step(self, u: Field, value: float, direction: Field, alpha: float) -> tuple[Field, float, float] | None:
        """Backtracking line search; None when the step underflows."""
        config = self.config
        slope = direction.inner(direction)
        floor = MIN_STEP_RATIO * config.step_size
        while alpha >= floor:
            moved = self._symmetrize(u - direction * alpha)
            if moved.l2_norm() < COLLAPSE_NORM:
                raise DegenerateIterate("iterate collapsed to the zero field")
            try:
                trial = nehari_project(moved, self.regularized)
            except ZeroField as exc:
                raise DegenerateIterate("iterate collapsed to the zero field") from exc
            trial_value = energy(trial, self.regularized)
            if trial_value <= value - config.armijo * alpha * slope:
                return trial, trial_value, alpha
            alpha *= config.backtracking_factor
        return None

    def run(self) -> tuple[Field, SolverReport]:
        config = self.config
        try:
            u = self._initial_guess()
        except ZeroField as exc:
            raise DegenerateIterate(
                f"initial guess vanished after {MAX_REDRAWS} redraws"
            ) from exc

        initial_energy = energy(u, self.regularized)
        value = initial_energy
        residual = gradient_residual(u, self.regularized)
        self._record(0, u, residual)
        logger.info(
            f"Descent start: E0={initial_energy:.10g}, residual={residual:.3e}, seed={self.seed_used}"
        )

        converged = self._converged(u, residual)
        iterations = 0
        alpha = config.step_size
        while not converged and iterations < config.max_iterations:
            direction = energy_gradient(u, self.regularized)
            try:
                step = self._step(u, value, direction, alpha)
            except InvalidField as exc:
                raise Diverged(f"non-finite iterate at step {iterations + 1}") from exc
            if step is None:
                logger.warning(f"Line search stalled at iteration {iterations}")
                break
            u, value, alpha = step
            iterations += 1
            if not np.isfinite(value) or value > DIVERGENCE_FACTOR * abs(initial_energy):
                raise Diverged(f"energy {value:.3e} exceeds {DIVERGENCE_FACTOR:g} x initial")
            residual = gradient_residual(u, self.regularized)
            self._record(iterations, u, residual)
            converged = self._converged(u, residual)
            alpha = min(alpha / config.backtracking_factor, config.step_size)

        defect = circle = 0.0
        if config.group is not None:
            _, defect = is_equivariant(u, config.group)
            circle = circle_defect(u, config.group)

        report = SolverReport(
            energy=value,
            nehari_value=nehari_value(u, self.regularized),
            gradient_residual=residual,
            min_value=float(np.min(u.values)),
            max_value=float(np.max(u.values)),
            iterations=iterations,
            converged=converged,
            sign_changing=sign_changing(u),
            equivariance_defect=defect,
            circle_defect=circle,
            zero_mode_regularized=self.regularized,
            initial_energy=initial_energy,
            seed_used=self.seed_used,
        )
        if converged:
            logger.info(f"Converged in {iterations} iterations: E={value:.10g}")
        else:
            logger.warning(
                f"Not converged after {iterations} iterations (residual {residual:.3e})"
            )
        return u, report


def descent_solve(
    config: SolverConfig,
    grid: GridSpec,
    initial: Field | None = None,
    callback: Callable[[IterationRecord], None] | None = None,
) -> tuple[Field, SolverReport]:
    """Run the Nehari-constrained descent and return the final field with its report."""
    return DescentSolver(config, grid, initial=initial, callback=callback).run()
