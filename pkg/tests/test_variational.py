"""Tests for the energy, the Nehari projection and the descent solver."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory for imports
sys.path.insert(0, str(Path(__file__).parent.parent))


def make_grid(dimension=2, points=16, box=10.0, order=0.5):
    from fraclab.models import GridSpec

    return GridSpec(dimension=dimension, order=order, box_length=box, points_per_axis=points)


def random_field(grid, seed=0, scale=1.0):
    from fraclab.grid import Field

    return Field(grid, scale * np.random.default_rng(seed).normal(size=grid.shape))


class TestFunctionals:
    """Test energy and Nehari functionals."""

    def test_zero_field(self):
        from fraclab.grid import Field
        from fraclab.variational import energy, energy_gradient, nehari_value

        u = Field.zeros(make_grid())
        assert energy(u) == 0.0
        assert nehari_value(u) == 0.0
        assert np.all(energy_gradient(u).values == 0.0)

    def test_small_fields_have_positive_nehari_value(self):
        from fraclab.variational import nehari_value

        u = random_field(make_grid(), seed=1, scale=1e-3)
        assert nehari_value(u) > 0

    def test_negative_energy_forces_negative_nehari_value(self):
        from fraclab.variational import energy, nehari_project, nehari_value

        u = nehari_project(random_field(make_grid(), seed=2)) * 2.0
        assert energy(u) < 0
        assert nehari_value(u) < 0

    @pytest.mark.parametrize("order", [0.25, 0.5, 0.8])
    def test_pairing_identities(self, order):
        from fraclab.fractional import quadratic_form
        from fraclab.grid import integrate_power
        from fraclab.variational import pairing_identities

        grid = make_grid(order=order)
        u = random_field(grid, seed=3)
        scale = quadratic_form(u) + integrate_power(u, grid.critical_exponent)
        residuals = pairing_identities(u)
        assert set(residuals) == {"nehari_pairing", "quadratic_identity", "power_identity"}
        assert max(residuals.values()) <= 1e-10 * scale

    def test_energy_on_manifold(self):
        from fraclab.fractional import quadratic_form
        from fraclab.variational import energy, nehari_project

        u = nehari_project(random_field(make_grid(), seed=4))
        assert energy(u) == pytest.approx(0.25 * quadratic_form(u), rel=1e-10)
        assert energy(u) > 0

    def test_gradient_matches_finite_differences(self):
        from fraclab.variational import energy, energy_gradient

        grid = make_grid()
        for trial in range(10):
            u = random_field(grid, seed=100 + trial)
            phi = random_field(grid, seed=200 + trial)
            eps = 1e-5
            numeric = (energy(u + phi * eps) - energy(u - phi * eps)) / (2 * eps)
            analytic = energy_gradient(u).inner(phi)
            assert analytic == pytest.approx(numeric, rel=1e-6)


class TestNehariProjection:
    """Test the closed-form Nehari scaling."""

    def test_projection_lands_on_manifold(self):
        from fraclab.fractional import quadratic_form
        from fraclab.variational import nehari_project, nehari_value

        u = nehari_project(random_field(make_grid(), seed=6))
        assert abs(nehari_value(u)) <= 1e-10 * quadratic_form(u)

    def test_fixed_point_and_idempotence(self):
        from fraclab.variational import nehari_project, nehari_scale

        u = nehari_project(random_field(make_grid(), seed=7))
        assert nehari_scale(u) == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(nehari_project(u).values - u.values)) <= 1e-12 * np.max(np.abs(u.values))

    def test_homogeneity(self):
        from fraclab.variational import nehari_project, nehari_scale

        u = random_field(make_grid(), seed=8)
        assert nehari_scale(u * 3.0) == pytest.approx(nehari_scale(u) / 3.0, rel=1e-12)
        assert np.allclose(nehari_project(u * 3.0).values, nehari_project(u).values, rtol=1e-12, atol=0)

    def test_zero_field(self):
        from fraclab.exceptions import ZeroField
        from fraclab.grid import Field
        from fraclab.variational import nehari_scale

        with pytest.raises(ZeroField):
            nehari_scale(Field.zeros(make_grid()))


    def test_projected_bubble_energy_matches_discrete_quotient(self):
        from fraclab.fractional import bubble, sobolev_quotient
        from fraclab.models import BubbleParams
        from fraclab.variational import energy, nehari_project

        grid = make_grid(points=64, box=40.0)
        u = bubble(grid, BubbleParams())
        quotient = sobolev_quotient(u)
        assert energy(nehari_project(u)) == pytest.approx(0.25 * quotient**-2.0, rel=1e-10)


class TestZeroModeRegularization:
    """Test the functionals with the weighted constant mode."""

    @pytest.mark.parametrize("dimension,order,box", [(2, 0.5, 10.0), (2, 0.5, 40.0), (3, 0.75, 6.0)])
    def test_constant_level_is_box_independent(self, dimension, order, box):
        from fraclab.grid import Field
        from fraclab.variational import energy, nehari_project

        grid = make_grid(dimension=dimension, order=order, box=box, points=8)
        u = nehari_project(Field(grid, 0.3 * np.ones(grid.shape)), regularized=True)
        level = order / dimension * (2.0 * np.pi) ** dimension
        assert energy(u, regularized=True) == pytest.approx(level, rel=1e-10)

    def test_identities_hold(self):
        from fraclab.fractional import quadratic_form
        from fraclab.grid import Field, integrate_power
        from fraclab.variational import energy, nehari_project, nehari_value, pairing_identities

        grid = make_grid()
        u = random_field(grid, seed=13) + Field(grid, 0.7 * np.ones(grid.shape))
        scale = quadratic_form(u, regularized=True) + integrate_power(u, grid.critical_exponent)
        assert max(pairing_identities(u, regularized=True).values()) <= 1e-10 * scale

        v = nehari_project(u, regularized=True)
        assert abs(nehari_value(v, regularized=True)) <= 1e-10 * quadratic_form(v, regularized=True)
        assert energy(v, regularized=True) == pytest.approx(0.25 * quadratic_form(v, regularized=True), rel=1e-10)

    def test_gradient_matches_finite_differences(self):
        from fraclab.grid import Field
        from fraclab.variational import energy, energy_gradient

        grid = make_grid()
        u = random_field(grid, seed=15) + Field(grid, np.ones(grid.shape))
        phi = Field(grid, np.ones(grid.shape)) + random_field(grid, seed=16)
        eps = 1e-5
        numeric = (energy(u + phi * eps, regularized=True) - energy(u - phi * eps, regularized=True)) / (2 * eps)
        analytic = energy_gradient(u, regularized=True).inner(phi)
        assert analytic == pytest.approx(numeric, rel=1e-6)

    def test_bubble_seeded_solve_keeps_its_level(self):
        from fraclab.models import InitMode, SolverConfig
        from fraclab.variational import descent_solve

        grid = make_grid(points=32, box=20.0)
        records = []
        config = SolverConfig(init=InitMode.BUBBLE_SEEDED, max_iterations=300)
        field, report = descent_solve(config, grid, callback=records.append)
        assert report.zero_mode_regularized
        assert report.energy <= report.initial_energy + 1e-12
        assert report.energy >= 1e-3 * report.initial_energy
        assert min(r.energy for r in records) >= 1e-3 * report.initial_energy
        assert field.l2_norm() > 0


class TestEnergyAlongRay:
    """Test the mountain-pass ray identity."""

    def test_closed_form_matches_direct_evaluation(self):
        from fraclab.fractional import quadratic_form
        from fraclab.variational import energy, energy_along_ray, nehari_project

        u = nehari_project(random_field(make_grid(), seed=9))
        form = quadratic_form(u)
        ts = np.linspace(0.0, 2.0, 64)
        values = [energy_along_ray(u, t) for t in ts]
        for t, value in zip(ts, values):
            assert value == pytest.approx(energy(u * t), rel=1e-10, abs=1e-10 * form)
        assert abs(ts[int(np.argmax(values))] - 1.0) <= ts[1] - ts[0]

    def test_endpoints(self):
        from fraclab.fractional import quadratic_form
        from fraclab.variational import energy_along_ray, nehari_project

        u = nehari_project(random_field(make_grid(), seed=10))
        assert energy_along_ray(u, 0.0) == 0.0
        assert energy_along_ray(u, 1.0) == pytest.approx(0.25 * quadratic_form(u), rel=1e-10)

    def test_off_manifold(self):
        from fraclab.exceptions import NotOnManifold
        from fraclab.variational import energy_along_ray, nehari_project

        u = nehari_project(random_field(make_grid(), seed=11)) * 1.5
        with pytest.raises(NotOnManifold) as exc_info:
            energy_along_ray(u, 0.5)
        assert exc_info.value.nehari_value < 0


class TestDescentSolver:
    """Test the solver on small lattices."""

    def test_zero_iterations_returns_projected_guess(self):
        from fraclab.models import InitMode, SolverConfig
        from fraclab.variational import descent_solve, nehari_project

        grid = make_grid()
        initial = random_field(grid, seed=12)
        config = SolverConfig(max_iterations=0, init=InitMode.USER_FIELD)
        field, report = descent_solve(config, grid, initial=initial)
        assert report.iterations == 0
        assert not report.converged
        assert np.allclose(field.values, nehari_project(initial, regularized=True).values, rtol=1e-14, atol=0)

    def test_energy_is_monotone(self):
        from fraclab.models import InitMode, SolverConfig
        from fraclab.variational import descent_solve

        grid = make_grid()
        records = []
        config = SolverConfig(max_iterations=30, init=InitMode.RANDOM_BUMP, seed=3)
        _, report = descent_solve(config, grid, callback=records.append)
        assert records[0].iteration == 0
        assert len(records) == report.iterations + 1
        energies = [r.energy for r in records]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
        assert report.initial_energy == pytest.approx(energies[0])

    def test_deterministic_given_seed(self):
        from fraclab.models import InitMode, SolverConfig
        from fraclab.variational import descent_solve

        grid = make_grid()
        config = SolverConfig(max_iterations=10, init=InitMode.RANDOM_BUMP, seed=4)
        first, _ = descent_solve(config, grid)
        second, _ = descent_solve(config, grid)
        assert np.array_equal(first.values, second.values)

    def test_user_field_required(self):
        from fraclab.exceptions import DomainError
        from fraclab.models import InitMode, SolverConfig
        from fraclab.variational import descent_solve

        with pytest.raises(DomainError):
            descent_solve(SolverConfig(init=InitMode.USER_FIELD), make_grid())

    def test_radial_user_field_degenerates_under_group(self):
        from fraclab.exceptions import DegenerateIterate
        from fraclab.grid import Field
        from fraclab.models import EquivariantGroup, InitMode, SolverConfig
        from fraclab.variational import descent_solve

        grid = make_grid(dimension=4, points=8, box=8.0)
        radial = Field(grid, np.exp(-grid.radius_squared()))
        config = SolverConfig(
            max_iterations=5,
            init=InitMode.USER_FIELD,
            group=EquivariantGroup(j=1, ambient_dimension=4),
        )
        with pytest.raises(DegenerateIterate):
            descent_solve(config, grid, initial=radial)

    def test_centered_bubble_is_redrawn_under_group(self):
        from fraclab.models import EquivariantGroup, InitMode, SolverConfig
        from fraclab.variational import descent_solve

        grid = make_grid(dimension=4, points=8, box=8.0)
        config = SolverConfig(
            max_iterations=0,
            seed=7,
            init=InitMode.BUBBLE_SEEDED,
            group=EquivariantGroup(j=1, ambient_dimension=4),
        )
        field, report = descent_solve(config, grid)
        assert report.seed_used == 8
        assert report.sign_changing
        assert report.equivariance_defect <= 1e-10
        assert field.l2_norm() > 0

    @pytest.mark.parametrize("samples", [4, 8, 16])
    def test_circle_angles_are_measured_not_averaged(self, samples):
        from fraclab.equivariance import circle_defect
        from fraclab.models import EquivariantGroup, InitMode, SolverConfig
        from fraclab.variational import descent_solve

        grid = make_grid(dimension=4, points=8, box=8.0)

        def solve(k):
            group = EquivariantGroup(j=1, ambient_dimension=4, theta_samples=k)
            config = SolverConfig(max_iterations=3, seed=5, init=InitMode.RANDOM_BUMP, group=group)
            return group, *descent_solve(config, grid)

        _, baseline, _ = solve(4)
        group, field, report = solve(samples)
        assert np.array_equal(field.values, baseline.values)
        assert report.circle_defect == pytest.approx(circle_defect(field, group), rel=1e-12, abs=1e-15)
        if samples == 4:
            assert report.circle_defect <= 1e-12

    def test_group_dimension_mismatch(self):
        from fraclab.exceptions import DomainError
        from fraclab.models import EquivariantGroup, SolverConfig
        from fraclab.variational import DescentSolver

        with pytest.raises(DomainError):
            DescentSolver(SolverConfig(group=EquivariantGroup(j=1, ambient_dimension=4)), make_grid())


class TestDomainLevels:
    """Test the cut-off bubble level sequence."""

    def test_levels_are_positive_and_finite(self):
        from fraclab.variational import domain_level_sequence

        grid = make_grid(points=128, box=40.0)
        levels = domain_level_sequence(grid, radius=15.0, scales=[2.0, 1.0, 0.5])
        assert len(levels) == 3
        assert all(np.isfinite(levels)) and all(level > 0 for level in levels)

    def test_radius_guard(self):
        from fraclab.exceptions import DomainError
        from fraclab.variational import domain_level_sequence

        with pytest.raises(DomainError):
            domain_level_sequence(make_grid(), radius=6.0, scales=[1.0])


@pytest.mark.skipif(
    not os.getenv("RUN_DESK_SCALE"),
    reason="Requires RUN_DESK_SCALE=1"
)
class TestDeskScaleSolves:
    """Full solves (minutes). Only runs when RUN_DESK_SCALE=1 is set."""

    def test_ground_state(self):
        from fraclab.fractional import bubble
        from fraclab.models import BubbleParams, InitMode, SolverConfig
        from fraclab.variational import descent_solve, energy, nehari_project

        grid = make_grid(points=128, box=40.0)
        records = []
        config = SolverConfig(init=InitMode.BUBBLE_SEEDED, max_iterations=5000)
        field, report = descent_solve(config, grid, callback=records.append)
        assert report.zero_mode_regularized
        assert not report.sign_changing
        assert field.values.min() > 0
        assert report.energy <= report.initial_energy + 1e-12
        assert report.gradient_residual < records[0].grad_residual
        # the weighted constant mode raises the bubble; the minimizer stays well above zero
        seeded = energy(nehari_project(bubble(grid, BubbleParams()), regularized=True), regularized=True)
        assert report.initial_energy == pytest.approx(seeded, rel=1e-10)
        assert report.energy > 0.1 * seeded

    @pytest.mark.parametrize("points", [16, 24])
    def test_nodal_g1(self, points):
        from fraclab.equivariance import radial_defect, symmetrize
        from fraclab.fractional import dual_norm
        from fraclab.models import EquivariantGroup, InitMode, SolverConfig
        from fraclab.variational import descent_solve, energy_gradient

        grid = make_grid(dimension=4, points=points, box=20.0)
        group = EquivariantGroup(j=1, ambient_dimension=4)
        config = SolverConfig(
            init=InitMode.RANDOM_BUMP, gradient_tolerance=1e-5, max_iterations=5000, group=group
        )
        field, report = descent_solve(config, grid)
        assert report.converged
        assert report.gradient_residual <= 1e-5
        assert report.sign_changing
        assert report.equivariance_defect <= 1e-8
        assert report.circle_defect >= 0.0

        # shell averages of a sigma-equivariant field vanish
        assert radial_defect(field) == pytest.approx(1.0, abs=1e-6)

        gradient = energy_gradient(field)
        full = dual_norm(gradient)
        restricted = dual_norm(symmetrize(gradient, group))
        assert full <= restricted * (1 + 1e-6) + 1e-12

    def test_level_sequence_approaches_bubble_level(self):
        from fraclab.fractional import bubble
        from fraclab.models import BubbleParams
        from fraclab.variational import domain_level_sequence, energy, nehari_project

        grid = make_grid(points=256, box=40.0)
        levels = domain_level_sequence(grid, radius=18.0, scales=[2.0, 1.0, 0.5])
        reference = energy(nehari_project(bubble(grid, BubbleParams(scale=0.5))))
        assert levels[-1] == pytest.approx(reference, rel=0.10)
