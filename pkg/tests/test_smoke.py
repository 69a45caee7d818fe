"""Smoke tests for the lab: imports, models, exceptions and configuration layering.

Everything here runs in well under a second; the numerical suites live in the
module test files.
"""

import sys
from pathlib import Path

import pytest

# Add parent directory for imports
sys.path.insert(0, str(Path(__file__).parent.parent))


class TestImports:
    """Test that all modules can be imported."""

    def test_import_package(self):
        import fraclab

        assert "descent_solve" in fraclab.__all__
        assert "levy_concentration" in fraclab.__all__

    def test_import_models(self):
        from fraclab.models import InitMode, LambdaMode

        assert InitMode.BUBBLE_SEEDED == "bubble_seeded"
        assert LambdaMode.RADIAL_CONSTRAINT == "radial_constraint"

    def test_import_exceptions(self):
        from fraclab.exceptions import FraclabError, NoDecayWarning

        assert FraclabError is not None
        assert issubclass(NoDecayWarning, UserWarning)


class TestModels:
    """Test pydantic models and their domain guards."""

    def test_grid_spec_geometry(self):
        from fraclab.models import GridSpec

        grid = GridSpec(dimension=2, order=0.5, box_length=40.0, points_per_axis=128)
        assert grid.spacing == pytest.approx(40.0 / 128)
        assert grid.shape == (128, 128)
        assert grid.axis[0] == -20.0
        assert grid.critical_exponent == pytest.approx(4.0)
        assert grid.lattice_point((64, 64)) == (0.0, 0.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dimension": 2, "order": 1.5, "box_length": 10.0, "points_per_axis": 16},
            {"dimension": 2, "order": 0.0, "box_length": 10.0, "points_per_axis": 16},
            {"dimension": 1, "order": 0.5, "box_length": 10.0, "points_per_axis": 16},
            {"dimension": 2, "order": 0.5, "box_length": 10.0, "points_per_axis": 15},
        ],
    )
    def test_grid_spec_domain_errors(self, kwargs):
        from fraclab.exceptions import DomainError
        from fraclab.models import GridSpec

        with pytest.raises(DomainError):
            GridSpec(**kwargs)

    def test_critical_exponent(self):
        from fraclab.exceptions import DomainError
        from fraclab.models import critical_exponent

        assert critical_exponent(4, 0.5) == pytest.approx(8.0 / 3.0)
        with pytest.raises(DomainError):
            critical_exponent(1, 0.5)

    def test_bubble_params_reject_zero_amplitude(self):
        from fraclab.exceptions import DomainError
        from fraclab.models import BubbleParams

        with pytest.raises(DomainError):
            BubbleParams(mu=0.0)

    def test_equivariant_group_lambda(self):
        from fraclab.models import EquivariantGroup, LambdaMode

        assert EquivariantGroup(j=1, ambient_dimension=8).lambda_active
        assert not EquivariantGroup(j=2, ambient_dimension=8).lambda_active
        assert not EquivariantGroup(j=1, ambient_dimension=4).lambda_active
        assert not EquivariantGroup(
            j=1, ambient_dimension=8, lambda_mode=LambdaMode.TRIVIAL
        ).lambda_active

    def test_equivariant_group_needs_room(self):
        from fraclab.exceptions import DomainError
        from fraclab.models import EquivariantGroup

        with pytest.raises(DomainError):
            EquivariantGroup(j=2, ambient_dimension=7)
        with pytest.raises(DomainError):
            EquivariantGroup(j=1, ambient_dimension=2)
        with pytest.raises(DomainError):
            EquivariantGroup(j=1, ambient_dimension=4, theta_samples=6)

    def test_run_config_defaults(self):
        from fraclab.models import RunConfig

        config = RunConfig()
        assert config.theta_samples == 8
        assert config.tol == 1e-6
        assert config.max_iter == 5000
        assert config.group() is None
        assert config.solver_config().max_iterations == 5000
        assert config.solver_config().regularize_zero_mode

    def test_run_config_rejects_unknown_key(self):
        from pydantic import ValidationError

        from fraclab.models import RunConfig

        with pytest.raises(ValidationError):
            RunConfig(dimension=3)


class TestExceptions:
    """Test the exception hierarchy."""

    def test_domain_error(self):
        from fraclab.exceptions import DomainError, FraclabError

        error = DomainError("s must lie in (0, 1)")
        assert isinstance(error, FraclabError)
        assert error.exit_code == 2
        assert str(error) == "[2] s must lie in (0, 1)"

    def test_solver_errors(self):
        from fraclab.exceptions import DegenerateIterate, Diverged

        assert Diverged("blow-up").exit_code == 3
        assert DegenerateIterate("collapsed").exit_code == 3

    def test_assumption_violated_carries_point(self):
        from fraclab.exceptions import AssumptionViolated

        error = AssumptionViolated("not fixed", point=(1.0, 0.0, 0.0, 0.0))
        assert error.point == (1.0, 0.0, 0.0, 0.0)
        assert error.exit_code == 1

    def test_explicit_exit_code(self):
        from fraclab.exceptions import FraclabError

        assert FraclabError("custom", exit_code=7).exit_code == 7


class TestConfig:
    """Test configuration layering."""

    def test_yaml_overrides_defaults(self, tmp_path):
        from fraclab.config import load_run_config

        path = tmp_path / "run.yaml"
        path.write_text("dim: 4\ngrid: 16\ngroup_j: 1\n")
        config = load_run_config(path, environ={})
        assert config.dim == 4
        assert config.grid == 16
        assert config.group().j == 1

    def test_precedence(self, tmp_path):
        from fraclab.config import load_run_config

        path = tmp_path / "run.yaml"
        path.write_text("grid: 32\n")
        environ = {"FRACLAB_GRID": "64", "FRACLAB_SEED": "5"}

        assert load_run_config(None, environ=environ).grid == 64
        assert load_run_config(path, environ=environ).grid == 32
        config = load_run_config(path, {"grid": 16, "seed": None}, environ=environ)
        assert config.grid == 16
        assert config.seed == 5

    def test_unknown_key(self, tmp_path):
        from fraclab.config import load_run_config
        from fraclab.exceptions import ConfigError

        path = tmp_path / "run.yaml"
        path.write_text("dim: 2\ngird: 16\n")
        with pytest.raises(ConfigError):
            load_run_config(path, environ={})

    def test_not_a_mapping(self, tmp_path):
        from fraclab.config import load_run_config
        from fraclab.exceptions import ConfigError

        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_run_config(path, environ={})

    def test_missing_file(self, tmp_path):
        from fraclab.config import load_run_config
        from fraclab.exceptions import ConfigError

        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "missing.yaml", environ={})

    def test_shipped_configs_parse(self):
        from fraclab.config import load_run_config

        configs = Path(__file__).parent.parent / "configs"
        for path in sorted(configs.glob("*.yaml")):
            config = load_run_config(path, environ={})
            config.grid_spec()
            config.solver_config()
