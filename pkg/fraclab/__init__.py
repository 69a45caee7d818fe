"""Spectral variational lab for the fractional critical Schrodinger equation."""

from .concentration import (
    concentration_profile,
    concentration_scale,
    covering_bound_check,
    levy_concentration,
    rescale,
)
from .config import load_run_config
from .equivariance import (
    GroupElement,
    apply,
    assumption_check,
    circle_defect,
    distinctness_check,
    is_equivariant,
    lattice_core,
    radial_defect,
    radial_symmetrize,
    rho_real_action,
    sampled_elements,
    sigma,
    symmetrize,
    theta_real_action,
)
from .exceptions import (
    AssumptionViolated,
    ConfigError,
    DegenerateIterate,
    DeltaOutOfRange,
    Diverged,
    DomainError,
    FieldFormatError,
    FraclabError,
    InvalidField,
    NoDecayWarning,
    NonHermitianInput,
    NotOnManifold,
    RadiusTooLarge,
    ZeroField,
)
from .fractional import (
    bubble,
    bubble_pde_residual,
    dirichlet_constant,
    dual_norm,
    fractional_laplacian,
    gagliardo_seminorm,
    ground_state_level,
    quadratic_form,
    sobolev_constant,
    sobolev_quotient,
    zero_mode_weight,
)
from .grid import Field, SpectralField, forward_transform, integrate_power, inverse_transform
from .models import (
    BubbleParams,
    EquivariantGroup,
    GridSpec,
    InitMode,
    IterationRecord,
    LambdaMode,
    RunConfig,
    SolverConfig,
    SolverReport,
    critical_exponent,
)
from .variational import (
    descent_solve,
    domain_level_sequence,
    energy,
    energy_along_ray,
    energy_gradient,
    nehari_project,
    nehari_scale,
    nehari_value,
    pairing_identities,
)

__all__ = [
    "Field",
    "SpectralField",
    "GridSpec",
    "BubbleParams",
    "EquivariantGroup",
    "SolverConfig",
    "SolverReport",
    "IterationRecord",
    "RunConfig",
    "InitMode",
    "LambdaMode",
    "GroupElement",
    "critical_exponent",
    "forward_transform",
    "inverse_transform",
    "integrate_power",
    "dirichlet_constant",
    "sobolev_constant",
    "ground_state_level",
    "fractional_laplacian",
    "quadratic_form",
    "dual_norm",
    "gagliardo_seminorm",
    "sobolev_quotient",
    "zero_mode_weight",
    "bubble",
    "bubble_pde_residual",
    "energy",
    "nehari_value",
    "nehari_scale",
    "nehari_project",
    "energy_gradient",
    "energy_along_ray",
    "pairing_identities",
    "domain_level_sequence",
    "descent_solve",
    "rho_real_action",
    "theta_real_action",
    "sigma",
    "apply",
    "symmetrize",
    "is_equivariant",
    "circle_defect",
    "assumption_check",
    "distinctness_check",
    "lattice_core",
    "sampled_elements",
    "radial_symmetrize",
    "radial_defect",
    "levy_concentration",
    "concentration_profile",
    "rescale",
    "covering_bound_check",
    "concentration_scale",
    "load_run_config",
    "FraclabError",
    "DomainError",
    "ConfigError",
    "FieldFormatError",
    "InvalidField",
    "NonHermitianInput",
    "ZeroField",
    "NotOnManifold",
    "Diverged",
    "DegenerateIterate",
    "AssumptionViolated",
    "RadiusTooLarge",
    "DeltaOutOfRange",
    "NoDecayWarning",
]
