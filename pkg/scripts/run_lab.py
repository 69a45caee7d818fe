#!/usr/bin/env python3
"""Command-line front end: constants, bubble checks, solves and concentration diagnostics."""

from __future__ import annotations

import logging
import os
import sys
import warnings
from pathlib import Path
from typing import Any, List, Optional

import numpy as np
import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from fraclab import (
    BubbleParams,
    NoDecayWarning,
    bubble,
    bubble_pde_residual,
    concentration_profile,
    concentration_scale,
    critical_exponent,
    descent_solve,
    dirichlet_constant,
    integrate_power,
    load_run_config,
    nehari_scale,
    sobolev_constant,
    sobolev_quotient,
)
from fraclab.concentration import shell_radii
from fraclab.exceptions import ConfigError, FraclabError
from fraclab.fieldio import (
    read_field,
    read_report,
    write_convergence_csv,
    write_field,
    write_profile_csv,
    write_report,
)
from fraclab.models import IterationRecord, RunConfig

app = typer.Typer(help="Spectral variational lab for the fractional critical equation")
console = Console()

# Load environment variables
load_dotenv(Path(__file__).parent.parent / ".env")

PROVENANCE = {
    "energy": ["dim", "s", "box", "grid", "group_j", "init", "seed", "max_iter", "tol", "regularize_zero_mode"],
    "nehari_value": ["dim", "s", "box", "grid", "regularize_zero_mode"],
    "gradient_residual": ["dim", "s", "box", "grid", "tol", "regularize_zero_mode"],
    "min_value": ["dim", "s", "box", "grid"],
    "max_value": ["dim", "s", "box", "grid"],
    "iterations": ["max_iter", "tol", "step_size", "backtracking_factor"],
    "converged": ["tol", "max_iter"],
    "sign_changing": ["group_j"],
    "equivariance_defect": ["group_j", "lambda_mode"],
    "circle_defect": ["group_j", "theta_samples"],
    "zero_mode_regularized": ["regularize_zero_mode"],
    "initial_energy": ["init", "seed"],
    "seed_used": ["seed"],
}

BUBBLE_PROVENANCE = {
    "best_mu": ["dim", "s", "box", "grid", "scale"],
    "pde_residual": ["dim", "s", "box", "grid", "scale"],
    "sobolev_quotient": ["dim", "s", "box", "grid", "scale"],
    "sobolev_constant": ["dim", "s"],
    "quotient_gap": ["dim", "s", "box", "grid", "scale"],
    "nehari_scale": ["dim", "s", "box", "grid", "scale"],
    "no_decay_warnings": ["dim", "s", "box", "scale"],
}

DIAGNOSE_PROVENANCE = {
    "total_mass": ["field_file"],
    "scales": ["field_file", "fractions"],
}


def setup_logging(level: str = "INFO") -> None:
    """Configure logging with rich handler."""
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_time=False)],
    )


def fail(exc: Exception) -> None:
    """Print the error and exit with its status (1 for parse errors)."""
    code = exc.exit_code if isinstance(exc, FraclabError) else 1
    console.print(f"[red]Error:[/red] {exc}")
    raise typer.Exit(code)


def resolve_config(config_path: Optional[Path], overrides: dict[str, Any]) -> RunConfig:
    environ = dict(os.environ)
    if "OUTPUT_DIR" in environ and "FRACLAB_OUT_DIR" not in environ:
        environ["FRACLAB_OUT_DIR"] = str(Path(environ["OUTPUT_DIR"]) / "run")
    return load_run_config(config_path, overrides, environ)


ConfigOption = typer.Option(None, "--config", help="YAML file with RunConfig keys")
DimOption = typer.Option(None, "--dim", help="Dimension N")
OrderOption = typer.Option(None, "--s", help="Fractional order s in (0, 1)")
BoxOption = typer.Option(None, "--box", help="Box length L")
GridOption = typer.Option(None, "--grid", help="Points per axis M (even)")
OutOption = typer.Option(None, "--out", help="Output directory")


@app.command()
def constants(
    dim: int = typer.Option(..., "--dim", help="Dimension N"),
    s: float = typer.Option(..., "--s", help="Fractional order s"),
) -> None:
    """Print C(N,s), S(N,s) and the critical exponent.

    S(N,s) and 2*_s are only defined for N > 2s (so not for N=1, s=1/2).
    """
    try:
        values: dict[str, Optional[float]] = {"C(N,s)": dirichlet_constant(dim, s)}
        critical = dim > 2 * s
        values["S(N,s)"] = sobolev_constant(dim, s) if critical else None
        values["2*_s"] = critical_exponent(dim, s) if critical else None
    except FraclabError as e:
        fail(e)

    table = Table(title=f"Constants for N={dim}, s={s}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for name, value in values.items():
        table.add_row(name, "undefined (N <= 2s)" if value is None else f"{value:.12g}")
    console.print(table)


@app.command("bubble-check")
def bubble_check(
    config_path: Optional[Path] = ConfigOption,
    dim: Optional[int] = DimOption,
    s: Optional[float] = OrderOption,
    box: Optional[float] = BoxOption,
    grid: Optional[int] = GridOption,
    scale: float = typer.Option(1.0, "--scale", help="Bubble scale lambda"),
    out: Optional[Path] = OutOption,
) -> None:
    """Sample a bubble and compare it with the sharp constant and the PDE."""
    setup_logging(os.getenv("LOG_LEVEL", "INFO"))
    overrides = {"dim": dim, "s": s, "box": box, "grid": grid, "out_dir": out}
    try:
        config = resolve_config(config_path, overrides)
        spec = config.grid_spec()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoDecayWarning)
            best_mu, residual = bubble_pde_residual(spec, BubbleParams(scale=scale))
        profile = bubble(spec, BubbleParams(mu=best_mu, scale=scale))
        quotient = sobolev_quotient(profile)
        sharp = sobolev_constant(spec.dimension, spec.order)
        scale_factor = nehari_scale(profile)
    except (FraclabError, ValidationError) as e:
        fail(e)

    no_decay = [str(w.message) for w in caught if issubclass(w.category, NoDecayWarning)]
    out_dir = Path(config.out_dir)
    field_path = write_field(out_dir / "bubble.fblf", profile)
    write_report(
        out_dir / "report.json",
        {
            "command": "bubble-check",
            "config": config.model_dump(mode="json"),
            "scale": scale,
            "best_mu": best_mu,
            "pde_residual": residual,
            "sobolev_quotient": quotient,
            "sobolev_constant": sharp,
            "quotient_gap": (sharp - quotient) / sharp,
            "nehari_scale": scale_factor,
            "no_decay_warnings": no_decay,
            "provenance": BUBBLE_PROVENANCE,
        },
    )

    table = Table(title="Bubble check")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("best mu", f"{best_mu:.12g}")
    table.add_row("relative PDE residual", f"{residual:.3e}")
    table.add_row("Sobolev quotient", f"{quotient:.12g}")
    table.add_row("S(N,s)", f"{sharp:.12g}")
    table.add_row("Nehari scale", f"{scale_factor:.12g}")
    console.print(table)
    for message in no_decay:
        console.print(f"[yellow]Warning:[/yellow] {message}")
    console.print(f"\nField saved to: {field_path}")


@app.command()
def solve(
    config_path: Optional[Path] = ConfigOption,
    dim: Optional[int] = DimOption,
    s: Optional[float] = OrderOption,
    box: Optional[float] = BoxOption,
    grid: Optional[int] = GridOption,
    group_j: Optional[int] = typer.Option(None, "--group-j", help="Group index j (0 = none)"),
    theta_samples: Optional[int] = typer.Option(None, "--theta-samples", help="Angles K per block"),
    lambda_mode: Optional[str] = typer.Option(None, "--lambda-mode", help="full_average, radial_constraint or trivial"),
    init: Optional[str] = typer.Option(None, "--init", help="random_bump, bubble_seeded or user_field"),
    initial_field: Optional[Path] = typer.Option(None, "--initial-field", help="Field file for init=user_field"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Initial-guess seed"),
    max_iter: Optional[int] = typer.Option(None, "--max-iter", help="Iteration cap"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Relative gradient tolerance"),
    step_size: Optional[float] = typer.Option(None, "--step-size", help="Initial step"),
    backtracking_factor: Optional[float] = typer.Option(None, "--backtracking-factor", help="Step reduction factor"),
    regularize_zero_mode: Optional[bool] = typer.Option(
        None, "--regularize-zero-mode/--no-regularize-zero-mode", help="Weight the constant mode by (2 pi / L)^{2s}"
    ),
    out: Optional[Path] = OutOption,
) -> None:
    """Run the Nehari-constrained descent and write field, log and report."""
    setup_logging(os.getenv("LOG_LEVEL", "INFO"))
    logger = logging.getLogger(__name__)
    overrides = {
        "dim": dim,
        "s": s,
        "box": box,
        "grid": grid,
        "group_j": group_j,
        "theta_samples": theta_samples,
        "lambda_mode": lambda_mode,
        "init": init,
        "seed": seed,
        "max_iter": max_iter,
        "tol": tol,
        "step_size": step_size,
        "backtracking_factor": backtracking_factor,
        "regularize_zero_mode": regularize_zero_mode,
        "out_dir": out,
    }
    records: list[IterationRecord] = []
    try:
        config = resolve_config(config_path, overrides)
        spec = config.grid_spec()
        solver_config = config.solver_config()
        initial = read_field(initial_field) if initial_field else None
        if initial is not None and initial.grid != spec:
            raise ConfigError(
                f"initial field grid (N={initial.grid.dimension}, s={initial.grid.order}, "
                f"L={initial.grid.box_length}, M={initial.grid.points_per_axis}) does not match the run grid"
            )

        console.print(f"\n[bold]Descent solve[/bold]")
        console.print(f"Grid: N={spec.dimension}, s={spec.order}, L={spec.box_length}, M={spec.points_per_axis}")
        console.print(f"Group: {'G_' + str(config.group_j) if config.group_j else 'none'}")
        console.print(f"Init: {config.init.value}, seed={config.seed}")

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            console=console,
        ) as progress:
            task = progress.add_task("Descending...", total=max(config.max_iter, 1))

            def on_iteration(record: IterationRecord) -> None:
                records.append(record)
                progress.update(
                    task,
                    completed=record.iteration,
                    description=f"E={record.energy:.8g} res={record.grad_residual:.2e}",
                )

            field, report = descent_solve(solver_config, spec, initial=initial, callback=on_iteration)
    except (FraclabError, ValidationError) as e:
        fail(e)

    out_dir = Path(config.out_dir)
    field_path = write_field(out_dir / "field.fblf", field)
    log_path = write_convergence_csv(out_dir / "convergence.csv", records)
    report_path = write_report(
        out_dir / "report.json",
        {
            "command": "solve",
            "config": config.model_dump(mode="json"),
            "report": report.model_dump(mode="json"),
            "provenance": PROVENANCE,
        },
    )

    table = Table(title="Solver report")
    table.add_column("field")
    table.add_column("value", justify="right")
    for name, value in report.model_dump().items():
        table.add_row(name, f"{value:.12g}" if isinstance(value, float) else str(value))
    console.print(table)
    if not report.converged:
        logger.warning(f"Solve did not reach tol={config.tol}")

    console.print(f"\nField: {field_path}")
    console.print(f"Convergence log: {log_path}")
    console.print(f"Report: {report_path}")


@app.command()
def diagnose(
    field_file: Path = typer.Argument(..., help="Field file to analyse"),
    fractions: List[float] = typer.Option([0.5], "--fraction", "-f", help="delta as a fraction of the total mass"),
    samples: int = typer.Option(32, "--samples", help="Number of radii in the profile"),
    out: Optional[Path] = OutOption,
) -> None:
    """Levy concentration profile and concentration scales of a saved field."""
    setup_logging(os.getenv("LOG_LEVEL", "INFO"))
    try:
        u = read_field(field_file)
        radii = shell_radii(u.grid)[1:]
        picks = np.unique(np.linspace(0, len(radii) - 1, min(samples, len(radii))).astype(int))
        profile = concentration_profile(u, [float(r) for r in radii[picks]])
        total = integrate_power(u, u.grid.critical_exponent)
        scales = [concentration_scale(u, f * total) for f in fractions]
    except FraclabError as e:
        fail(e)

    out_dir = Path(out or field_file.parent)
    profile_path = write_profile_csv(
        out_dir / "concentration.csv", profile.radii, profile.values, profile.centers
    )
    scales_path = write_report(
        out_dir / "concentration_scales.json",
        {
            "command": "diagnose",
            "config": {"field_file": str(field_file), "fractions": list(fractions)},
            "total_mass": total,
            "scales": [result.model_dump(mode="json") for result in scales],
            "provenance": DIAGNOSE_PROVENANCE,
        },
    )

    table = Table(title=f"Concentration scales (total mass {total:.8g})")
    table.add_column("delta", justify="right")
    table.add_column("r", justify="right")
    table.add_column("Q_u(r)", justify="right")
    table.add_column("center")
    table.add_column("dist(center, supp u) <= r")
    for result in scales:
        table.add_row(
            f"{result.delta:.8g}",
            f"{result.radius:.8g}",
            f"{result.mass:.8g}",
            ", ".join(f"{c:.4g}" for c in result.center),
            str(result.within_radius),
        )
    console.print(table)
    console.print(f"\nProfile saved to: {profile_path}")
    console.print(f"Scales saved to: {scales_path}")


@app.command()
def report(
    out_dir: Path = typer.Argument(None, help="Run directory holding report.json"),
) -> None:
    """Show a saved report."""
    if out_dir is None:
        out_dir = Path(os.getenv("OUTPUT_DIR", "outputs")) / "run"
    try:
        payload = read_report(out_dir / "report.json")
    except FraclabError as e:
        fail(e)

    console.print(f"\n[bold]Report[/bold] ({payload.get('command', 'unknown')})")
    console.print(f"Directory: {out_dir}")
    config = payload.get("config", {})
    console.print("Config: " + ", ".join(f"{k}={v}" for k, v in config.items()))
    values = payload.get("report", {k: v for k, v in payload.items() if k not in ("config", "command")})
    table = Table()
    table.add_column("field")
    table.add_column("value", justify="right")
    for name, value in values.items():
        table.add_row(name, str(value))
    console.print(table)


if __name__ == "__main__":
    app()
