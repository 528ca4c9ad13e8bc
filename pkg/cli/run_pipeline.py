"""
CLI entrypoint for MDPDE fits, robust Wald-type tests and their influence diagnostics.

Example:
    python robust_wald.py power-table --model weibull-shape --round 3
    python -m cli.run_pipeline fit --model normal-loc --beta 0 --beta 0.5 --data samples/data/normal.csv
"""

import functools
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import typer
from pydantic import ValidationError
from rich import print_json
from rich.console import Console
from rich.markup import escape

from src.components.data_ingestion import ingest_design, ingest_observations
from src.components.mdpde import ContaminatedTruth, MdpdeFit, fit
from src.components.numerics import invert_spd
from src.components.robustness import csif, gross_error_sensitivity
from src.components.wald_tests import Restriction, composite_wald, simple_wald
from src.models import build_model
from src.models.base import ParametricModel
from src.models.zoo import bivnormal_sigma_beta
from src.pipeline.exception import RobustWaldError
from src.pipeline.influence_pipeline import build_grid, influence_curves, influence_summaries
from src.pipeline.logger import get_logger, set_log_level
from src.pipeline.power_table_pipeline import TABLE_D_GRID, default_null, power_table, round_table
from src.pipeline.size_pipeline import simulate_bivariate
from src.pipeline.utils import save_report

from . import TOOL_VERSION
from .config import get_settings
from .schemas import (
    CsifEntry,
    CsifReportModel,
    FitEntry,
    FitReport,
    InfluenceCurveReport,
    InfluenceSummary,
    PowerTableReport,
    RunConfig,
    TestReport,
    WaldEntry,
)

app = typer.Typer(help="Robust Wald-type tests based on minimum density power divergence estimators.")
console = Console()
logger = get_logger(__name__)


# ------------------------------------------------------------------ helpers
def _floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"expected comma-separated numbers, got {text!r}") from e


def _matrix(text: Optional[str]) -> Optional[List[List[float]]]:
    """Rows separated by ';', entries by ','; e.g. '0;1' is the column (0, 1)^T."""
    if text is None:
        return None
    return [_floats(row) for row in text.split(";")]


def _exit_on_error(command):
    """Map package exceptions onto exit codes: 1 usage, 2 data, 3 numerics."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except RobustWaldError as e:
            console.print(f"[red]❌ {type(e).__name__}: {escape(str(e))}", soft_wrap=True)
            raise typer.Exit(code=e.exit_code)
        except (ValidationError, ValueError, typer.BadParameter) as e:
            console.print(f"[red]❌ usage error: {escape(str(e))}", soft_wrap=True)
            raise typer.Exit(code=1)

    return wrapper


def _model(config: RunConfig) -> ParametricModel:
    design = ingest_design(config.design).values if config.design else None
    return build_model(config.model, sigma=config.sigma_known, design=design)


def _restriction(config: RunConfig, model: ParametricModel) -> Optional[Restriction]:
    if config.null == "correlation":
        return Restriction.correlation()
    if config.null == "linear":
        return Restriction.regression_linear(model.k, np.asarray(config.l_coef, dtype=float), config.l0)
    if config.null == "significance":
        return Restriction.regression_linear(model.k, np.eye(model.k), np.zeros(model.k), name="significance")
    return None


def _theta0(config: RunConfig, model: ParametricModel) -> np.ndarray:
    if config.theta0 is not None:
        return model.check_theta(config.theta0)
    theta0, _ = default_null(model)
    logger.info(f"🔧 Using default theta0={theta0.tolist()} for {model.name}")
    return theta0


def _shift(config: RunConfig, model: ParametricModel, restriction: Optional[Restriction]):
    """(d, delta) for the PIF: d e_1 for a simple null, d 1_r for a composite one."""
    if config.d is None:
        return None, None
    if restriction is None:
        d = np.zeros(model.dim_param)
        d[0] = config.d
        return d, None
    return None, np.full(restriction.r, config.d)


def _emit(config: RunConfig, title: str, report, table: Optional[pd.DataFrame] = None) -> None:
    """Print and optionally save; CSV commands write the table, JSON writes the full report."""
    if config.format == "csv" and table is not None:
        if config.output:
            target = Path(config.output)
            if target.suffix.lower() != ".csv":
                raise ValueError(f"--format csv needs a .csv output path, got {target}")
            save_report(table, target)
            console.print(f"[green]Saved {title} to {target}")
        else:
            typer.echo(table.to_csv(index=False, lineterminator="\n"), nl=False)
        return

    payload = report.model_dump()
    console.rule(f"[bold green]{title}")
    print_json(data=payload)
    if config.output:
        target = Path(config.output)
        if target.suffix.lower() != ".json":
            raise ValueError(f"--format json needs a .json output path, got {target}")
        save_report(payload, target)
        console.print(f"[green]Saved {title} to {target}")


def _check_conditioning(result: MdpdeFit, cond_limit: float) -> None:
    invert_spd(result.sigma, role=f"Sigma_beta (beta={result.beta})", cond_limit=cond_limit)


@app.callback()
def _configure():
    """Apply the configured log level before any command runs."""
    set_log_level(get_settings().log_level)


# ----------------------------------------------------------------- commands
@app.command("fit")
@_exit_on_error
def fit_command(
    model: str = typer.Option(..., help="Model name: normal-loc, normal, weibull-shape, bivnormal, linreg."),
    data: Path = typer.Option(..., help="CSV with a header row; one column per observation coordinate."),
    beta: List[float] = typer.Option([0.0], "--beta", help="Tuning parameter; repeat for several values."),
    sigma_known: Optional[float] = typer.Option(None, help="Known scale of normal-loc."),
    design: Optional[Path] = typer.Option(None, help="Design-matrix CSV for linreg."),
    method: str = typer.Option("quadrature", help="Matrix method: quadrature or closed-form."),
    output: Optional[Path] = typer.Option(None, help="Optional path of the saved report."),
    format: str = typer.Option("json", "--format", help="Output format: json or csv."),
):
    """Fit the MDPDE for every beta and report theta_hat, Sigma_beta and standard errors."""
    settings = get_settings()
    config = RunConfig(
        command="fit",
        model=model,
        betas=beta,
        alpha=settings.alpha,
        method=method,
        data=str(data),
        design=str(design) if design else None,
        sigma_known=sigma_known,
        output=str(output) if output else None,
        format=format,
    )
    parametric = _model(config)
    observations = ingest_observations(data, parametric)

    entries, rows = [], []
    for b in config.betas:
        result = fit(parametric, observations, b, method=config.method, rel_tol=settings.rel_tol)
        _check_conditioning(result, settings.cond_limit)
        entries.append(
            FitEntry(
                beta=b,
                param_names=list(parametric.param_names),
                theta_hat=result.theta_hat.tolist(),
                standard_errors=result.standard_errors.tolist(),
                sigma=result.sigma.tolist(),
                objective_value=result.objective_value,
                n=result.n,
                polished=result.polished,
            )
        )
        row = {"beta": b}
        row.update({name: v for name, v in zip(parametric.param_names, result.theta_hat)})
        row.update({f"se_{name}": v for name, v in zip(parametric.param_names, result.standard_errors)})
        rows.append(row)

    report = FitReport(tool_version=TOOL_VERSION, config=config, fits=entries)
    _emit(config, "MDPDE Fit", report, pd.DataFrame(rows))


@app.command("test")
@_exit_on_error
def test_command(
    model: str = typer.Option(..., help="Model name."),
    data: Optional[Path] = typer.Option(None, help="CSV with a header row."),
    beta: List[float] = typer.Option([0.0], "--beta", help="Tuning parameter; repeat for several values."),
    null: str = typer.Option("simple", help="simple, correlation (bivnormal), linear or significance (linreg)."),
    theta0: Optional[str] = typer.Option(None, help="Comma-separated theta0 of a simple null."),
    l_coef: Optional[str] = typer.Option(None, help="L matrix of a linear null, rows ';'-separated (k x r)."),
    l0: Optional[str] = typer.Option(None, help="Comma-separated right-hand side l0."),
    alpha: Optional[float] = typer.Option(None, help="Nominal level (defaults to ROBUST_WALD_ALPHA)."),
    sigma_known: Optional[float] = typer.Option(None, help="Known scale of normal-loc."),
    design: Optional[Path] = typer.Option(None, help="Design-matrix CSV for linreg."),
    method: str = typer.Option("quadrature", help="Sigma_beta method: quadrature or closed-form."),
    simulate: Optional[int] = typer.Option(None, help="Simulate n bivariate normal rows instead of reading --data."),
    seed: Optional[int] = typer.Option(None, help="Seed of --simulate."),
    epsilon: float = typer.Option(0.0, help="Fraction of simulated rows moved to --point."),
    point: Optional[str] = typer.Option(None, help="Comma-separated contamination point."),
    output: Optional[Path] = typer.Option(None, help="Optional path of the saved report."),
    format: str = typer.Option("json", "--format", help="Output format: json or csv."),
):
    """Wald-type test of a simple or composite null for every beta."""
    settings = get_settings()
    config = RunConfig(
        command="test",
        model=model,
        betas=beta,
        alpha=alpha if alpha is not None else settings.alpha,
        method=method,
        data=str(data) if data else None,
        design=str(design) if design else None,
        sigma_known=sigma_known,
        null=null,
        theta0=_floats(theta0),
        l_coef=_matrix(l_coef),
        l0=_floats(l0),
        simulate=simulate,
        seed=seed,
        epsilon=epsilon,
        point=_floats(point),
        output=str(output) if output else None,
        format=format,
    )
    parametric = _model(config)
    restriction = _restriction(config, parametric)
    if restriction is None and config.theta0 is None:
        raise ValueError("a simple null needs --theta0")

    if config.simulate is not None:
        if config.epsilon > 0 and config.point is None:
            raise ValueError("contaminated simulation needs --point")
        rng = np.random.default_rng(config.seed)
        observations = simulate_bivariate(rng, config.simulate, epsilon=config.epsilon, point=config.point)
        logger.info(f"📥 Simulated {config.simulate} rows (seed={config.seed}, eps={config.epsilon})")
    else:
        observations = ingest_observations(config.data, parametric)

    # the bivariate closed form exists only at rho = 0, so the fit itself always uses quadrature there
    fit_method = "quadrature" if parametric.name == "bivnormal" else config.method
    entries, rows = [], []
    for b in config.betas:
        result = fit(parametric, observations, b, method=fit_method, rel_tol=settings.rel_tol)
        _check_conditioning(result, settings.cond_limit)
        if restriction is None:
            wald = simple_wald(result, config.theta0, alpha=config.alpha, method=config.method)
        elif parametric.name == "bivnormal" and config.method == "closed-form":
            at_null = result.theta_hat.copy()
            at_null[4] = 0.0
            wald = composite_wald(result, restriction, alpha=config.alpha, sigma=bivnormal_sigma_beta(at_null, b))
        else:
            wald = composite_wald(result, restriction, alpha=config.alpha)
        entries.append(WaldEntry(**wald.to_dict(), theta_hat=result.theta_hat.tolist()))
        rows.append(wald.to_dict())

    report = TestReport(tool_version=TOOL_VERSION, config=config, results=entries)
    _emit(config, "Wald-type Test", report, pd.DataFrame(rows))


@app.command("power-table")
@_exit_on_error
def power_table_command(
    model: str = typer.Option(..., help="weibull-shape or bivnormal (published); any homogeneous model (exact)."),
    d: Optional[str] = typer.Option(None, help="Comma-separated contiguous shifts (default 0,2,3,4,5,10)."),
    beta: List[float] = typer.Option(
        [0.0, 0.01, 0.1, 0.3, 0.5, 0.7, 1.0], "--beta", help="Tuning parameter; repeat for several values."
    ),
    flavour: str = typer.Option("published", help="published closed forms or exact sandwich noncentrality."),
    theta0: Optional[str] = typer.Option(None, help="Comma-separated theta0 (exact flavour)."),
    alpha: Optional[float] = typer.Option(None, help="Nominal level."),
    sigma_known: Optional[float] = typer.Option(None, help="Known scale of normal-loc."),
    method: str = typer.Option("quadrature", help="Sigma_beta method of the exact flavour."),
    round: Optional[int] = typer.Option(None, "--round", help="Round output values to this many decimals."),
    output: Optional[Path] = typer.Option(None, help="Optional path of the saved table."),
    format: str = typer.Option("csv", "--format", help="Output format: csv or json."),
):
    """Asymptotic contiguous power, one row per d and one column per beta."""
    settings = get_settings()
    config = RunConfig(
        command="power-table",
        model=model,
        betas=beta,
        alpha=alpha if alpha is not None else settings.alpha,
        method=method,
        sigma_known=sigma_known,
        null="correlation" if model == "bivnormal" else "simple",
        theta0=_floats(theta0),
        d_grid=_floats(d) or list(TABLE_D_GRID),
        flavour=flavour,
        output=str(output) if output else None,
        format=format,
        round=round,
    )
    parametric = _model(config) if config.flavour == "exact" else None
    table = power_table(
        config.model,
        d_grid=config.d_grid,
        betas=config.betas,
        alpha=config.alpha,
        flavour=config.flavour,
        theta0=config.theta0,
        model=parametric,
        method=config.method,
        tol=settings.series_tol,
        max_terms=settings.series_max_terms,
        n_jobs=settings.n_jobs,
    )
    table = round_table(table, config.round)
    report = PowerTableReport(tool_version=TOOL_VERSION, config=config, rows=table.to_dict(orient="records"))
    _emit(config, "Contiguous Power", report, table)


@app.command("influence")
@_exit_on_error
def influence_command(
    model: str = typer.Option(..., help="Model name."),
    beta: List[float] = typer.Option([0.0, 0.3, 0.5, 1.0], "--beta", help="Tuning parameter; repeat."),
    theta0: Optional[str] = typer.Option(None, help="Comma-separated theta0 (defaults per model)."),
    null: str = typer.Option("simple", help="simple, correlation, linear or significance."),
    l_coef: Optional[str] = typer.Option(None, help="L matrix of a linear null, rows ';'-separated (k x r)."),
    l0: Optional[str] = typer.Option(None, help="Comma-separated right-hand side l0."),
    d: Optional[float] = typer.Option(None, help="Contiguous shift for the PIF column."),
    alpha: Optional[float] = typer.Option(None, help="Nominal level of the PIF."),
    sigma_known: Optional[float] = typer.Option(None, help="Known scale of normal-loc."),
    design: Optional[Path] = typer.Option(None, help="Design-matrix CSV for linreg."),
    direction: int = typer.Option(0, help="Contaminated design row of linreg."),
    grid_size: Optional[int] = typer.Option(None, help="Points per grid axis."),
    output: Optional[Path] = typer.Option(None, help="Optional path of the saved curves."),
    format: str = typer.Option("csv", "--format", help="Output format: csv (long format) or json."),
):
    """IF, IF2, PIF and LIF curves on the model grid, with sup and bounded flags."""
    settings = get_settings()
    config = RunConfig(
        command="influence",
        model=model,
        betas=beta,
        alpha=alpha if alpha is not None else settings.alpha,
        design=str(design) if design else None,
        sigma_known=sigma_known,
        null=null,
        theta0=_floats(theta0),
        l_coef=_matrix(l_coef),
        l0=_floats(l0),
        d=d,
        direction=direction,
        grid_size=grid_size,
        output=str(output) if output else None,
        format=format,
    )
    parametric = _model(config)
    restriction = _restriction(config, parametric)
    if restriction is None and parametric.name == "bivnormal" and config.null == "simple" and config.theta0 is None:
        restriction = Restriction.correlation()
    theta0 = _theta0(config, parametric)
    shift_d, shift_delta = _shift(config, parametric, restriction)
    grid = build_grid(parametric, theta0, size=config.grid_size, direction=config.direction)

    curves = influence_curves(
        parametric,
        theta0,
        config.betas,
        restriction=restriction,
        d=shift_d,
        delta=shift_delta,
        alpha=config.alpha,
        grid=grid,
        n_jobs=settings.n_jobs,
    )
    quantities = ["IF2"] + (["PIF"] if config.d is not None else [])
    summaries = []
    for quantity in quantities:
        for item in influence_summaries(
            parametric, theta0, config.betas, quantity, restriction, shift_d, shift_delta, config.alpha, grid
        ):
            summaries.append(
                InfluenceSummary(
                    quantity=item.quantity,
                    beta=item.beta,
                    null=item.null,
                    sup=item.sup,
                    argsup=np.atleast_1d(item.argsup).tolist(),
                    bounded=item.bounded,
                    gross_error_sensitivity=gross_error_sensitivity(item),
                )
            )

    report = InfluenceCurveReport(
        tool_version=TOOL_VERSION, config=config, summaries=summaries, rows=curves.to_dict(orient="records")
    )
    _emit(config, "Influence Curves", report, curves)


@app.command("csif")
@_exit_on_error
def csif_command(
    model: str = typer.Option(..., help="Homogeneous model name."),
    point: str = typer.Option(..., help="Comma-separated contamination point y."),
    beta: List[float] = typer.Option([0.0, 0.3, 0.5], "--beta", help="Tuning parameter; repeat."),
    epsilon: float = typer.Option(0.0, help="Contamination proportion."),
    theta0: Optional[str] = typer.Option(None, help="Comma-separated theta0 (defaults per model)."),
    null: str = typer.Option("simple", help="simple or correlation."),
    sigma_known: Optional[float] = typer.Option(None, help="Known scale of normal-loc."),
    output: Optional[Path] = typer.Option(None, help="Optional path of the saved report."),
):
    """Chi-square inflation factor with its analytic and finite-difference epsilon-slopes."""
    settings = get_settings()
    config = RunConfig(
        command="csif",
        model=model,
        betas=beta,
        alpha=settings.alpha,
        sigma_known=sigma_known,
        null=null,
        theta0=_floats(theta0),
        epsilon=epsilon,
        point=_floats(point),
        output=str(output) if output else None,
    )
    parametric = _model(config)
    restriction = _restriction(config, parametric)
    theta0 = _theta0(config, parametric)
    truth = ContaminatedTruth(theta0, config.epsilon, config.point)

    entries = []
    for b in config.betas:
        result = csif(
            parametric, theta0, b, truth, restriction, with_fd=True, rel_tol=settings.rel_tol, step=settings.fd_step
        )
        entries.append(CsifEntry(beta=b, **result.to_dict()))

    report = CsifReportModel(tool_version=TOOL_VERSION, config=config, results=entries)
    _emit(config, "Chi-square Inflation", report)


if __name__ == "__main__":
    get_settings()  # warm up config/env
    app()
