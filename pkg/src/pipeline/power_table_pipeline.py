"""
Contiguous-power tables: one row per shift d, one column per beta.

Two flavours:
- "published": the closed-form noncentralities of the worked examples
  (Weibull shape at theta0 = 1, bivariate-normal correlation test).
- "exact": noncentrality from the sandwich Sigma_beta(theta0) of any model.
"""

from functools import partial
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.components.numerics import (
    SERIES_MAX_TERMS,
    SERIES_TOL,
    NoncentralChisq,
    chisq_quantile,
    noncentral_chisq_sf,
)
from src.components.wald_tests import DEFAULT_ALPHA, ContiguousSpec, Restriction, contiguous_power
from src.models import build_model
from src.models.base import ParametricModel
from src.models.weibull import eta_closed_form
from src.models.zoo import zeta_kappa
from src.pipeline.exception import ModelError
from src.pipeline.logger import get_logger
from src.pipeline.utils import parallel_map

logger = get_logger(__name__)

TABLE_D_GRID = (0.0, 2.0, 3.0, 4.0, 5.0, 10.0)
TABLE_BETAS = (0.0, 0.01, 0.1, 0.3, 0.5, 0.7, 1.0)
PUBLISHED_MODELS = ("weibull-shape", "bivnormal")
FLAVOURS = ("published", "exact")


def beta_label(beta: float) -> str:
    return f"beta={beta:g}"


def _noncentral_power(delta: float, df: int, alpha: float, tol: float, max_terms: int) -> float:
    return noncentral_chisq_sf(chisq_quantile(alpha, df), NoncentralChisq(df, delta), tol=tol, max_terms=max_terms)


def published_noncentrality(model_name: str, d: float, beta: float) -> float:
    """d^2 eta_b^2 / eta_2b (Weibull shape) or d^2 / zeta_b^{5/2} (correlation test)."""
    if model_name == "weibull-shape":
        return d**2 * eta_closed_form(beta) ** 2 / eta_closed_form(2 * beta)
    if model_name == "bivnormal":
        zeta, _, _ = zeta_kappa(beta)
        return d**2 / zeta**2.5
    raise ModelError(f"no published power table for {model_name}", stage="power_table", supported=PUBLISHED_MODELS)


def default_null(model: ParametricModel) -> Tuple[np.ndarray, Optional[Restriction]]:
    """theta0 and restriction of the worked example for each model."""
    if model.name == "weibull-shape":
        return np.array([1.0]), None
    if model.name == "bivnormal":
        return np.array([0.0, 0.0, 1.0, 1.0, 0.0]), Restriction.correlation()
    if model.name == "normal-loc":
        return np.array([0.0]), None
    if model.name == "normal":
        return np.array([0.0, 1.0]), None
    raise ModelError(
        f"{model.name} needs an explicit theta0 for a power table",
        stage="power_table",
        supported=("weibull-shape", "bivnormal", "normal-loc", "normal"),
    )


def _spec_for(d: float, model: ParametricModel, restriction: Optional[Restriction], direction) -> ContiguousSpec:
    if restriction is None:
        unit = np.zeros(model.dim_param) if direction is None else np.asarray(direction, dtype=float)
        if direction is None:
            unit[0] = 1.0
        return ContiguousSpec(d=d * unit)
    unit = np.ones(restriction.r) if direction is None else np.asarray(direction, dtype=float)
    return ContiguousSpec(delta=d * unit)


def _exact_column(beta, model, theta0, restriction, d_grid, alpha, direction, method):
    return [
        contiguous_power(model, theta0, beta, _spec_for(d, model, restriction, direction), restriction, alpha, method=method)
        for d in d_grid
    ]


def _published_column(beta, model_name, d_grid, alpha, tol, max_terms):
    return [
        _noncentral_power(published_noncentrality(model_name, d, beta), 1, alpha, tol, max_terms) for d in d_grid
    ]


def power_table(
    model_name: str,
    d_grid: Sequence[float] = TABLE_D_GRID,
    betas: Sequence[float] = TABLE_BETAS,
    alpha: float = DEFAULT_ALPHA,
    flavour: str = "published",
    theta0=None,
    restriction: Optional[Restriction] = None,
    direction=None,
    model: Optional[ParametricModel] = None,
    method: str = "quadrature",
    tol: float = SERIES_TOL,
    max_terms: int = SERIES_MAX_TERMS,
    n_jobs: int = 1,
) -> pd.DataFrame:
    """Asymptotic contiguous power for every (d, beta); columns are computed in parallel, assembled in order."""
    if flavour not in FLAVOURS:
        raise ModelError(f"unknown flavour {flavour!r}", stage="power_table", supported=FLAVOURS)
    if any(b < 0 for b in betas):
        raise ValueError("beta values must be nonnegative")
    d_grid = [float(d) for d in d_grid]
    logger.info(f"🚀 Power table for {model_name} ({flavour}): {len(d_grid)} shifts x {len(betas)} betas")

    if flavour == "published":
        worker = partial(
            _published_column, model_name=model_name, d_grid=d_grid, alpha=alpha, tol=tol, max_terms=max_terms
        )
    else:
        model = model or build_model(model_name)
        if theta0 is None:
            theta0, default_restriction = default_null(model)
            restriction = restriction or default_restriction
        worker = partial(
            _exact_column,
            model=model,
            theta0=np.asarray(theta0, dtype=float),
            restriction=restriction,
            d_grid=d_grid,
            alpha=alpha,
            direction=direction,
            method=method,
        )

    columns = parallel_map(worker, list(betas), n_jobs=n_jobs)
    table = pd.DataFrame({"d": d_grid})
    for beta, column in zip(betas, columns):
        table[beta_label(beta)] = column
    logger.info(f"✅ Power table ready ({table.shape[0]} x {table.shape[1] - 1})")
    return table


def round_table(table: pd.DataFrame, digits: Optional[int]) -> pd.DataFrame:
    """Output-side rounding; the computation itself is never rounded."""
    if digits is None:
        return table
    rounded = table.copy()
    value_columns = [c for c in rounded.columns if c != "d"]
    rounded[value_columns] = rounded[value_columns].round(digits)
    return rounded
