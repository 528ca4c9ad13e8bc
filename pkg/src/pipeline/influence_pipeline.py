"""
Influence curves on per-model evaluation grids, in long format for external plotting.

Each grid carries a tail mask (its outer edge) that feeds the bounded heuristic
of the influence reports.
"""

from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.components.mdpde import estimator_influence, matrices_at_model
from src.components.robustness import InfluenceReport, if2_composite, if2_simple, influence_report, pif
from src.components.wald_tests import DEFAULT_ALPHA, Restriction
from src.models.base import ParametricModel
from src.pipeline.exception import ModelError
from src.pipeline.logger import get_logger
from src.pipeline.utils import parallel_map

logger = get_logger(__name__)

NORMAL_HALF_WIDTH = 10.0
WEIBULL_RANGE = (0.01, 15.0)
BIVARIATE_HALF_WIDTH = 6.0
BIVARIATE_SIZE = 61
TAIL_FRACTION = 0.95


@dataclass
class InfluenceGrid:
    points: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)
    columns: Tuple[str, ...]

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def build_grid(model: ParametricModel, theta0, size: Optional[int] = None, direction: int = 0) -> InfluenceGrid:
    """Default contamination grid of each model with the outer edge flagged as tail."""
    theta0 = model.check_theta(theta0)

    if model.name in ("normal-loc", "normal"):
        mu = theta0[0]
        sigma = theta0[1] if model.name == "normal" else model.sigma
        x = np.linspace(mu - NORMAL_HALF_WIDTH * sigma, mu + NORMAL_HALF_WIDTH * sigma, size or 401)
        tail = np.abs(x - mu) >= TAIL_FRACTION * NORMAL_HALF_WIDTH * sigma
        return InfluenceGrid(x[:, None], tail, ("x",))

    if model.name == "weibull-shape":
        lo, hi = WEIBULL_RANGE
        x = np.linspace(lo, hi, size or 400)
        # the left edge is excluded: log x keeps the score unbounded there for every beta
        return InfluenceGrid(x[:, None], x >= TAIL_FRACTION * hi, ("x",))

    if model.name == "bivnormal":
        mu1, mu2, s1, s2, _ = theta0
        n = size or BIVARIATE_SIZE
        z = np.linspace(-BIVARIATE_HALF_WIDTH, BIVARIATE_HALF_WIDTH, n)
        z1, z2 = np.meshgrid(z, z, indexing="ij")
        points = np.column_stack([mu1 + s1 * z1.ravel(), mu2 + s2 * z2.ravel()])
        border = (np.abs(z1) == BIVARIATE_HALF_WIDTH) | (np.abs(z2) == BIVARIATE_HALF_WIDTH)
        return InfluenceGrid(points, border.ravel(), ("x1", "x2"))

    if model.name == "linreg":
        if not 0 <= direction < model.n:
            raise ValueError(f"direction {direction} outside 0..{model.n - 1}")
        row = model.design[direction]
        center, sigma = float(row @ theta0[:-1]), float(np.sqrt(theta0[-1]))
        t = np.linspace(center - NORMAL_HALF_WIDTH * sigma, center + NORMAL_HALF_WIDTH * sigma, size or 401)
        points = np.column_stack([t, np.tile(row, (t.size, 1))])
        tail = np.abs(t - center) >= TAIL_FRACTION * NORMAL_HALF_WIDTH * sigma
        names = ("t",) + tuple(f"x{j + 1}" for j in range(model.k))
        return InfluenceGrid(points, tail, names)

    raise ModelError(f"no default grid for {model.name}", stage="influence_grid")


def _curve(beta, model, theta0, grid, restriction, d, delta, alpha) -> pd.DataFrame:
    mats = matrices_at_model(model, theta0, beta)
    frame = pd.DataFrame(grid.points, columns=list(grid.columns))
    frame.insert(0, "beta", beta)

    influence = estimator_influence(model, theta0, beta, grid.points, mats)
    for j, name in enumerate(model.param_names):
        frame[f"IF_{name}"] = influence[:, j]

    if restriction is None:
        frame["IF2"] = if2_simple(model, theta0, beta, grid.points, mats=mats)
    else:
        frame["IF2"] = if2_composite(model, theta0, beta, restriction, grid.points, mats=mats)

    if d is not None or delta is not None:
        frame["PIF"] = pif(
            model, theta0, beta, grid.points, d=d, delta=delta, restriction=restriction, alpha=alpha, mats=mats
        )
    frame["LIF"] = 0.0
    return frame


def influence_curves(
    model: ParametricModel,
    theta0,
    betas: Sequence[float],
    restriction: Optional[Restriction] = None,
    d=None,
    delta=None,
    alpha: float = DEFAULT_ALPHA,
    grid: Optional[InfluenceGrid] = None,
    n_jobs: int = 1,
) -> pd.DataFrame:
    """Long-format curves: beta, grid coordinates, IF components, IF2, PIF (when a shift is given), LIF."""
    theta0 = model.check_theta(theta0)
    grid = grid or build_grid(model, theta0)
    logger.info(f"🚀 Influence curves for {model.name}: {grid.size} points x {len(betas)} betas")
    worker = partial(
        _curve, model=model, theta0=theta0, grid=grid, restriction=restriction, d=d, delta=delta, alpha=alpha
    )
    frames = parallel_map(worker, list(betas), n_jobs=n_jobs)
    curves = pd.concat(frames, ignore_index=True)
    logger.info(f"✅ {len(curves)} influence rows")
    return curves


def influence_summaries(
    model: ParametricModel,
    theta0,
    betas: Sequence[float],
    quantity: str = "IF2",
    restriction: Optional[Restriction] = None,
    d=None,
    delta=None,
    alpha: float = DEFAULT_ALPHA,
    grid: Optional[InfluenceGrid] = None,
) -> List[InfluenceReport]:
    """sup / argsup / bounded flag per beta on the model grid."""
    theta0 = model.check_theta(theta0)
    grid = grid or build_grid(model, theta0)
    return [
        influence_report(
            model, theta0, beta, grid.points, grid.tail, quantity, restriction=restriction, d=d, delta=delta, alpha=alpha
        )
        for beta in betas
    ]
