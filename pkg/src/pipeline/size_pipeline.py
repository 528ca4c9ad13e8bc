"""Monte-Carlo size of the correlation test under clean and point-contaminated data."""

from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.components.mdpde import fit
from src.components.numerics import chisq_quantile
from src.components.wald_tests import DEFAULT_ALPHA, correlation_wald_statistic
from src.models.bivariate_normal import BivariateNormalModel
from src.pipeline.logger import get_logger
from src.pipeline.utils import parallel_map

logger = get_logger(__name__)


@dataclass
class SizeStudy:
    betas: List[float]
    n: int
    replicates: int
    alpha: float
    epsilon: float
    point: Optional[List[float]]
    seed: int
    rejection_rate: Dict[str, float] = field(default_factory=dict)
    mean_statistic: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "betas": self.betas,
            "n": self.n,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "point": self.point,
            "seed": self.seed,
            "rejection_rate": self.rejection_rate,
            "mean_statistic": self.mean_statistic,
        }


def simulate_bivariate(
    rng: np.random.Generator, n: int, rho: float = 0.0, epsilon: float = 0.0, point=None
) -> np.ndarray:
    """Standard bivariate normal sample with correlation rho; the first round(eps n) rows moved to `point`."""
    cov = np.array([[1.0, rho], [rho, 1.0]])
    data = rng.multivariate_normal(np.zeros(2), cov, size=n)
    n_bad = int(round(epsilon * n))
    if n_bad:
        data[:n_bad] = np.asarray(point, dtype=float)
    return data


def _replicate(seed: np.random.SeedSequence, betas, n, epsilon, point) -> List[float]:
    rng = np.random.default_rng(seed)
    data = simulate_bivariate(rng, n, epsilon=epsilon, point=point)
    model = BivariateNormalModel()
    statistics = []
    for beta in betas:
        rho_hat = float(fit(model, data, beta).theta_hat[4])
        statistics.append(correlation_wald_statistic(rho_hat, n, beta))
    return statistics


def simulate_size(
    betas: Sequence[float],
    n: int = 500,
    replicates: int = 200,
    alpha: float = DEFAULT_ALPHA,
    epsilon: float = 0.0,
    point: Optional[Sequence[float]] = None,
    seed: int = 42,
    n_jobs: int = 1,
) -> SizeStudy:
    """Empirical rejection rate of n rho_hat^2 / zeta^{5/2} > chi2_{1,alpha} under rho = 0."""
    if epsilon > 0 and point is None:
        raise ValueError("a contaminated study needs a contamination point")
    betas = [float(b) for b in betas]
    logger.info(f"🚀 Size study: {replicates} replicates of n={n}, eps={epsilon}, betas={betas}, seed={seed}")

    children = np.random.SeedSequence(seed).spawn(replicates)
    worker = partial(_replicate, betas=betas, n=n, epsilon=epsilon, point=point)
    statistics = np.asarray(parallel_map(worker, children, n_jobs=n_jobs))

    critical = chisq_quantile(alpha, 1)
    study = SizeStudy(
        betas=betas,
        n=n,
        replicates=replicates,
        alpha=alpha,
        epsilon=epsilon,
        point=None if point is None else [float(p) for p in point],
        seed=seed,
    )
    for j, beta in enumerate(betas):
        key = f"{beta:g}"
        study.rejection_rate[key] = float(np.mean(statistics[:, j] > critical))
        study.mean_statistic[key] = float(np.mean(statistics[:, j]))
    logger.info(f"✅ Rejection rates {study.rejection_rate}")
    return study
