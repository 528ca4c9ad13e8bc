"""
Density power divergence and the empirical MDPDE objective.

    d_beta(g, f) = int f^{1+beta} - (1 + 1/beta) f^beta g + (1/beta) g^{1+beta}
    d_0(g, f)    = int g log(g / f)

The empirical objective drops the theta-free g^{1+beta} term and replaces
integrals against g by sample means.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.components.numerics import DEFAULT_REL_TOL, IntegrationDomain, integrate
from src.models.base import ParametricModel
from src.pipeline.exception import NumericalError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

__all__ = ["DpdObjectiveSpec", "dpd_divergence", "mdpde_objective", "estimating_equation"]

NEGATIVE_SLACK = 1e-8


@dataclass
class DpdObjectiveSpec:
    model: ParametricModel
    beta: float
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        self.data = self.model.as_observations(self.data)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])


def dpd_divergence(
    g: Callable[[float], float],
    f: Callable[[float], float],
    beta: float,
    domain: IntegrationDomain,
    rel_tol: float = DEFAULT_REL_TOL,
) -> float:
    """d_beta(g, f) for two univariate densities on `domain`."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")

    if beta == 0:

        def integrand(x: float) -> float:
            gx = g(x)
            if gx <= 0:
                return 0.0
            return gx * (np.log(gx) - np.log(f(x)))

    else:

        def integrand(x: float) -> float:
            fx, gx = f(x), g(x)
            return fx ** (1 + beta) - (1 + 1 / beta) * fx**beta * gx + gx ** (1 + beta) / beta

    value = integrate(integrand, domain, rel_tol=rel_tol)
    if value < -NEGATIVE_SLACK:
        raise NumericalError(
            f"negative divergence {value:.3e} at beta={beta}", stage="dpd_divergence", best_estimate=value
        )
    return max(value, 0.0)


def mdpde_objective(spec: DpdObjectiveSpec, theta) -> float:
    """Empirical objective H_n(theta); beta = 0 is the negative mean log-likelihood."""
    model = spec.model
    theta = model.check_theta(theta)
    log_f = model.log_density(theta, spec.data)

    if spec.beta == 0:
        zero = ~np.isfinite(log_f)
        if zero.any():
            raise NumericalError(
                f"density is zero at observation {int(np.argmax(zero))} (log of zero)",
                stage="mdpde_objective",
                best_estimate=theta,
            )
        return float(-np.mean(log_f))

    beta = spec.beta
    first = model.integral_power(theta, 1 + beta)
    return float(first - (1 + 1 / beta) * np.mean(np.exp(beta * log_f)))


def estimating_equation(spec: DpdObjectiveSpec, theta) -> np.ndarray:
    """(1/n) sum u f^beta(X_i) - xi_beta(theta); zero at the MDPDE.

    Equals -grad H_n / (1 + beta) for beta > 0 and the mean score at beta = 0.
    """
    model = spec.model
    theta = np.asarray(theta, dtype=float)
    weights = np.exp(spec.beta * model.log_density(theta, spec.data))
    empirical = np.mean(model.score(theta, spec.data) * weights[:, None], axis=0)
    if spec.beta == 0:
        return empirical
    xi = model.expect(theta, lambda x: model.score(theta, x), 1 + spec.beta)
    return empirical - np.asarray(xi, dtype=float)
