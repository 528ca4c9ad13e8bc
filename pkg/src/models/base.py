"""
Parametric-family abstraction used by every estimator, test and diagnostic.

Observations are always handled as 2-D float arrays of shape (m, dim_obs).
Densities return (m,), scores (m, p) and information matrices (m, p, p).
"""

from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.components.numerics import DEFAULT_REL_TOL, IntegrationDomain, integrate
from src.pipeline.exception import DataValidationError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

Bounds = List[Tuple[Optional[float], Optional[float]]]


class ParametricModel(ABC):
    """One statistical family {f_theta}."""

    name: str = "model"
    param_names: Tuple[str, ...] = ()
    dim_obs: int = 1
    # i.i.d. families; the fixed-design regression overrides this
    homogeneous: bool = True

    @property
    def dim_param(self) -> int:
        return len(self.param_names)

    @property
    def contamination_weight(self) -> float:
        """Weight of a single contaminated distribution in the estimating equation."""
        return 1.0

    # ------------------------------------------------------------------ family
    @abstractmethod
    def param_bounds(self) -> Bounds:
        ...

    @abstractmethod
    def support(self) -> Tuple[IntegrationDomain, ...]:
        """Integration domain of each observation coordinate."""

    @abstractmethod
    def log_density(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def score(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def info(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def expect(
        self,
        theta: np.ndarray,
        integrand: Callable[[np.ndarray], np.ndarray],
        power: float,
        rel_tol: float = DEFAULT_REL_TOL,
    ) -> np.ndarray:
        """Integral of integrand(x) * f_theta(x)**power over the support (power > 0)."""

    @abstractmethod
    def default_init(self, data: np.ndarray) -> np.ndarray:
        ...

    # ------------------------------------------------------------- defaults
    def density(self, theta, x) -> np.ndarray:
        return np.exp(self.log_density(theta, x))

    def integral_power(self, theta, power: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
        """Integral of f_theta**power."""
        ones = lambda x: np.ones(len(x))
        return float(self.expect(theta, ones, power, rel_tol=rel_tol))

    def cross_integral(self, theta, theta0, beta: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
        """Integral of f_theta**beta * f_theta0."""
        theta = self.check_theta(theta)
        return float(
            self.expect(theta0, lambda x: np.exp(beta * self.log_density(theta, x)), 1.0, rel_tol=rel_tol)
        )

    def cross_entropy(self, theta, theta0, rel_tol: float = DEFAULT_REL_TOL) -> float:
        """Integral of f_theta0 * log f_theta."""
        theta = self.check_theta(theta)
        return float(self.expect(theta0, lambda x: self.log_density(theta, x), 1.0, rel_tol=rel_tol))

    def start_points(self, data: np.ndarray) -> List[np.ndarray]:
        """Extra multi-start candidates; robust moment analogues where they exist."""
        return []

    def closed_form_matrices(self, theta, beta: float):
        """Analytic (J, K, xi) when the family has them, else None."""
        return None

    def normalization(self, theta, rel_tol: float = 1e-10) -> float:
        """Integral of the density by adaptive quadrature (independent of `expect`)."""
        if self.dim_obs != 1:
            raise NotImplementedError(f"{self.name} must override normalization")
        (domain,) = self.support()
        return integrate(lambda t: float(self.density(theta, np.array([[t]]))[0]), domain, rel_tol=rel_tol)

    def validation_points(self, theta) -> np.ndarray:
        """Observation points used to check score and information by finite differences."""
        raise NotImplementedError

    # ------------------------------------------------------------ plumbing
    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim_param,):
            raise ValueError(f"{self.name} expects {self.dim_param} parameters {self.param_names}, got {theta.shape}")
        for value, (lo, hi), label in zip(theta, self.param_bounds(), self.param_names):
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                raise ValueError(f"{label}={value} outside [{lo}, {hi}]")
        return theta

    def as_observations(self, data) -> np.ndarray:
        """Validate raw data into an (n, dim_obs) array inside the support."""
        obs = np.asarray(data, dtype=float)
        if obs.ndim == 1 and self.dim_obs == 1:
            obs = obs[:, None]
        if obs.ndim == 1 and obs.size == self.dim_obs:
            obs = obs[None, :]
        if obs.ndim != 2 or obs.shape[1] != self.dim_obs:
            raise DataValidationError(
                f"{self.name} needs observations with {self.dim_obs} column(s), got shape {obs.shape}"
            )
        if obs.shape[0] == 0:
            raise DataValidationError("no observations supplied")
        bad = ~np.all(np.isfinite(obs), axis=1)
        if bad.any():
            raise DataValidationError("non-finite observation", row=int(np.argmax(bad)))
        for j, domain in enumerate(self.support()):
            outside = ~domain.contains(obs[:, j])
            if outside.any():
                raise DataValidationError(
                    f"observation outside the {self.name} support ({domain.lower}, {domain.upper})",
                    row=int(np.argmax(outside)),
                )
        return obs

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "param_names": list(self.param_names), "dim_obs": self.dim_obs}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"


def outer_rows(u: np.ndarray) -> np.ndarray:
    """Row-wise outer products of an (m, p) array -> (m, p, p)."""
    return u[:, :, None] * u[:, None, :]


def gaussian_cross_integral(mu, cov, mu0, cov0, beta: float) -> float:
    """Integral of N(x; mu, cov)**beta * N(x; mu0, cov0) in closed form (beta > 0)."""
    mu, mu0 = np.atleast_1d(mu), np.atleast_1d(mu0)
    cov, cov0 = np.atleast_2d(cov), np.atleast_2d(cov0)
    k = mu.size
    det = np.linalg.det(cov)
    # f**beta = c * N(x; mu, cov / beta)
    c = (2 * np.pi) ** (k * (1 - beta) / 2) * det ** ((1 - beta) / 2) * beta ** (-k / 2)
    s = cov / beta + cov0
    diff = mu - mu0
    quad = float(diff @ np.linalg.solve(s, diff))
    return float(c * np.exp(-0.5 * quad) / np.sqrt((2 * np.pi) ** k * np.linalg.det(s)))


def sample_points(values: Sequence[float]) -> np.ndarray:
    return np.asarray(values, dtype=float)[:, None]
