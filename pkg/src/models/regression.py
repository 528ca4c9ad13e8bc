"""
Fixed-design normal linear regression, y_i = x_i^T vartheta + e_i, e_i ~ N(0, sigma^2).

Observations are rows [y_i, x_i]. The family is non-homogeneous: every model
integral is the average over design rows of a one-dimensional normal integral
in y, and a single contaminated distribution carries weight 1/n.
"""

from typing import List, Tuple

import numpy as np

from src.components.numerics import IntegrationDomain, gauss_hermite_rule
from src.models.base import Bounds, ParametricModel, outer_rows
from src.models.normal import gaussian_power_constant
from src.pipeline.exception import DataValidationError

HERMITE_NODES = 48


class LinearRegressionModel(ParametricModel):
    name = "linreg"
    homogeneous = False

    def __init__(self, design, coef_names=None):
        design = np.asarray(design, dtype=float)
        if design.ndim == 1:
            design = design[:, None]
        if design.ndim != 2 or design.shape[0] <= design.shape[1]:
            raise DataValidationError(f"design must be an n x k matrix with n > k, got shape {design.shape}")
        bad = ~np.all(np.isfinite(design), axis=1)
        if bad.any():
            raise DataValidationError("non-finite design entry", row=int(np.argmax(bad)))
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise DataValidationError("design matrix does not have full column rank")
        self.design = design
        self.n, self.k = design.shape
        names = list(coef_names) if coef_names is not None else [f"beta_{j}" for j in range(self.k)]
        self.param_names = tuple(names) + ("sigma2",)
        self.dim_obs = 1 + self.k

    @property
    def gram(self) -> np.ndarray:
        """Raw X^T X."""
        return self.design.T @ self.design

    @property
    def contamination_weight(self) -> float:
        return 1.0 / self.n

    def param_bounds(self) -> Bounds:
        return [(None, None)] * self.k + [(1e-10, None)]

    def support(self) -> Tuple[IntegrationDomain, ...]:
        return tuple(IntegrationDomain(-np.inf, np.inf) for _ in range(self.dim_obs))

    def as_observations(self, data) -> np.ndarray:
        """Accept responses alone (paired with the stored design) or full [y, x] rows."""
        obs = np.asarray(data, dtype=float)
        if obs.ndim == 2 and obs.shape[1] == 1:
            obs = obs[:, 0]
        if obs.ndim == 1:
            if obs.size != self.n:
                raise DataValidationError(f"{obs.size} responses for a design with {self.n} rows")
            obs = np.column_stack([obs, self.design])
        return super().as_observations(obs)

    @staticmethod
    def _split(theta):
        theta = np.asarray(theta, dtype=float).ravel()
        return theta[:-1], float(theta[-1])

    def _residual(self, theta, x):
        coef, sigma2 = self._split(theta)
        x = np.asarray(x, dtype=float)
        return x[:, 0] - x[:, 1:] @ coef, x[:, 1:], sigma2

    def log_density(self, theta, x):
        r, _, sigma2 = self._residual(theta, x)
        return -0.5 * np.log(2 * np.pi * sigma2) - r**2 / (2 * sigma2)

    def score(self, theta, x):
        r, rows, sigma2 = self._residual(theta, x)
        return np.column_stack([rows * (r / sigma2)[:, None], (r**2 - sigma2) / (2 * sigma2**2)])

    def info(self, theta, x):
        r, rows, sigma2 = self._residual(theta, x)
        p = self.k + 1
        out = np.empty((len(r), p, p))
        out[:, : self.k, : self.k] = outer_rows(rows) / sigma2
        cross = rows * (r / sigma2**2)[:, None]
        out[:, : self.k, self.k] = cross
        out[:, self.k, : self.k] = cross
        out[:, self.k, self.k] = r**2 / sigma2**3 - 1 / (2 * sigma2**2)
        return out

    def expect(self, theta, integrand, power, rel_tol=1e-10):
        coef, sigma2 = self._split(theta)
        sigma = np.sqrt(sigma2)
        nodes, weights = gauss_hermite_rule(HERMITE_NODES)
        means = self.design @ coef
        y = (means[:, None] + sigma / np.sqrt(power) * nodes[:, 0][None, :]).ravel()
        rows = np.repeat(self.design, len(weights), axis=0)
        values = np.asarray(integrand(np.column_stack([y, rows])), dtype=float)
        w = np.tile(weights, self.n) / self.n
        return gaussian_power_constant(sigma, power) * np.tensordot(w, values, axes=(0, 0))

    def integral_power(self, theta, power, rel_tol=1e-10):
        _, sigma2 = self._split(theta)
        return gaussian_power_constant(np.sqrt(sigma2), power)

    def normalization(self, theta, rel_tol=1e-10) -> float:
        return float(self.expect(theta, lambda x: np.ones(len(x)), 1.0))

    def default_init(self, data):
        coef, *_ = np.linalg.lstsq(data[:, 1:], data[:, 0], rcond=None)
        resid = data[:, 0] - data[:, 1:] @ coef
        mad = float(np.median(np.abs(resid - np.median(resid)))) * 1.482602218505602
        sigma2 = mad**2 if mad > 0 else max(float(np.mean(resid**2)), 1e-6)
        return np.append(coef, sigma2)

    def start_points(self, data) -> List[np.ndarray]:
        coef, *_ = np.linalg.lstsq(data[:, 1:], data[:, 0], rcond=None)
        resid = data[:, 0] - data[:, 1:] @ coef
        return [np.append(coef, max(float(np.mean(resid**2)), 1e-6))]

    def closed_form_matrices(self, theta, beta):
        _, sigma2 = self._split(theta)
        sigma = np.sqrt(sigma2)
        g = self.gram / self.n

        def block(a: float):
            c = gaussian_power_constant(sigma, a)
            m = np.zeros((self.k + 1, self.k + 1))
            m[: self.k, : self.k] = c * g / (a * sigma2)
            m[self.k, self.k] = c * (3 - 2 * a + a**2) / (4 * a**2 * sigma2**2)
            xi = np.zeros(self.k + 1)
            xi[self.k] = c * (1 / a - 1) / (2 * sigma2)
            return m, xi

        j, xi = block(1 + beta)
        k_raw, _ = block(1 + 2 * beta)
        return j, k_raw - np.outer(xi, xi), xi

    def validation_points(self, theta):
        coef, sigma2 = self._split(theta)
        rows = self.design[: min(4, self.n)]
        offsets = np.array([-1.3, 0.4, 2.1, -0.2])[: len(rows)] * np.sqrt(sigma2)
        return np.column_stack([rows @ coef + offsets, rows])

    def describe(self):
        return {**super().describe(), "n": self.n, "k": self.k}
