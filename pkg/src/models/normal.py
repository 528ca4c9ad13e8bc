"""Univariate normal families: location with known scale, and location-scale."""

from typing import List, Tuple

import numpy as np

from src.components.numerics import IntegrationDomain, gauss_hermite_rule
from src.models.base import Bounds, ParametricModel, gaussian_cross_integral

HERMITE_NODES = 64
_MAD_SCALE = 1.482602218505602


def gaussian_power_constant(sigma: float, power: float) -> float:
    """Integral of the N(mu, sigma^2) density raised to `power`."""
    return float((2 * np.pi * sigma**2) ** ((1 - power) / 2) / np.sqrt(power))


class _NormalBase(ParametricModel):
    dim_obs = 1

    def support(self) -> Tuple[IntegrationDomain, ...]:
        return (IntegrationDomain(-np.inf, np.inf),)

    def _mu_sigma(self, theta) -> Tuple[float, float]:
        raise NotImplementedError

    def log_density(self, theta, x):
        mu, sigma = self._mu_sigma(theta)
        z = (np.asarray(x, dtype=float)[:, 0] - mu) / sigma
        return -0.5 * np.log(2 * np.pi * sigma**2) - 0.5 * z**2

    def expect(self, theta, integrand, power, rel_tol=1e-10):
        # f^a = c_a * N(mu, sigma^2 / a): Gauss-Hermite in the rescaled variable
        mu, sigma = self._mu_sigma(theta)
        nodes, weights = gauss_hermite_rule(HERMITE_NODES)
        points = mu + sigma / np.sqrt(power) * nodes
        values = np.asarray(integrand(points), dtype=float)
        return gaussian_power_constant(sigma, power) * np.tensordot(weights, values, axes=(0, 0))

    def integral_power(self, theta, power, rel_tol=1e-10):
        _, sigma = self._mu_sigma(theta)
        return gaussian_power_constant(sigma, power)

    def cross_integral(self, theta, theta0, beta, rel_tol=1e-10):
        mu, sigma = self._mu_sigma(self.check_theta(theta))
        mu0, sigma0 = self._mu_sigma(theta0)
        return gaussian_cross_integral(mu, sigma**2, mu0, sigma0**2, beta)

    def cross_entropy(self, theta, theta0, rel_tol=1e-10):
        mu, sigma = self._mu_sigma(self.check_theta(theta))
        mu0, sigma0 = self._mu_sigma(theta0)
        return float(-0.5 * np.log(2 * np.pi * sigma**2) - (sigma0**2 + (mu0 - mu) ** 2) / (2 * sigma**2))


class NormalLocationModel(_NormalBase):
    """N(mu, sigma^2) with sigma known."""

    name = "normal-loc"
    param_names = ("mu",)

    def __init__(self, sigma: float = 1.0):
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.sigma = float(sigma)

    def _mu_sigma(self, theta):
        return float(np.asarray(theta, dtype=float).ravel()[0]), self.sigma

    def param_bounds(self) -> Bounds:
        return [(None, None)]

    def score(self, theta, x):
        mu, sigma = self._mu_sigma(theta)
        return ((np.asarray(x, dtype=float)[:, 0] - mu) / sigma**2)[:, None]

    def info(self, theta, x):
        return np.full((len(x), 1, 1), 1.0 / self.sigma**2)

    def default_init(self, data):
        return np.array([float(np.median(data[:, 0]))])

    def start_points(self, data) -> List[np.ndarray]:
        return [np.array([float(np.mean(data[:, 0]))])]

    def closed_form_matrices(self, theta, beta):
        s2 = self.sigma**2
        c1 = gaussian_power_constant(self.sigma, 1 + beta)
        c2 = gaussian_power_constant(self.sigma, 1 + 2 * beta)
        j = np.array([[c1 / ((1 + beta) * s2)]])
        k = np.array([[c2 / ((1 + 2 * beta) * s2)]])
        return j, k, np.zeros(1)

    def validation_points(self, theta):
        mu = float(np.asarray(theta).ravel()[0])
        return (mu + self.sigma * np.array([-2.5, -0.7, 0.3, 1.9]))[:, None]

    def describe(self):
        return {**super().describe(), "sigma": self.sigma}


class NormalModel(_NormalBase):
    """N(mu, sigma^2) with both parameters unknown."""

    name = "normal"
    param_names = ("mu", "sigma")

    def _mu_sigma(self, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        return float(theta[0]), float(theta[1])

    def param_bounds(self) -> Bounds:
        return [(None, None), (1e-8, None)]

    def score(self, theta, x):
        mu, sigma = self._mu_sigma(theta)
        z = (np.asarray(x, dtype=float)[:, 0] - mu) / sigma
        return np.column_stack([z / sigma, (z**2 - 1) / sigma])

    def info(self, theta, x):
        mu, sigma = self._mu_sigma(theta)
        z = (np.asarray(x, dtype=float)[:, 0] - mu) / sigma
        out = np.empty((len(z), 2, 2))
        out[:, 0, 0] = 1 / sigma**2
        out[:, 0, 1] = out[:, 1, 0] = 2 * z / sigma**2
        out[:, 1, 1] = (3 * z**2 - 1) / sigma**2
        return out

    def default_init(self, data):
        x = data[:, 0]
        med = float(np.median(x))
        mad = float(np.median(np.abs(x - med))) * _MAD_SCALE
        return np.array([med, mad if mad > 0 else max(float(np.std(x)), 1e-3)])

    def start_points(self, data) -> List[np.ndarray]:
        x = data[:, 0]
        return [np.array([float(np.mean(x)), max(float(np.std(x)), 1e-3)])]

    def closed_form_matrices(self, theta, beta):
        _, sigma = self._mu_sigma(theta)
        s2 = sigma**2
        c1 = gaussian_power_constant(sigma, 1 + beta)
        c2 = gaussian_power_constant(sigma, 1 + 2 * beta)
        xi = np.array([0.0, -c1 * beta / ((1 + beta) * sigma)])
        j = np.diag([c1 / ((1 + beta) * s2), c1 * (2 + beta**2) / ((1 + beta) ** 2 * s2)])
        k = np.diag([c2 / ((1 + 2 * beta) * s2), c2 * (2 + 4 * beta**2) / ((1 + 2 * beta) ** 2 * s2)])
        return j, k - np.outer(xi, xi), xi

    def validation_points(self, theta):
        mu, sigma = self._mu_sigma(theta)
        return (mu + sigma * np.array([-2.5, -0.7, 0.3, 1.9]))[:, None]


__all__ = ["NormalLocationModel", "NormalModel", "gaussian_power_constant"]
