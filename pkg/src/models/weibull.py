"""
Weibull shape family with the scale fixed at one.

    f_theta(x) = theta * x^(theta - 1) * exp(-x^theta),   x > 0

Substituting y = x^theta turns every model integral at theta = 1 into a
gamma-type integral, which gives closed forms for J, K and xi through
digamma/trigamma values.
"""

from typing import List, Tuple

import numpy as np
from scipy import special

from src.components.numerics import IntegrationDomain, integrate_vector
from src.models.base import Bounds, ParametricModel

SHAPE_BOUNDS = (0.05, 50.0)


def _log_gamma_moment(k: int, a: float, order: int) -> float:
    """Integral of y^k (log y)^order e^{-a y} over (0, inf) for order in {0, 1, 2}."""
    scale = special.gamma(k + 1) / a ** (k + 1)
    shift = special.digamma(k + 1) - np.log(a)
    if order == 0:
        return float(scale)
    if order == 1:
        return float(scale * shift)
    return float(scale * (shift**2 + special.polygamma(1, k + 1)))


def c_integrals(beta: float) -> Tuple[float, float]:
    """Closed-form (C_{1,beta}, C_{2,beta}) with C_{k,beta} = int ((1-y) log y)^k e^{-(1+beta) y} dy."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    a = 1.0 + beta
    c1 = _log_gamma_moment(0, a, 1) - _log_gamma_moment(1, a, 1)
    c2 = _log_gamma_moment(0, a, 2) - 2 * _log_gamma_moment(1, a, 2) + _log_gamma_moment(2, a, 2)
    return c1, c2


def eta_closed_form(beta: float) -> float:
    c1, c2 = c_integrals(beta)
    return 1.0 / (1.0 + beta) + c2 + 2.0 * c1


def xi_closed_form(beta: float) -> float:
    """int u_1 f_1^{1+beta} at theta = 1."""
    c1, _ = c_integrals(beta)
    return 1.0 / (1.0 + beta) + c1


class WeibullShapeModel(ParametricModel):
    name = "weibull-shape"
    param_names = ("shape",)
    dim_obs = 1

    def param_bounds(self) -> Bounds:
        return [SHAPE_BOUNDS]

    def support(self) -> Tuple[IntegrationDomain, ...]:
        return (IntegrationDomain(0.0, np.inf, breakpoints=(1.0,)),)

    def log_density(self, theta, x):
        shape = float(np.asarray(theta, dtype=float).ravel()[0])
        x = np.asarray(x, dtype=float)[:, 0]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.log(shape) + (shape - 1) * np.log(x) - x**shape

    def score(self, theta, x):
        shape = float(np.asarray(theta, dtype=float).ravel()[0])
        x = np.asarray(x, dtype=float)[:, 0]
        log_x = np.log(x)
        return (1.0 / shape + (1.0 - x**shape) * log_x)[:, None]

    def info(self, theta, x):
        shape = float(np.asarray(theta, dtype=float).ravel()[0])
        x = np.asarray(x, dtype=float)[:, 0]
        log_x = np.log(x)
        return (1.0 / shape**2 + x**shape * log_x**2)[:, None, None]

    def expect(self, theta, integrand, power, rel_tol=1e-10):
        (domain,) = self.support()

        def weighted(t: float) -> np.ndarray:
            point = np.array([[t]])
            weight = float(np.exp(power * self.log_density(theta, point))[0])
            value = np.asarray(integrand(point), dtype=float)[0]
            if weight == 0.0:
                # far tail: the weight underflows before the integrand overflows
                return np.zeros_like(value)
            return value * weight

        return integrate_vector(weighted, domain, rel_tol=rel_tol)

    def integral_power(self, theta, power, rel_tol=1e-10):
        shape = float(np.asarray(theta, dtype=float).ravel()[0])
        beta = power - 1.0
        s = 1.0 + beta - beta / shape
        if s <= 0:
            # divergent integral; the objective is +inf there
            return float("inf")
        return float(np.exp(beta * np.log(shape) + special.gammaln(s) - s * np.log(power)))

    def default_init(self, data):
        log_x = np.log(data[:, 0])
        spread = float(np.std(log_x))
        if spread <= 0:
            return np.array([1.0])
        return np.array([float(np.clip(np.pi / (np.sqrt(6.0) * spread), *SHAPE_BOUNDS))])

    def start_points(self, data) -> List[np.ndarray]:
        return [np.array([1.0])]

    def closed_form_matrices(self, theta, beta):
        shape = float(np.asarray(theta, dtype=float).ravel()[0])
        if shape != 1.0:
            return None
        xi = xi_closed_form(beta)
        j = eta_closed_form(beta)
        k = eta_closed_form(2 * beta) - xi**2
        return np.array([[j]]), np.array([[k]]), np.array([xi])

    def validation_points(self, theta):
        return np.array([0.2, 0.7, 1.3, 2.5])[:, None]
