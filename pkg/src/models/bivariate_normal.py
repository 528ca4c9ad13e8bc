"""
Bivariate normal family, theta = (mu1, mu2, sigma1, sigma2, rho).

With z_i = (x_i - mu_i)/sigma_i, s = 1 - rho^2, a = z1 - rho z2, b = z2 - rho z1 and
Q = z1^2 - 2 rho z1 z2 + z2^2 the score and information are written out
entrywise below.
"""

from typing import List, Tuple

import numpy as np

from src.components.numerics import IntegrationDomain, gauss_hermite_rule, integrate
from src.models.base import Bounds, ParametricModel, gaussian_cross_integral

RHO_BOUND = 0.999
HERMITE_NODES = 24


class BivariateNormalModel(ParametricModel):
    name = "bivnormal"
    param_names = ("mu1", "mu2", "sigma1", "sigma2", "rho")
    dim_obs = 2

    def param_bounds(self) -> Bounds:
        return [(None, None), (None, None), (1e-8, None), (1e-8, None), (-RHO_BOUND, RHO_BOUND)]

    def support(self) -> Tuple[IntegrationDomain, ...]:
        return (IntegrationDomain(-np.inf, np.inf), IntegrationDomain(-np.inf, np.inf))

    @staticmethod
    def covariance(theta) -> np.ndarray:
        _, _, s1, s2, rho = np.asarray(theta, dtype=float)
        return np.array([[s1**2, rho * s1 * s2], [rho * s1 * s2, s2**2]])

    @staticmethod
    def _standardize(theta, x):
        mu1, mu2, s1, s2, rho = np.asarray(theta, dtype=float)
        x = np.asarray(x, dtype=float)
        z1 = (x[:, 0] - mu1) / s1
        z2 = (x[:, 1] - mu2) / s2
        return z1, z2, s1, s2, rho

    def log_density(self, theta, x):
        z1, z2, s1, s2, rho = self._standardize(theta, x)
        s = 1 - rho**2
        q = z1**2 - 2 * rho * z1 * z2 + z2**2
        return -np.log(2 * np.pi * s1 * s2 * np.sqrt(s)) - q / (2 * s)

    def score(self, theta, x):
        z1, z2, s1, s2, rho = self._standardize(theta, x)
        s = 1 - rho**2
        a = z1 - rho * z2
        b = z2 - rho * z1
        q = z1**2 - 2 * rho * z1 * z2 + z2**2
        return np.column_stack(
            [
                a / (s1 * s),
                b / (s2 * s),
                -1 / s1 + z1 * a / (s1 * s),
                -1 / s2 + z2 * b / (s2 * s),
                rho / s + z1 * z2 / s - rho * q / s**2,
            ]
        )

    def info(self, theta, x):
        z1, z2, s1, s2, rho = self._standardize(theta, x)
        s = 1 - rho**2
        a = z1 - rho * z2
        b = z2 - rho * z1
        q = z1**2 - 2 * rho * z1 * z2 + z2**2
        m = len(z1)
        out = np.empty((m, 5, 5))

        def put(i, j, value):
            out[:, i, j] = value
            out[:, j, i] = value

        put(0, 0, np.full(m, 1 / (s1**2 * s)))
        put(0, 1, np.full(m, -rho / (s1 * s2 * s)))
        put(0, 2, (z1 + a) / (s1**2 * s))
        put(0, 3, -rho * z2 / (s1 * s2 * s))
        put(0, 4, z2 / (s1 * s) - 2 * rho * a / (s1 * s**2))
        put(1, 1, np.full(m, 1 / (s2**2 * s)))
        put(1, 2, -rho * z1 / (s1 * s2 * s))
        put(1, 3, (z2 + b) / (s2**2 * s))
        put(1, 4, z1 / (s2 * s) - 2 * rho * b / (s2 * s**2))
        put(2, 2, (z1**2 + 2 * z1 * a) / (s1**2 * s) - 1 / s1**2)
        put(2, 3, -rho * z1 * z2 / (s1 * s2 * s))
        put(2, 4, z1 * z2 / (s1 * s) - 2 * rho * z1 * a / (s1 * s**2))
        put(3, 3, (z2**2 + 2 * z2 * b) / (s2**2 * s) - 1 / s2**2)
        put(3, 4, z1 * z2 / (s2 * s) - 2 * rho * z2 * b / (s2 * s**2))
        put(4, 4, (q - 1 - rho**2 - 4 * rho * z1 * z2) / s**2 + 4 * rho**2 * q / s**3)
        return out

    def _power_constant(self, theta, power: float) -> float:
        _, _, s1, s2, rho = np.asarray(theta, dtype=float)
        root_det = s1 * s2 * np.sqrt(1 - rho**2)
        return float((2 * np.pi * root_det) ** (1 - power) / power)

    def expect(self, theta, integrand, power, rel_tol=1e-10):
        # f^a = c_a * N(mu, Sigma / a); tensor Gauss-Hermite in the whitened variable
        theta = np.asarray(theta, dtype=float)
        nodes, weights = gauss_hermite_rule(HERMITE_NODES, dim=2)
        chol = np.linalg.cholesky(self.covariance(theta) / power)
        points = theta[:2] + nodes @ chol.T
        values = np.asarray(integrand(points), dtype=float)
        return self._power_constant(theta, power) * np.tensordot(weights, values, axes=(0, 0))

    def integral_power(self, theta, power, rel_tol=1e-10):
        return self._power_constant(theta, power)

    def cross_integral(self, theta, theta0, beta, rel_tol=1e-10):
        theta = self.check_theta(theta)
        theta0 = np.asarray(theta0, dtype=float)
        return gaussian_cross_integral(
            theta[:2], self.covariance(theta), theta0[:2], self.covariance(theta0), beta
        )

    def normalization(self, theta, rel_tol=1e-10) -> float:
        mu1, mu2, s1, s2, _ = np.asarray(theta, dtype=float)
        outer = IntegrationDomain(mu1 - 12 * s1, mu1 + 12 * s1)
        inner = IntegrationDomain(mu2 - 12 * s2, mu2 + 12 * s2)

        def slice_mass(x1: float) -> float:
            return integrate(
                lambda x2: float(self.density(theta, np.array([[x1, x2]]))[0]), inner, rel_tol=rel_tol
            )

        return integrate(slice_mass, outer, rel_tol=rel_tol)

    def default_init(self, data):
        med = np.median(data, axis=0)
        mad = np.median(np.abs(data - med), axis=0) * 1.482602218505602
        scale = np.where(mad > 0, mad, np.maximum(np.std(data, axis=0), 1e-3))
        z = (data - med) / scale
        # Gnanadesikan-Kettenring style robust correlation from scaled sums and differences
        u = np.median(np.abs(z[:, 0] + z[:, 1])) ** 2
        v = np.median(np.abs(z[:, 0] - z[:, 1])) ** 2
        rho = (u - v) / (u + v) if u + v > 0 else 0.0
        return np.array([med[0], med[1], scale[0], scale[1], float(np.clip(rho, -0.9, 0.9))])

    def start_points(self, data) -> List[np.ndarray]:
        mean = data.mean(axis=0)
        sd = np.maximum(data.std(axis=0), 1e-3)
        rho = float(np.clip(np.corrcoef(data.T)[0, 1], -0.9, 0.9)) if len(data) > 2 else 0.0
        return [np.array([mean[0], mean[1], sd[0], sd[1], rho])]

    def closed_form_matrices(self, theta, beta):
        """Exact J, K, xi at rho = 0, where the coordinates are independent."""
        _, _, s1, s2, rho = np.asarray(theta, dtype=float)
        if rho != 0.0:
            return None

        def pieces(a: float):
            c = self._power_constant(theta, a)
            diag = np.array(
                [
                    c / (a * s1**2),
                    c / (a * s2**2),
                    c * (3 - 2 * a + a**2) / (a**2 * s1**2),
                    c * (3 - 2 * a + a**2) / (a**2 * s2**2),
                    c / a**2,
                ]
            )
            m = np.diag(diag)
            m[2, 3] = m[3, 2] = c * (1 / a - 1) ** 2 / (s1 * s2)
            xi = np.array([0.0, 0.0, c * (1 / a - 1) / s1, c * (1 / a - 1) / s2, 0.0])
            return m, xi

        j, xi = pieces(1 + beta)
        k_raw, _ = pieces(1 + 2 * beta)
        return j, k_raw - np.outer(xi, xi), xi

    def validation_points(self, theta):
        mu1, mu2, s1, s2, _ = np.asarray(theta, dtype=float)
        z = np.array([[0.4, -1.1], [-1.7, 0.6], [2.2, 1.3], [-0.3, -0.8]])
        return np.column_stack([mu1 + s1 * z[:, 0], mu2 + s2 * z[:, 1]])
