"""
Model registry and family-level constants.

- build_model / MODEL_NAMES: construct a family by its CLI name.
- validate_model: normalization plus score/information finite-difference checks.
- eta_beta, zeta_kappa, bivnormal_sigma_beta, regression_matrices, omega_beta:
  the closed-form constants of the three worked examples.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.components.numerics import IntegrationDomain, finite_difference_jacobian, integrate, invert_spd
from src.models.base import ParametricModel
from src.models.bivariate_normal import BivariateNormalModel
from src.models.normal import NormalLocationModel, NormalModel
from src.models.regression import LinearRegressionModel
from src.models.weibull import WeibullShapeModel
from src.pipeline.exception import ModelError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

__all__ = [
    "MODEL_NAMES",
    "ValidationReport",
    "build_model",
    "validate_model",
    "eta_beta",
    "zeta_kappa",
    "bivnormal_sigma_beta",
    "regression_matrices",
    "omega_beta",
]

MODEL_NAMES = ("normal-loc", "normal", "weibull-shape", "bivnormal", "linreg")


def build_model(name: str, sigma: Optional[float] = None, design=None, coef_names=None) -> ParametricModel:
    """Construct a model by name; `sigma` is the known scale of normal-loc, `design` the regression X."""
    if name == "normal-loc":
        return NormalLocationModel(1.0 if sigma is None else sigma)
    if name == "normal":
        return NormalModel()
    if name == "weibull-shape":
        return WeibullShapeModel()
    if name == "bivnormal":
        return BivariateNormalModel()
    if name == "linreg":
        if design is None:
            raise ModelError("linreg needs a design matrix", stage="build_model")
        return LinearRegressionModel(design, coef_names=coef_names)
    raise ModelError(f"unknown model {name!r}", stage="build_model", supported=MODEL_NAMES)


@dataclass
class ValidationReport:
    model: str
    theta: List[float]
    normalization_residual: float
    score_residual: float
    info_residual: float
    tol: float
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def validate_model(model: ParametricModel, theta, tol: float = 1e-6) -> ValidationReport:
    """Check normalization, score = d log f / d theta and info = -d score / d theta at theta."""
    theta = model.check_theta(theta)
    points = model.validation_points(theta)

    norm_residual = abs(model.normalization(theta) - 1.0)
    fd_score = finite_difference_jacobian(lambda t: model.log_density(t, points), theta)
    score_residual = _relative_gap(model.score(theta, points), fd_score)
    fd_info = -finite_difference_jacobian(lambda t: model.score(t, points), theta)
    info_residual = _relative_gap(model.info(theta, points), fd_info)

    failures = [
        label
        for label, value in (
            ("normalization", norm_residual),
            ("score", score_residual),
            ("info", info_residual),
        )
        if value > tol
    ]
    report = ValidationReport(
        model=model.name,
        theta=theta.tolist(),
        normalization_residual=norm_residual,
        score_residual=score_residual,
        info_residual=info_residual,
        tol=tol,
        failures=failures,
    )
    if failures:
        logger.warning(f"⚠️ {model.name} failed validation at theta={theta.tolist()}: {failures}")
    else:
        logger.info(f"✅ {model.name} validated at theta={theta.tolist()}")
    return report


# ---------------------------------------------------------------- Weibull
def _c_integrand(order: int, a: float) -> Callable[[float], float]:
    def f(y: float) -> float:
        return ((1.0 - y) * np.log(y)) ** order * np.exp(-a * y)

    return f


def eta_beta(beta: float, rel_tol: float = 1e-10) -> float:
    """eta_beta = 1/(1+beta) + C_{2,beta} + 2 C_{1,beta}, C by quadrature on (0, inf)."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    domain = IntegrationDomain(0.0, np.inf, breakpoints=(1.0,))
    a = 1.0 + beta
    c1 = integrate(_c_integrand(1, a), domain, rel_tol=rel_tol)
    c2 = integrate(_c_integrand(2, a), domain, rel_tol=rel_tol)
    return 1.0 / a + c2 + 2.0 * c1


# ------------------------------------------------------- bivariate normal
def zeta_kappa(beta: float) -> Tuple[float, float, float]:
    """(zeta_beta, kappa1_beta, kappa2_beta)."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    b2 = beta**2
    zeta = 1.0 + b2 / (1.0 + 2.0 * beta)
    kappa1 = (b2**2 + 5.0 * b2 + 2.0) / (1.0 + b2) ** 2
    kappa2 = b2 * (1.0 - b2) / (1.0 + b2) ** 2
    return zeta, kappa1, kappa2


def bivnormal_sigma_beta(theta0, beta: float) -> np.ndarray:
    """Published block-diagonal Sigma_beta(theta0) for the bivariate normal at rho = 0.

    This is the displayed closed form used by the correlation test. Its mean and
    rho entries at beta = 0 coincide with the exact sandwich; the generic
    quadrature path (`matrices_at_model`) is exact for every beta.
    """
    _, _, s1, s2, rho = np.asarray(theta0, dtype=float)
    if rho != 0.0:
        raise ModelError(f"closed-form Sigma_beta needs rho = 0, got rho={rho}", stage="bivnormal_sigma_beta")
    zeta, kappa1, kappa2 = zeta_kappa(beta)
    sigma = np.zeros((5, 5))
    sigma[0, 0] = zeta**1.5 * s1**2
    sigma[1, 1] = zeta**1.5 * s2**2
    sigma[2, 2] = zeta**2.5 * kappa1 * s1**2
    sigma[3, 3] = zeta**2.5 * kappa1 * s2**2
    sigma[2, 3] = sigma[3, 2] = zeta**2.5 * kappa2 * s1 * s2
    sigma[4, 4] = zeta**2.5
    return sigma


# ------------------------------------------------------------- regression
def _check_constraint(l_matrix, k: int) -> np.ndarray:
    l_matrix = np.asarray(l_matrix, dtype=float)
    if l_matrix.ndim == 1:
        l_matrix = l_matrix[:, None]
    if l_matrix.shape[0] != k:
        raise ValueError(f"L must have {k} rows, got shape {l_matrix.shape}")
    if np.linalg.matrix_rank(l_matrix) < l_matrix.shape[1]:
        raise ModelError("L does not have full column rank", stage="regression_matrices")
    return l_matrix


def regression_matrices(model: LinearRegressionModel, l_matrix) -> Tuple[np.ndarray, np.ndarray]:
    """D = (X'X)^-1 L (L'(X'X)^-1 L)^-1 L'(X'X)^-1 and D_P = (L'(X'X)^-1 L)^-1 L'(X'X)^-1."""
    l_matrix = _check_constraint(l_matrix, model.k)
    gram_inv = invert_spd(model.gram, role="X^T X")
    inner_inv = invert_spd(l_matrix.T @ gram_inv @ l_matrix, role="L^T (X^T X)^-1 L")
    d_p = inner_inv @ l_matrix.T @ gram_inv
    d = gram_inv @ l_matrix @ d_p
    return 0.5 * (d + d.T), d_p


def omega_beta(model: LinearRegressionModel, l_matrix, delta, sigma2: float, beta: float) -> float:
    """Noncentrality zeta^{-3/2} sigma^{-2} delta'(L' G^{-1} L)^{-1} delta with G = X'X / n.

    The normalized Gram matrix keeps the contiguous shift delta on the
    n^{-1/2} scale used by every other test in the package.
    """
    l_matrix = _check_constraint(l_matrix, model.k)
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    zeta, _, _ = zeta_kappa(beta)
    g_inv = invert_spd(model.gram / model.n, role="X^T X / n")
    inner = l_matrix.T @ g_inv @ l_matrix
    return float(delta @ np.linalg.solve(inner, delta) / (zeta**1.5 * sigma2))
