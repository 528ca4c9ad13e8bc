"""
Wald-type tests built on the MDPDE.

Simple null:    W0 = n (theta_hat - theta0)^T Sigma^{-1}(theta0) (theta_hat - theta0),   df = p
Composite null: W  = n m^T (M^T Sigma M)^{-1} m, everything at theta_hat,          df = r

Contiguous power uses the noncentrality d^T Sigma^{-1} d (simple) or
t^T (M^T Sigma M)^{-1} t with t = M^T d (composite); contamination shifts the
direction to d + eps * IF(x).
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import special, stats

from src.components.mdpde import MdpdeFit, estimator_influence, matrices_at_model, sandwich
from src.components.numerics import (
    SERIES_MAX_TERMS,
    SERIES_TOL,
    NoncentralChisq,
    chisq_quantile,
    finite_difference_jacobian,
    invert_spd,
    noncentral_chisq_sf,
)
from src.models.base import ParametricModel
from src.models.zoo import zeta_kappa
from src.pipeline.exception import ModelError, NumericalError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

__all__ = [
    "Restriction",
    "WaldResult",
    "ContiguousSpec",
    "simple_wald",
    "composite_wald",
    "correlation_wald_statistic",
    "regression_wald_statistic",
    "noncentrality",
    "contiguous_power",
    "contiguous_power_series",
    "poisson_weight",
    "contaminated_level",
    "level_derivative",
    "power_fixed_alternative",
]

DEFAULT_ALPHA = 0.05


@dataclass
class Restriction:
    """Composite null m(theta) = 0_r with Jacobian M(theta) = d m^T / d theta (p x r)."""

    name: str
    r: int
    m: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    affine: bool = False

    def value(self, theta) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.m(np.asarray(theta, dtype=float)), dtype=float))

    def jacobian_at(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.jacobian is not None:
            jac = np.asarray(self.jacobian(theta), dtype=float)
        else:
            jac = finite_difference_jacobian(self.value, theta).T
        jac = jac.reshape(theta.size, self.r)
        if np.linalg.matrix_rank(jac) < self.r:
            raise ModelError(f"restriction {self.name!r} Jacobian is rank deficient", stage="restriction")
        return jac

    @classmethod
    def linear(cls, l_matrix, l0=None, name: str = "linear") -> "Restriction":
        """m(theta) = L^T theta - l0 with L of shape p x r."""
        l_matrix = np.asarray(l_matrix, dtype=float)
        if l_matrix.ndim == 1:
            l_matrix = l_matrix[:, None]
        r = l_matrix.shape[1]
        l0 = np.zeros(r) if l0 is None else np.atleast_1d(np.asarray(l0, dtype=float))
        if l0.shape != (r,):
            raise ValueError(f"l0 must have length {r}, got {l0.shape}")
        return cls(name=name, r=r, m=lambda t: l_matrix.T @ t - l0, jacobian=lambda t: l_matrix, affine=True)

    @classmethod
    def correlation(cls, p: int = 5, index: int = 4) -> "Restriction":
        """rho = 0 in the bivariate normal."""
        selector = np.zeros((p, 1))
        selector[index, 0] = 1.0
        return cls.linear(selector, name="correlation")

    @classmethod
    def regression_linear(cls, k: int, l_coef, l0=None, name: str = "linear") -> "Restriction":
        """L^T vartheta = l0 for the regression coefficients; sigma^2 unrestricted."""
        l_coef = np.asarray(l_coef, dtype=float)
        if l_coef.ndim == 1:
            l_coef = l_coef[:, None]
        if l_coef.shape[0] != k:
            raise ValueError(f"L must have {k} rows, got shape {l_coef.shape}")
        padded = np.vstack([l_coef, np.zeros((1, l_coef.shape[1]))])
        return cls.linear(padded, l0, name=name)

    @classmethod
    def identity(cls, theta0) -> "Restriction":
        """theta = theta0 written as a composite null (r = p, M = I)."""
        theta0 = np.asarray(theta0, dtype=float)
        return cls.linear(np.eye(theta0.size), theta0, name="identity")


@dataclass
class WaldResult:
    statistic: float
    df: int
    p_value: float
    critical_value: float
    alpha: float
    reject: bool
    beta: float
    null: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "beta": self.beta,
            "null": self.null,
        }


def _result(statistic: float, df: int, alpha: float, beta: float, null: str) -> WaldResult:
    critical = chisq_quantile(alpha, df)
    statistic = max(float(statistic), 0.0)
    p_value = noncentral_chisq_sf(statistic, NoncentralChisq(df))
    result = WaldResult(
        statistic=statistic,
        df=int(df),
        p_value=float(p_value),
        critical_value=critical,
        alpha=alpha,
        reject=bool(statistic > critical),
        beta=beta,
        null=null,
    )
    logger.info(f"✅ W={statistic:.6g} df={df} p={p_value:.4g} reject={result.reject} (beta={beta})")
    return result


def _sigma_at(model: ParametricModel, theta, beta: float, method: str = "quadrature") -> np.ndarray:
    mats = matrices_at_model(model, theta, beta, method=method)
    return sandwich(mats.j, mats.k)


def simple_wald(
    fit: MdpdeFit,
    theta0,
    alpha: float = DEFAULT_ALPHA,
    method: str = "quadrature",
    sigma0: Optional[np.ndarray] = None,
) -> WaldResult:
    """W0 with Sigma_beta evaluated at theta0 (not at theta_hat)."""
    theta0 = fit.model.check_theta(theta0)
    sigma0 = sigma0 if sigma0 is not None else _sigma_at(fit.model, theta0, fit.beta, method)
    diff = fit.theta_hat - theta0
    statistic = fit.n * diff @ invert_spd(sigma0, role="Sigma_beta(theta0)") @ diff
    return _result(statistic, fit.model.dim_param, alpha, fit.beta, "simple")


def composite_wald(
    fit: MdpdeFit,
    restriction: Restriction,
    alpha: float = DEFAULT_ALPHA,
    sigma: Optional[np.ndarray] = None,
) -> WaldResult:
    """W with m, M and Sigma_beta all at theta_hat; `sigma` overrides the fitted sandwich."""
    m = restriction.value(fit.theta_hat)
    jac = restriction.jacobian_at(fit.theta_hat)
    sigma = fit.sigma if sigma is None else sigma
    inner = jac.T @ sigma @ jac
    statistic = fit.n * m @ invert_spd(inner, role="M^T Sigma M") @ m
    return _result(statistic, restriction.r, alpha, fit.beta, restriction.name)


def correlation_wald_statistic(rho_hat: float, n: int, beta: float) -> float:
    """n rho_hat^2 / zeta_beta^{5/2}."""
    zeta, _, _ = zeta_kappa(beta)
    return float(n * rho_hat**2 / zeta**2.5)


def regression_wald_statistic(fit: MdpdeFit, l_coef, l0=None) -> float:
    """(n / (zeta^{3/2} sigma2_hat)) (L^T b - l0)^T (L^T G^{-1} L)^{-1} (L^T b - l0), G = X^T X / n."""
    model = fit.model
    if not hasattr(model, "gram"):
        raise ModelError("regression statistic needs the linreg model", stage="regression_wald")
    l_coef = np.asarray(l_coef, dtype=float)
    if l_coef.ndim == 1:
        l_coef = l_coef[:, None]
    l0 = np.zeros(l_coef.shape[1]) if l0 is None else np.atleast_1d(np.asarray(l0, dtype=float))
    coef, sigma2 = fit.theta_hat[:-1], float(fit.theta_hat[-1])
    zeta, _, _ = zeta_kappa(fit.beta)
    g_inv = invert_spd(model.gram / model.n, role="X^T X / n")
    diff = l_coef.T @ coef - l0
    inner = l_coef.T @ g_inv @ l_coef
    return float(model.n * diff @ np.linalg.solve(inner, diff) / (zeta**1.5 * sigma2))


@dataclass
class ContiguousSpec:
    """Contiguous alternative theta0 + d / sqrt(n) (or m = delta / sqrt(n)), optionally contaminated at x."""

    d: Optional[np.ndarray] = None
    delta: Optional[np.ndarray] = None
    epsilon: float = 0.0
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.d is None) == (self.delta is None):
            raise ValueError("give exactly one of d or delta")
        if self.d is not None:
            self.d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if self.delta is not None:
            self.delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.epsilon > 0 and self.x is None:
            raise ValueError("a contamination point x is needed when epsilon > 0")
        if self.x is not None:
            self.x = np.atleast_1d(np.asarray(self.x, dtype=float))


def _shift(model, theta0, beta, spec: ContiguousSpec, restriction, mats=None) -> np.ndarray:
    """The (possibly contaminated) shift in the space the quadratic form lives in."""
    contamination = None
    if spec.epsilon > 0:
        contamination = spec.epsilon * estimator_influence(model, theta0, beta, spec.x.reshape(1, -1), mats)[0]
    if spec.d is not None:
        d = spec.d if contamination is None else spec.d + contamination
        if d.shape != (model.dim_param,):
            raise ValueError(f"d must have length {model.dim_param}, got {d.shape}")
        return d if restriction is None else restriction.jacobian_at(theta0).T @ d
    if restriction is None:
        raise ValueError("delta applies to a composite null; pass a restriction")
    delta = spec.delta
    if contamination is not None:
        delta = delta + restriction.jacobian_at(theta0).T @ contamination
    return delta


def _quadratic_kernel(model, theta0, restriction, sigma) -> np.ndarray:
    if restriction is None:
        return invert_spd(sigma, role="Sigma_beta(theta0)")
    jac = restriction.jacobian_at(theta0)
    return invert_spd(jac.T @ sigma @ jac, role="Sigma*_beta(theta0)")


def noncentrality(
    model: ParametricModel,
    theta0,
    beta: float,
    spec: ContiguousSpec,
    restriction: Optional[Restriction] = None,
    sigma: Optional[np.ndarray] = None,
    method: str = "quadrature",
) -> float:
    """delta = t^T A t with A = Sigma^{-1} (simple) or (M^T Sigma M)^{-1} (composite)."""
    theta0 = model.check_theta(theta0)
    mats = matrices_at_model(model, theta0, beta, method=method)
    sigma = sigma if sigma is not None else sandwich(mats.j, mats.k)
    t = _shift(model, theta0, beta, spec, restriction, mats)
    return float(t @ _quadratic_kernel(model, theta0, restriction, sigma) @ t)


def _df(model: ParametricModel, restriction: Optional[Restriction]) -> int:
    return model.dim_param if restriction is None else restriction.r


def contiguous_power(
    model: ParametricModel,
    theta0,
    beta: float,
    spec: ContiguousSpec,
    restriction: Optional[Restriction] = None,
    alpha: float = DEFAULT_ALPHA,
    sigma: Optional[np.ndarray] = None,
    method: str = "quadrature",
) -> float:
    """1 - F_{chi2_df(delta)}(chi2_{df, alpha})."""
    df = _df(model, restriction)
    delta = noncentrality(model, theta0, beta, spec, restriction, sigma, method)
    return noncentral_chisq_sf(chisq_quantile(alpha, df), NoncentralChisq(df, delta))


def poisson_weight(v: np.ndarray, s: float) -> np.ndarray:
    """C_v = s^v / (v! 2^v) e^{-s/2}, the Poisson(s/2) masses."""
    v = np.asarray(v, dtype=float)
    if s == 0:
        return (v == 0).astype(float)
    return np.exp(v * np.log(s / 2.0) - special.gammaln(v + 1) - s / 2.0)


def _series_power(s: float, df: int, alpha: float, tol: float, max_terms: int) -> float:
    critical = chisq_quantile(alpha, df)
    total, mass, v = 0.0, 0.0, 0
    while v < max_terms:
        block = np.arange(v, min(v + 64, max_terms))
        weights = poisson_weight(block, s)
        terms = weights * stats.chi2.sf(critical, df + 2 * block)
        for weight, term in zip(weights, terms):
            total += term
            mass += weight
            v += 1
            if abs(term) < tol and mass > 1 - tol:
                return float(total)
    raise NumericalError(
        f"C_v series did not converge within {max_terms} terms (s={s:g})",
        stage="power_series",
        best_estimate=total,
    )


def contiguous_power_series(
    model: ParametricModel,
    theta0,
    beta: float,
    spec: ContiguousSpec,
    restriction: Optional[Restriction] = None,
    alpha: float = DEFAULT_ALPHA,
    sigma: Optional[np.ndarray] = None,
    method: str = "quadrature",
    tol: float = SERIES_TOL,
    max_terms: int = SERIES_MAX_TERMS,
) -> float:
    """sum_v C_v(t, A) P(chi2_{df+2v} > chi2_{df,alpha}) with t the contaminated shift."""
    df = _df(model, restriction)
    s = noncentrality(model, theta0, beta, spec, restriction, sigma, method)
    return _series_power(s, df, alpha, tol, max_terms)


def contaminated_level(
    model: ParametricModel,
    theta0,
    beta: float,
    epsilon: float,
    x,
    restriction: Optional[Restriction] = None,
    alpha: float = DEFAULT_ALPHA,
    method: str = "quadrature",
) -> float:
    """Asymptotic level under n^{-1/2} contamination at x: the series with t = eps * IF(x).

    epsilon may be negative here; only eps^2 enters the noncentrality.
    """
    theta0 = model.check_theta(theta0)
    mats = matrices_at_model(model, theta0, beta, method=method)
    sigma = sandwich(mats.j, mats.k)
    influence = estimator_influence(model, theta0, beta, np.atleast_1d(x).reshape(1, -1), mats)[0]
    t = epsilon * influence
    if restriction is not None:
        t = restriction.jacobian_at(theta0).T @ t
    s = float(t @ _quadratic_kernel(model, theta0, restriction, sigma) @ t)
    return _series_power(s, _df(model, restriction), alpha, SERIES_TOL, SERIES_MAX_TERMS)


def level_derivative(
    model: ParametricModel,
    theta0,
    beta: float,
    x,
    restriction: Optional[Restriction] = None,
    alpha: float = DEFAULT_ALPHA,
    step: float = 1e-5,
) -> float:
    """Forward difference (alpha(step) - alpha(0)) / step of the contaminated level.

    The level is even in epsilon, so a central difference would vanish identically.
    The forward quotient is O(step) and tends to the LIF, which is zero.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    clean = contaminated_level(model, theta0, beta, 0.0, x, restriction, alpha)
    shifted = contaminated_level(model, theta0, beta, step, x, restriction, alpha)
    return (shifted - clean) / step


def power_fixed_alternative(
    model: ParametricModel,
    theta_star,
    beta: float,
    n: int,
    theta0=None,
    restriction: Optional[Restriction] = None,
    alpha: float = DEFAULT_ALPHA,
    method: str = "quadrature",
    fd_step: float = 1e-5,
) -> float:
    """Normal approximation 1 - Phi(sqrt(n)/sigma_W (chi2_{df,alpha}/n - l(theta*)))."""
    if (theta0 is None) == (restriction is None):
        raise ValueError("give exactly one of theta0 or restriction")
    theta_star = model.check_theta(theta_star)
    sigma_star = _sigma_at(model, theta_star, beta, method)

    if restriction is None:
        theta0 = model.check_theta(theta0)
        a = invert_spd(_sigma_at(model, theta0, beta, method), role="Sigma_beta(theta0)")
        diff = theta_star - theta0
        ell = float(diff @ a @ diff)
        grad = 2 * a @ diff
        df = model.dim_param
    else:
        jac = restriction.jacobian_at(theta_star)
        inner_inv = invert_spd(jac.T @ sigma_star @ jac, role="M^T Sigma M")
        # l*(theta1, theta2) = m(theta1)^T (M^T Sigma M)(theta2)^{-1} m(theta1), n-free
        ell_star = lambda t: float(restriction.value(t) @ inner_inv @ restriction.value(t))
        ell = ell_star(theta_star)
        if restriction.affine:
            grad = 2 * jac @ inner_inv @ restriction.value(theta_star)
        else:
            grad = finite_difference_jacobian(lambda t: np.array([ell_star(t)]), theta_star, step=fd_step)[0]
        df = restriction.r

    sd = float(np.sqrt(max(grad @ sigma_star @ grad, 0.0)))
    if sd == 0:
        raise NumericalError("sigma_W(theta*) is zero (degenerate direction)", stage="power_fixed_alternative")
    critical = chisq_quantile(alpha, df)
    return float(stats.norm.sf(np.sqrt(n) / sd * (critical / n - ell)))
