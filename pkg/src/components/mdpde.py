"""
MDPDE fitting and its asymptotic matrices.

At the model:        J = int u u^T f^{1+b},  xi = int u f^{1+b},  K = int u u^T f^{1+2b} - xi xi^T
Under g = (1-e) f + e Delta_y (matrices at theta0):
    J_g  = J + e [ f_y^b (I_y - b u_y u_y^T) - int (I - b u u^T) f^{1+b} ]
    xi_g = (1-e) xi + e u_y f_y^b
    K_g  = (1-e) int u u^T f^{1+2b} + e u_y u_y^T f_y^{2b} - xi_g xi_g^T
The atom at y is evaluated directly and never passes through quadrature.
"""

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize as sp_optimize

from src.components.dpd_core import DpdObjectiveSpec, estimating_equation, mdpde_objective
from src.components.numerics import DEFAULT_REL_TOL, invert_spd, minimize, symmetrize
from src.models.base import ParametricModel, outer_rows
from src.pipeline.exception import ModelError, NumericalError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

__all__ = [
    "MdpdeFit",
    "ContaminatedTruth",
    "ModelMatrices",
    "ContaminatedMatrices",
    "fit",
    "matrices_at_model",
    "sandwich",
    "matrices_under_g",
    "population_functional",
    "estimator_influence",
]

METHODS = ("quadrature", "closed-form")


class ModelMatrices(NamedTuple):
    j: np.ndarray
    k: np.ndarray
    xi: np.ndarray


class ContaminatedMatrices(NamedTuple):
    j: np.ndarray
    k: np.ndarray
    xi: np.ndarray
    sigma: np.ndarray


@dataclass
class MdpdeFit:
    model: ParametricModel = field(repr=False)
    theta_hat: np.ndarray
    beta: float
    sigma: np.ndarray
    j_matrix: np.ndarray
    k_matrix: np.ndarray
    xi: np.ndarray
    n: int
    objective_value: float
    n_starts: int = 1
    polished: bool = False

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.sigma) / self.n)

    def to_dict(self) -> Dict[str, object]:
        return {
            "model": self.model.name,
            "param_names": list(self.model.param_names),
            "beta": self.beta,
            "n": self.n,
            "theta_hat": self.theta_hat.tolist(),
            "standard_errors": self.standard_errors.tolist(),
            "sigma": self.sigma.tolist(),
            "j_matrix": self.j_matrix.tolist(),
            "k_matrix": self.k_matrix.tolist(),
            "xi": self.xi.tolist(),
            "objective_value": self.objective_value,
        }


@dataclass
class ContaminatedTruth:
    """g = (1 - epsilon) f_{base_theta} + epsilon * Delta_point."""

    base_theta: np.ndarray
    epsilon: float
    point: np.ndarray

    def __post_init__(self):
        self.base_theta = np.atleast_1d(np.asarray(self.base_theta, dtype=float))
        self.point = np.atleast_1d(np.asarray(self.point, dtype=float))
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    def observation(self, model: ParametricModel) -> np.ndarray:
        """The atom as a validated (1, dim_obs) observation."""
        return model.as_observations(self.point.reshape(1, -1))


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ModelError(f"unknown matrix method {method!r}", stage="matrices", supported=METHODS)


def _model_integrals(model: ParametricModel, theta, beta: float, rel_tol: float) -> Dict[str, np.ndarray]:
    """int u u^T f^{1+b}, int I f^{1+b}, int u f^{1+b} and int u u^T f^{1+2b} by quadrature."""
    p = model.dim_param

    def first(x):
        u = model.score(theta, x)
        return np.concatenate(
            [outer_rows(u).reshape(len(x), -1), model.info(theta, x).reshape(len(x), -1), u], axis=1
        )

    def second(x):
        return outer_rows(model.score(theta, x)).reshape(len(x), -1)

    a = np.asarray(model.expect(theta, first, 1 + beta, rel_tol=rel_tol))
    b = np.asarray(model.expect(theta, second, 1 + 2 * beta, rel_tol=rel_tol))
    return {
        "uu": symmetrize(a[: p * p].reshape(p, p), role="J_beta"),
        "info": symmetrize(a[p * p : 2 * p * p].reshape(p, p), role="int I f^(1+beta)"),
        "xi": a[2 * p * p :],
        "uu2": symmetrize(b.reshape(p, p), role="int u u^T f^(1+2beta)"),
    }


def matrices_at_model(
    model: ParametricModel,
    theta,
    beta: float,
    method: str = "quadrature",
    rel_tol: float = DEFAULT_REL_TOL,
) -> ModelMatrices:
    """(J_beta, K_beta, xi_beta) at theta."""
    _check_method(method)
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    theta = model.check_theta(theta)
    if method == "closed-form":
        closed = model.closed_form_matrices(theta, beta)
        if closed is None:
            raise ModelError(
                f"{model.name} has no closed-form matrices at theta={theta.tolist()}",
                stage="matrices_at_model",
                supported=("quadrature",),
            )
        j, k, xi = closed
        return ModelMatrices(symmetrize(j, role="J_beta"), symmetrize(k, role="K_beta"), np.asarray(xi, float))

    parts = _model_integrals(model, theta, beta, rel_tol)
    k = symmetrize(parts["uu2"] - np.outer(parts["xi"], parts["xi"]), role="K_beta")
    return ModelMatrices(parts["uu"], k, parts["xi"])


def sandwich(j: np.ndarray, k: np.ndarray, role: str = "J_beta") -> np.ndarray:
    """Sigma = J^{-1} K J^{-1}."""
    j_inv = invert_spd(j, role=role)
    return symmetrize(j_inv @ k @ j_inv, role="Sigma_beta")


def estimator_influence(
    model: ParametricModel,
    theta0,
    beta: float,
    x,
    mats: Optional[ModelMatrices] = None,
) -> np.ndarray:
    """IF(x, T_beta, F_theta0) = J^{-1}(u(x) f^beta(x) - xi) for rows of x, shape (m, p).

    Scaled by the model contamination weight (1/n for one direction of the fixed design).
    """
    theta0 = model.check_theta(theta0)
    x = model.as_observations(x)
    mats = mats or matrices_at_model(model, theta0, beta)
    weighted = model.score(theta0, x) * np.exp(beta * model.log_density(theta0, x))[:, None]
    j_inv = invert_spd(mats.j, role="J_beta")
    return model.contamination_weight * (weighted - mats.xi) @ j_inv.T


def fit(
    model: ParametricModel,
    data,
    beta: float,
    init: Optional[Sequence[float]] = None,
    starts: Optional[Sequence[Sequence[float]]] = None,
    multistart: bool = True,
    polish: bool = True,
    method: str = "quadrature",
    rel_tol: float = DEFAULT_REL_TOL,
) -> MdpdeFit:
    """Minimize the empirical DPD objective and attach the sandwich covariance at theta_hat."""
    _check_method(method)
    spec = DpdObjectiveSpec(model, beta, data)
    logger.info(f"🚀 Fitting {model.name} with beta={beta} on n={spec.n}")

    init = np.asarray(init if init is not None else model.default_init(spec.data), dtype=float)
    candidates: List[np.ndarray] = []
    if multistart:
        candidates.extend(model.start_points(spec.data))
    candidates.extend(np.asarray(s, dtype=float) for s in (starts or []))

    def objective(theta: np.ndarray) -> float:
        try:
            return mdpde_objective(spec, theta)
        except ValueError:
            return np.inf

    result = minimize(
        objective,
        init,
        bounds=model.param_bounds(),
        starts=candidates,
        golden=model.dim_param == 1,
    )
    theta_hat, value, polished = result.x, result.fun, False

    if polish:
        theta_hat, value, polished = _polish(
            lambda t: estimating_equation(spec, t), objective, theta_hat, value
        )

    mats = matrices_at_model(model, theta_hat, beta, method=method, rel_tol=rel_tol)
    sigma = sandwich(mats.j, mats.k)
    logger.info(f"✅ theta_hat={np.round(theta_hat, 6).tolist()} objective={value:.8g}")
    return MdpdeFit(
        model=model,
        theta_hat=theta_hat,
        beta=float(beta),
        sigma=sigma,
        j_matrix=mats.j,
        k_matrix=mats.k,
        xi=mats.xi,
        n=spec.n,
        objective_value=float(value),
        n_starts=result.n_starts,
        polished=polished,
    )


def _polish(equation, objective, theta, value, slack: float = 1e-12):
    """Newton-type root polish of the estimating equation; kept only if the objective does not worsen."""
    try:
        root = sp_optimize.root(equation, theta, method="hybr", options={"xtol": 1e-13})
    except (NumericalError, ValueError, FloatingPointError) as exc:
        logger.debug(f"⚠️ root polish skipped: {exc}")
        return theta, value, False
    if not root.success or not np.all(np.isfinite(root.x)):
        return theta, value, False
    polished_value = objective(root.x)
    if polished_value <= value + slack * max(1.0, abs(value)):
        return np.asarray(root.x, dtype=float), float(polished_value), True
    return theta, value, False


def _require_homogeneous(model: ParametricModel, stage: str) -> None:
    if not model.homogeneous:
        raise ModelError(
            f"{model.name} is non-homogeneous; contamination needs a per-direction treatment",
            stage=stage,
        )


def matrices_under_g(
    model: ParametricModel,
    truth: ContaminatedTruth,
    beta: float,
    rel_tol: float = DEFAULT_REL_TOL,
    integrals: Optional[Dict[str, np.ndarray]] = None,
) -> ContaminatedMatrices:
    """(J_g, K_g, xi_g, Sigma_g) at theta0 under the point-contaminated truth."""
    _require_homogeneous(model, "matrices_under_g")
    theta0 = model.check_theta(truth.base_theta)
    y = truth.observation(model)
    eps = truth.epsilon
    parts = integrals or _model_integrals(model, theta0, beta, rel_tol)

    u_y = model.score(theta0, y)[0]
    f_y = float(np.exp(model.log_density(theta0, y))[0])
    info_y = model.info(theta0, y)[0]
    uu_y = np.outer(u_y, u_y)

    j_g = parts["uu"] + eps * (
        f_y**beta * (info_y - beta * uu_y) - (parts["info"] - beta * parts["uu"])
    )
    xi_g = (1 - eps) * parts["xi"] + eps * u_y * f_y**beta
    k_g = (1 - eps) * parts["uu2"] + eps * uu_y * f_y ** (2 * beta) - np.outer(xi_g, xi_g)

    j_g = symmetrize(j_g, role="J_beta_g")
    k_g = symmetrize(k_g, role="K_beta_g")
    return ContaminatedMatrices(j_g, k_g, xi_g, sandwich(j_g, k_g, role="J_beta_g"))


def _population_objective(model, truth, beta, y):
    theta0, eps = truth.base_theta, truth.epsilon

    def objective(theta):
        try:
            theta = model.check_theta(theta)
        except ValueError:
            return np.inf
        log_fy = float(model.log_density(theta, y)[0])
        if beta == 0:
            return -((1 - eps) * model.cross_entropy(theta, theta0) + eps * log_fy)
        mixed = (1 - eps) * model.cross_integral(theta, theta0, beta) + eps * np.exp(beta * log_fy)
        return model.integral_power(theta, 1 + beta) - (1 + 1 / beta) * mixed

    return objective


def _population_equation(model, truth, beta, y):
    theta0, eps = truth.base_theta, truth.epsilon

    def equation(theta):
        theta = np.asarray(theta, dtype=float)
        weighted = lambda x: model.score(theta, x) * np.exp(beta * model.log_density(theta, x))[:, None]
        clean = np.asarray(model.expect(theta0, weighted, 1.0))
        atom = weighted(y)[0]
        value = (1 - eps) * clean + eps * atom
        if beta == 0:
            return value
        return value - np.asarray(model.expect(theta, lambda x: model.score(theta, x), 1 + beta))

    return equation


def population_functional(
    model: ParametricModel,
    truth: ContaminatedTruth,
    beta: float,
    init: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """T_beta(G) for G = (1 - eps) F_theta0 + eps Delta_y."""
    _require_homogeneous(model, "population_functional")
    theta0 = model.check_theta(truth.base_theta)
    y = truth.observation(model)
    if truth.epsilon == 0:
        return theta0.copy()

    objective = _population_objective(model, truth, beta, y)
    start = np.asarray(init, dtype=float) if init is not None else theta0
    result = minimize(objective, start, bounds=model.param_bounds(), golden=model.dim_param == 1)
    # population integrals come from quadrature, so allow for its noise
    theta, _, polished = _polish(
        _population_equation(model, truth, beta, y), objective, result.x, result.fun, slack=1e-9
    )
    if not polished:
        logger.warning("⚠️ population functional kept the simplex optimum (root polish rejected)")
    return theta
