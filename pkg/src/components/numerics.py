"""
Numerical building blocks shared by every estimator and test.

- integrate / integrate_vector: adaptive Gauss-Kronrod (QUADPACK / quad_vec),
  infinite endpoints handled by scipy's variable transformation.
- gauss_hermite_rule: tensor Gauss-Hermite nodes for Gaussian-weighted integrals.
- noncentral_chisq_sf / power_kernel: Poisson-mixture series of central chi-square tails.
- minimize: bounded Nelder-Mead with restarts and optional multi-start.
- generalized_eigenvalues / invert_spd: small dense symmetric linear algebra.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate as sp_integrate
from scipy import linalg as sp_linalg
from scipy import optimize as sp_optimize
from scipy import stats

from src.pipeline.exception import NumericalError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

__all__ = [
    "IntegrationDomain",
    "NoncentralChisq",
    "OptimizationResult",
    "integrate",
    "integrate_vector",
    "gauss_hermite_rule",
    "noncentral_chisq_sf",
    "power_kernel",
    "chisq_quantile",
    "minimize",
    "generalized_eigenvalues",
    "invert_spd",
    "symmetrize",
    "finite_difference_jacobian",
]

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-13
SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 10_000
COND_LIMIT = 1e12
SYMMETRY_TOL = 1e-12

# QUADPACK reports roundoff (ier=2) when the requested tolerance sits below machine
# resolution of the integrand; the estimate is kept if its bound is within this factor.
_ROUNDOFF_SLACK = 1e3


@dataclass(frozen=True)
class IntegrationDomain:
    lower: float
    upper: float
    breakpoints: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"Integration domain needs lower < upper, got ({self.lower}, {self.upper})")
        inner = tuple(sorted(b for b in self.breakpoints if self.lower < b < self.upper))
        object.__setattr__(self, "breakpoints", inner)

    @property
    def pieces(self) -> List[Tuple[float, float]]:
        edges = [self.lower, *self.breakpoints, self.upper]
        return list(zip(edges[:-1], edges[1:]))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x > self.lower) & (x < self.upper)


@dataclass(frozen=True)
class NoncentralChisq:
    df: int
    noncentrality: float = 0.0

    def __post_init__(self):
        if int(self.df) != self.df or self.df < 1:
            raise ValueError(f"Degrees of freedom must be a positive integer, got {self.df}")
        if not self.noncentrality >= 0:
            raise ValueError(f"Noncentrality must be nonnegative, got {self.noncentrality}")


@dataclass
class OptimizationResult:
    x: np.ndarray
    fun: float
    nit: int
    n_starts: int = 1
    history: List[float] = field(default_factory=list)


def _check_rel_tol(rel_tol: float) -> None:
    if not 0 < rel_tol <= 1e-3:
        raise ValueError(f"rel_tol must lie in (0, 1e-3], got {rel_tol}")


def integrate(
    f: Callable[[float], float],
    domain: IntegrationDomain,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    limit: int = 500,
) -> float:
    """Integrate a scalar function over the domain with QUADPACK (adaptive Gauss-Kronrod).

    Each piece between breakpoints is integrated separately. Raises NumericalError
    carrying the best estimate and error bound when the budget runs out.
    """
    _check_rel_tol(rel_tol)
    total, bound = 0.0, 0.0
    for lo, hi in domain.pieces:
        out = sp_integrate.quad(f, lo, hi, epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1)
        value, abserr = out[0], out[1]
        # quad appends a warning message only when QUADPACK reports ier > 0
        message = out[3] if len(out) > 3 else None
        total += value
        bound += abserr
        if not np.isfinite(value) or (
            message is not None and abserr > _ROUNDOFF_SLACK * max(rel_tol * abs(value), abs_tol)
        ):
            raise NumericalError(
                f"quadrature did not converge on ({lo}, {hi}): {message}",
                stage="integrate",
                best_estimate=total,
                error_bound=bound,
            )
    return float(total)


def integrate_vector(
    f: Callable[[float], np.ndarray],
    domain: IntegrationDomain,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    limit: int = 2000,
) -> np.ndarray:
    """Integrate an array-valued function entrywise with scipy's quad_vec (GK21)."""
    _check_rel_tol(rel_tol)
    total, bound = None, 0.0
    for lo, hi in domain.pieces:
        value, err, info = sp_integrate.quad_vec(
            f, lo, hi, epsabs=abs_tol, epsrel=rel_tol, norm="max", limit=limit, full_output=True
        )
        value = np.asarray(value, dtype=float)
        total = value if total is None else total + value
        bound += float(err)
        scale = float(np.max(np.abs(value))) if value.size else 0.0
        if not np.all(np.isfinite(value)) or (
            not info.success and err > _ROUNDOFF_SLACK * max(rel_tol * scale, abs_tol)
        ):
            raise NumericalError(
                f"vector quadrature did not converge on ({lo}, {hi}), status={info.status}",
                stage="integrate",
                best_estimate=total,
                error_bound=bound,
            )
    return total


@lru_cache(maxsize=32)
def _hermite_nodes(n_nodes: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    z, w = hermegauss(n_nodes)
    w = w / np.sqrt(2.0 * np.pi)
    nodes = np.array(list(product(z, repeat=dim)), dtype=float)
    weights = np.array([np.prod(c) for c in product(w, repeat=dim)], dtype=float)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite_rule(n_nodes: int, dim: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite rule for E[h(Z)], Z ~ N(0, I_dim).

    Returns nodes of shape (n_nodes**dim, dim) and probability weights summing to one.
    Exact for polynomials of degree <= 2*n_nodes - 1 in each coordinate.
    """
    if n_nodes < 2:
        raise ValueError(f"Gauss-Hermite needs at least 2 nodes, got {n_nodes}")
    return _hermite_nodes(int(n_nodes), int(dim))


def _poisson_mixture(
    threshold: float,
    df: int,
    lam: float,
    kernel: Callable[[np.ndarray, float], np.ndarray],
    tol: float,
    max_terms: int,
    stage: str,
) -> float:
    """Sum kernel(v) * P(chi2_{df+2v} > threshold) over v = 0, 1, ...

    Stops once a term is below tol and the Poisson(lam) mass seen exceeds 1 - tol.
    """
    total = 0.0
    mass = 0.0
    block = 64
    start = 0
    while start < max_terms:
        vs = np.arange(start, min(start + block, max_terms))
        tails = stats.chi2.sf(threshold, df + 2 * vs)
        terms = kernel(vs, lam) * tails
        masses = mass + np.cumsum(stats.poisson.pmf(vs, lam))
        done = np.nonzero((np.abs(terms) < tol) & (masses > 1.0 - tol))[0]
        if done.size:
            stop = done[0] + 1
            return float(total + np.sum(terms[:stop]))
        total += float(np.sum(terms))
        mass = float(masses[-1])
        start += block
    raise NumericalError(
        f"series did not converge within {max_terms} terms (lambda={lam:.4g})",
        stage=stage,
        best_estimate=total,
    )


def _poisson_pmf(vs: np.ndarray, lam: float) -> np.ndarray:
    return stats.poisson.pmf(vs, lam)


def _poisson_difference(vs: np.ndarray, lam: float) -> np.ndarray:
    # pmf(v-1) - pmf(v), with pmf(-1) = 0
    return stats.poisson.pmf(vs - 1, lam) - stats.poisson.pmf(vs, lam)


def noncentral_chisq_sf(
    x: float,
    dist: NoncentralChisq,
    tol: float = SERIES_TOL,
    max_terms: int = SERIES_MAX_TERMS,
) -> float:
    """P(X > x) for X ~ chi2_df(noncentrality) as the Poisson(delta/2) mixture of central tails."""
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if dist.noncentrality == 0:
        return float(stats.chi2.sf(x, dist.df))
    return _poisson_mixture(
        x, dist.df, dist.noncentrality / 2.0, _poisson_pmf, tol, max_terms, "noncentral_chisq"
    )


def power_kernel(
    s: float,
    df: int,
    alpha: float = 0.05,
    tol: float = SERIES_TOL,
    max_terms: int = SERIES_MAX_TERMS,
) -> float:
    """K*_df(s) = e^{-s/2} sum_v s^{v-1}/(v! 2^v) (2v - s) P(chi2_{df+2v} > chi2_{df,alpha}).

    Regrouped as sum_v (pi_{v-1} - pi_v) P(...), pi the Poisson(s/2) masses, which is
    twice the derivative of the noncentral power in s and stays finite at s = 0.
    """
    if s < 0:
        raise ValueError(f"Noncentrality must be nonnegative, got {s}")
    critical = chisq_quantile(alpha, df)
    return _poisson_mixture(critical, df, s / 2.0, _poisson_difference, tol, max_terms, "power_kernel")


def chisq_quantile(alpha: float, df: int) -> float:
    """Upper-alpha critical value chi2_{df,alpha}."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if int(df) != df or df < 1:
        raise ValueError(f"Degrees of freedom must be a positive integer, got {df}")
    return float(stats.chi2.isf(alpha, df))


def minimize(
    objective: Callable[[np.ndarray], float],
    init: Sequence[float],
    bounds: Optional[Sequence[Tuple[Optional[float], Optional[float]]]] = None,
    starts: Optional[Sequence[Sequence[float]]] = None,
    xatol: float = 1e-9,
    fatol: float = 1e-13,
    max_iter: Optional[int] = None,
    max_restarts: int = 3,
    golden: bool = False,
) -> OptimizationResult:
    """Derivative-free minimization with bounded Nelder-Mead in scaled parameters.

    Every start is polished by restarting the simplex at its own optimum until the
    objective stops improving. The best start wins; ties keep the earliest start.
    For one parameter `golden=True` first brackets with golden-section search.
    """
    init = np.atleast_1d(np.asarray(init, dtype=float))
    dim = init.size
    scale = np.maximum(np.abs(init), 1.0)
    max_iter = max_iter or 4000 * dim

    def scaled(z: np.ndarray) -> float:
        theta = np.asarray(z, dtype=float) * scale
        value = float(objective(theta))
        if np.isnan(value):
            raise NumericalError("objective returned NaN", stage="minimize", best_estimate=theta)
        return value

    scaled_bounds = None
    if bounds is not None:
        scaled_bounds = [
            (None if lo is None else lo / s, None if hi is None else hi / s)
            for (lo, hi), s in zip(bounds, scale)
        ]

    candidates = [init] + [np.atleast_1d(np.asarray(s, dtype=float)) for s in (starts or [])]
    if bounds is not None:
        lows = np.array([-np.inf if lo is None else lo for lo, _ in bounds])
        highs = np.array([np.inf if hi is None else hi for _, hi in bounds])
        candidates = [np.clip(c, lows, highs) for c in candidates]

    best: Optional[OptimizationResult] = None
    for start in candidates:
        z0 = start / scale
        if golden and dim == 1:
            z0 = _golden_bracket(scaled, float(z0[0]), scaled_bounds, xatol)
        outcome = _nelder_mead(scaled, z0, scaled_bounds, xatol, fatol, max_iter, max_restarts)
        if best is None or outcome.fun < best.fun:
            best = outcome
    best.x = best.x * scale
    best.n_starts = len(candidates)
    logger.debug(f"✅ minimize: f*={best.fun:.12g} after {best.nit} iterations from {len(candidates)} start(s)")
    return best


def _golden_bracket(fun, z0: float, bounds, xatol: float) -> np.ndarray:
    lo, hi = (None, None) if bounds is None else bounds[0]
    if lo is not None and hi is not None:
        res = sp_optimize.minimize_scalar(
            lambda z: fun(np.array([z])), bounds=(lo, hi), method="bounded", options={"xatol": xatol}
        )
    else:
        step = max(abs(z0), 1.0) * 0.1
        res = sp_optimize.minimize_scalar(
            lambda z: fun(np.array([z])), bracket=(z0 - step, z0 + step), method="golden", tol=xatol
        )
    return np.array([res.x])


def _nelder_mead(fun, z0, bounds, xatol, fatol, max_iter, max_restarts) -> OptimizationResult:
    options = {"xatol": xatol, "fatol": fatol, "maxiter": max_iter, "maxfev": 2 * max_iter,
               "adaptive": len(z0) > 2}
    res = sp_optimize.minimize(fun, z0, method="Nelder-Mead", bounds=bounds, options=options)
    nit, history = res.nit, [float(res.fun)]
    for _ in range(max_restarts):
        again = sp_optimize.minimize(fun, res.x, method="Nelder-Mead", bounds=bounds, options=options)
        nit += again.nit
        improved = res.fun - again.fun
        if again.fun <= res.fun:
            res = again
        history.append(float(res.fun))
        if improved <= fatol:
            break
    if res.status == 1:
        raise NumericalError(
            "iteration budget exceeded", stage="minimize", best_estimate=np.asarray(res.x)
        )
    return OptimizationResult(x=np.asarray(res.x, dtype=float), fun=float(res.fun), nit=int(nit), history=history)


def symmetrize(m: np.ndarray, tol: float = SYMMETRY_TOL, role: str = "matrix") -> np.ndarray:
    """Return (m + m^T)/2 after checking m is symmetric to a loose relative tolerance."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{role} must be square, got shape {m.shape}")
    scale = max(float(np.max(np.abs(m))), 1.0)
    asym = float(np.max(np.abs(m - m.T))) / scale
    if asym > 1e-6:
        raise ValueError(f"{role} is not symmetric (relative asymmetry {asym:.3e})")
    if asym > tol:
        logger.debug(f"⚠️ {role} symmetrized (relative asymmetry {asym:.3e})")
    return 0.5 * (m + m.T)


def generalized_eigenvalues(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Eigenvalues of b^{-1} a for symmetric a and symmetric positive-definite b, descending.

    The pencil is reduced with the Cholesky factor of b to the symmetric standard
    problem L^{-1} a L^{-T}.
    """
    a = symmetrize(a, role="a")
    b = symmetrize(b, role="b")
    if a.shape != b.shape:
        raise ValueError(f"Pencil dimensions differ: {a.shape} vs {b.shape}")
    try:
        chol = sp_linalg.cholesky(b, lower=True)
    except sp_linalg.LinAlgError as exc:
        raise NumericalError("b is not positive-definite", stage="eigen", error_detail=str(exc)) from exc
    left = sp_linalg.solve_triangular(chol, a, lower=True)
    reduced = sp_linalg.solve_triangular(chol, left.T, lower=True)
    eigvals = sp_linalg.eigh(0.5 * (reduced + reduced.T), eigvals_only=True)
    return np.sort(eigvals)[::-1]


def invert_spd(m: np.ndarray, role: str = "matrix", cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix through its Cholesky factor."""
    m = symmetrize(m, role=role)
    cond = float(np.linalg.cond(m))
    if not np.isfinite(cond) or cond >= cond_limit:
        raise NumericalError(f"{role} is ill-conditioned (cond={cond:.3e})", stage="invert")
    try:
        factor = sp_linalg.cho_factor(m, lower=True)
    except sp_linalg.LinAlgError as exc:
        raise NumericalError(f"{role} is not positive-definite", stage="invert", error_detail=str(exc)) from exc
    inverse = sp_linalg.cho_solve(factor, np.eye(m.shape[0]))
    return 0.5 * (inverse + inverse.T)


def finite_difference_jacobian(
    fn: Callable[[np.ndarray], np.ndarray],
    x: Sequence[float],
    step: float = 1e-5,
    points: int = 5,
) -> np.ndarray:
    """Central-difference Jacobian d fn / d x, shape fn(x).shape + (len(x),).

    Steps are scaled by max(|x_j|, 1). Uses the 3- or 5-point stencil.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if points not in (3, 5):
        raise ValueError("points must be 3 or 5")
    columns = []
    for j in range(x.size):
        h = step * max(abs(x[j]), 1.0)
        e = np.zeros_like(x)
        e[j] = h
        if points == 3:
            d = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h)
        else:
            d = (
                -np.asarray(fn(x + 2 * e)) + 8 * np.asarray(fn(x + e))
                - 8 * np.asarray(fn(x - e)) + np.asarray(fn(x - 2 * e))
            ) / (12 * h)
        columns.append(np.asarray(d, dtype=float))
    return np.stack(columns, axis=-1)
