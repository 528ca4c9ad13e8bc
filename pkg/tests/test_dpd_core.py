import numpy as np
import pytest
from scipy import stats

from src.components.dpd_core import DpdObjectiveSpec, dpd_divergence, estimating_equation, mdpde_objective
from src.components.numerics import IntegrationDomain, finite_difference_jacobian

REAL_LINE = IntegrationDomain(-np.inf, np.inf)


def _normal(mu, sigma=1.0):
    return lambda x: float(stats.norm.pdf(x, mu, sigma))


@pytest.mark.parametrize("beta", [0.0, 0.25, 1.0])
def test_divergence_vanishes_between_equal_densities(beta):
    assert dpd_divergence(_normal(0.3), _normal(0.3), beta, REAL_LINE) == pytest.approx(0.0, abs=1e-10)


def test_divergence_at_zero_is_kullback_leibler():
    assert dpd_divergence(_normal(1.0), _normal(0.0), 0.0, REAL_LINE) == pytest.approx(0.5, rel=1e-8)


def test_divergence_is_continuous_in_beta():
    kl = dpd_divergence(_normal(1.0), _normal(0.0), 0.0, REAL_LINE)
    near = dpd_divergence(_normal(1.0), _normal(0.0), 1e-5, REAL_LINE)
    assert near == pytest.approx(kl, rel=1e-3)


def test_divergence_rejects_negative_beta():
    with pytest.raises(ValueError):
        dpd_divergence(_normal(0.0), _normal(0.0), -0.1, REAL_LINE)


def test_objective_at_zero_is_negative_mean_log_likelihood(normal, rng):
    data = rng.normal(0.5, 2.0, size=50)
    spec = DpdObjectiveSpec(normal, 0.0, data)
    expected = -np.mean(stats.norm.logpdf(data, 0.2, 1.7))
    assert mdpde_objective(spec, [0.2, 1.7]) == pytest.approx(expected)


def test_objective_closed_form_for_normal_location(normal_loc, rng):
    data = rng.normal(size=40)
    beta = 0.4
    spec = DpdObjectiveSpec(normal_loc, beta, data)
    first = (2 * np.pi) ** (-beta / 2) / np.sqrt(1 + beta)
    second = (1 + 1 / beta) * np.mean(stats.norm.pdf(data, 0.1) ** beta)
    assert mdpde_objective(spec, [0.1]) == pytest.approx(first - second)


@pytest.mark.parametrize("beta", [0.2, 0.5])
def test_estimating_equation_is_scaled_negative_gradient(normal, rng, beta):
    data = rng.normal(0.0, 1.5, size=60)
    spec = DpdObjectiveSpec(normal, beta, data)
    theta = np.array([0.1, 1.3])
    grad = finite_difference_jacobian(lambda t: np.array([mdpde_objective(spec, t)]), theta)[0]
    assert np.allclose(estimating_equation(spec, theta), -grad / (1 + beta), atol=1e-7)


def test_estimating_equation_at_zero_is_mean_score(normal_loc):
    spec = DpdObjectiveSpec(normal_loc, 0.0, [1.0, 2.0, 4.0])
    assert estimating_equation(spec, [1.0]) == pytest.approx([4.0 / 3.0])


def test_spec_validates_inputs(normal_loc, weibull):
    with pytest.raises(ValueError):
        DpdObjectiveSpec(normal_loc, -0.5, [0.0, 1.0])
    spec = DpdObjectiveSpec(weibull, 0.1, [0.5, 1.5, 2.0])
    assert spec.n == 3
    assert spec.data.shape == (3, 1)
