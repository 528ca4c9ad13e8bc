import numpy as np
import pytest

from src.components.dpd_core import DpdObjectiveSpec, estimating_equation
from src.components.mdpde import (
    ContaminatedTruth,
    estimator_influence,
    fit,
    matrices_at_model,
    matrices_under_g,
    population_functional,
    sandwich,
)
from src.models import NormalLocationModel
from src.pipeline.exception import ModelError


def test_beta_zero_fit_is_the_maximum_likelihood_estimate(normal, rng):
    data = rng.normal(1.0, 2.0, size=300)
    result = fit(normal, data, beta=0.0)
    assert result.theta_hat[0] == pytest.approx(data.mean(), abs=1e-6)
    assert result.theta_hat[1] == pytest.approx(data.std(), abs=1e-6)
    assert result.n == 300


def test_fit_solves_the_estimating_equation(weibull, rng):
    data = rng.weibull(1.0, size=250)
    result = fit(weibull, data, beta=0.3)
    spec = DpdObjectiveSpec(weibull, 0.3, data)
    assert np.allclose(estimating_equation(spec, result.theta_hat), 0.0, atol=1e-6)
    assert 0.7 < result.theta_hat[0] < 1.3
    assert result.standard_errors.shape == (1,)
    assert result.to_dict()["param_names"] == ["shape"]


def test_positive_beta_resists_outliers(normal_loc, rng):
    data = rng.normal(size=200)
    data[:20] = 15.0
    mle = fit(normal_loc, data, beta=0.0)
    robust = fit(normal_loc, data, beta=0.5)
    assert mle.theta_hat[0] > 1.0
    assert abs(robust.theta_hat[0] - np.mean(data[20:])) < 0.1


def test_sandwich_at_beta_zero_is_inverse_fisher_information():
    model = NormalLocationModel(sigma=2.0)
    mats = matrices_at_model(model, [0.0], 0.0)
    assert sandwich(mats.j, mats.k)[0, 0] == pytest.approx(4.0, rel=1e-8)


def test_sandwich_efficiency_loss_grows_with_beta(normal_loc):
    variances = []
    for beta in (0.0, 0.25, 0.5, 1.0):
        mats = matrices_at_model(normal_loc, [0.0], beta, method="closed-form")
        variances.append(sandwich(mats.j, mats.k)[0, 0])
    assert variances[0] == pytest.approx(1.0)
    assert np.all(np.diff(variances) > 0)
    # (1 + b^2 / (1 + 2b))^{3/2}
    assert variances[2] == pytest.approx((1 + 0.25 / 2) ** 1.5)


def test_estimator_influence_normal_location(normal_loc):
    x = np.array([-2.0, 0.5, 3.0])
    assert np.allclose(estimator_influence(normal_loc, [0.0], 0.0, x)[:, 0], x)
    redescending = estimator_influence(normal_loc, [0.0], 0.5, [0.5, 30.0])[:, 0]
    assert redescending[0] > 0
    assert abs(redescending[1]) < 1e-20


def test_estimator_influence_carries_design_weight(linreg):
    theta0 = [1.0, 0.5, 1.0]
    x = np.array([[2.0, 1.0, 0.3]])
    influence = estimator_influence(linreg, theta0, 0.0, x)
    assert influence.shape == (1, 3)
    gram_inv = np.linalg.inv(linreg.gram / linreg.n)
    residual = 2.0 - (1.0 + 0.5 * 0.3)
    expected = gram_inv @ np.array([1.0, 0.3]) * residual / linreg.n
    assert np.allclose(influence[0, :2], expected, rtol=1e-6)


def test_matrices_under_g_at_zero_epsilon_match_model(normal):
    theta0 = np.array([0.0, 1.0])
    clean = matrices_at_model(normal, theta0, 0.3)
    under_g = matrices_under_g(normal, ContaminatedTruth(theta0, 0.0, [4.0]), 0.3)
    assert np.allclose(under_g.j, clean.j)
    assert np.allclose(under_g.k, clean.k)
    assert np.allclose(under_g.sigma, sandwich(clean.j, clean.k))


def test_contamination_needs_homogeneous_model(linreg):
    with pytest.raises(ModelError):
        matrices_under_g(linreg, ContaminatedTruth([1.0, 0.0, 1.0], 0.1, [0.0, 1.0, 0.0]), 0.2)


def test_contaminated_truth_bounds():
    with pytest.raises(ValueError):
        ContaminatedTruth([0.0], 1.0, [2.0])


def test_population_functional_is_identity_without_contamination(normal_loc, weibull):
    assert population_functional(normal_loc, ContaminatedTruth([0.0], 0.0, [3.0]), 0.3) == pytest.approx([0.0])
    assert population_functional(weibull, ContaminatedTruth([1.0], 0.0, [2.0]), 0.3) == pytest.approx([1.0])


POPULATION_CASES = [
    ("normal_loc", [0.0], point, beta) for beta in (0.25, 0.5) for point in (-2.0, 0.5, 3.0)
] + [
    ("weibull", [1.0], point, beta) for beta in (0.25, 0.5) for point in (0.3, 1.0, 3.0)
]


@pytest.mark.parametrize("model_name, theta0, point, beta", POPULATION_CASES)
def test_population_functional_derivative_is_the_influence_function(request, model_name, theta0, point, beta):
    model = request.getfixturevalue(model_name)
    eps = 1e-4
    shifted = population_functional(model, ContaminatedTruth(theta0, eps, [point]), beta)
    quotient = (shifted[0] - theta0[0]) / eps
    influence = estimator_influence(model, theta0, beta, [point])[0, 0]
    assert quotient == pytest.approx(influence, rel=5e-3, abs=1e-4)


def test_beta_zero_regression_fit_is_least_squares(linreg, design, rng):
    response = design @ np.array([1.0, -0.6]) + rng.normal(0.0, 0.5, size=design.shape[0])
    result = fit(linreg, response, beta=0.0)
    coef, rss = np.linalg.lstsq(design, response, rcond=None)[:2]
    assert np.allclose(result.theta_hat[:-1], coef, atol=1e-6)
    assert result.theta_hat[-1] == pytest.approx(float(rss[0]) / design.shape[0], rel=1e-6)
