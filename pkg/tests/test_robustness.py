import numpy as np
import pytest

from src.components.mdpde import ContaminatedTruth, matrices_at_model
from src.components.robustness import (
    correlation_gross_error_sensitivity,
    correlation_published_if,
    correlation_published_if2,
    correlation_published_pif,
    csif,
    csif_slope,
    csif_slope_fd,
    gross_error_sensitivity,
    if2_composite,
    if2_simple,
    if_estimator,
    influence_report,
    lif,
    normal_location_if_published,
    pif,
    regression_published_if2,
    regression_published_pif,
    weibull_published_if,
    weibull_published_if2,
    weibull_published_pif,
)
from src.components.wald_tests import ContiguousSpec, Restriction, contiguous_power
from src.models import NormalLocationModel
from src.models.weibull import eta_closed_form, xi_closed_form
from src.models.zoo import zeta_kappa
from src.pipeline.exception import ModelError

# ---------------------------------------------------------------- first order


def test_if_estimator_shapes(normal, bivnormal, bivnormal_null):
    assert if_estimator(normal, [0.0, 1.0], 0.2, 1.5).shape == (2,)
    assert if_estimator(normal, [0.0, 1.0], 0.2, [0.5, 1.5, 2.5]).shape == (3, 2)
    assert if_estimator(bivnormal, bivnormal_null, 0.2, [0.5, -1.0]).shape == (5,)


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
def test_normal_location_published_if_is_rescaled_exact_if(beta):
    sigma = 1.7
    model = NormalLocationModel(sigma=sigma)
    x = np.array([-3.0, -0.4, 0.0, 2.2])
    exact = if_estimator(model, [0.5], beta, x)[:, 0]
    scale = (1 + beta) ** 1.5 * (2 * np.pi) ** (beta / 2) * sigma ** (beta + 2)
    assert np.allclose(exact, scale * normal_location_if_published(0.5, sigma, beta, x), rtol=1e-8)


@pytest.mark.parametrize("beta", [0.0, 0.2, 1.0])
def test_weibull_published_if_omits_xi(weibull, beta):
    x = np.array([0.1, 0.8, 2.0, 6.0])
    exact = if_estimator(weibull, [1.0], beta, x)[:, 0]
    published = weibull_published_if(beta, x)
    assert np.allclose(exact, published - xi_closed_form(beta) / eta_closed_form(beta), rtol=1e-7, atol=1e-10)


def test_correlation_published_if_matches_exact_at_beta_zero(bivnormal):
    theta0 = [0.5, -0.3, 1.4, 0.6, 0.0]
    x = np.array([[1.0, 0.2], [-2.0, -1.1], [0.3, 0.9]])
    exact = if_estimator(bivnormal, theta0, 0.0, x)
    published = correlation_published_if(theta0, 0.0, x)
    for i in (0, 1, 4):
        assert np.allclose(exact[:, i], published[:, i], rtol=1e-7)


def test_lif_is_zero(normal):
    assert lif(normal, [0.0, 1.0], 0.3, 2.0) == 0.0
    assert np.all(lif(normal, [0.0, 1.0], 0.3, [1.0, 5.0]) == 0.0)


# --------------------------------------------------------------- second order


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.7])
def test_if2_general_and_shortcut_paths_agree(normal, beta):
    x = np.array([-2.0, 0.1, 3.3])
    general = if2_simple(normal, [0.2, 1.1], beta, x)
    shortcut = if2_simple(normal, [0.2, 1.1], beta, x, path="shortcut")
    assert np.allclose(general, shortcut, rtol=1e-8)


def test_if2_unknown_path(normal):
    with pytest.raises(ModelError):
        if2_simple(normal, [0.0, 1.0], 0.1, 1.0, path="taylor")


def test_identity_composite_if2_equals_simple(normal):
    theta0 = [0.0, 1.0]
    x = np.array([0.5, 2.5])
    composite = if2_composite(normal, theta0, 0.3, Restriction.identity(theta0), x)
    assert np.allclose(composite, if2_simple(normal, theta0, 0.3, x))


def test_weibull_published_if2_matches_exact_at_beta_zero(weibull):
    x = np.array([0.3, 1.0, 4.0])
    assert np.allclose(if2_simple(weibull, [1.0], 0.0, x), weibull_published_if2(0.0, x), rtol=1e-7)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
def test_correlation_published_if2_is_consistent_with_its_if(beta, bivnormal_null):
    x = np.array([[0.4, -1.2], [2.0, 1.5]])
    zeta, _, _ = zeta_kappa(beta)
    rho_if = correlation_published_if(bivnormal_null, beta, x)[:, 4]
    assert np.allclose(correlation_published_if2(bivnormal_null, beta, x), 2 * rho_if**2 / zeta**2.5)


@pytest.mark.parametrize("beta", [0.0, 0.3])
def test_regression_published_if2_is_n_times_direction_influence(linreg, beta):
    theta0 = np.array([1.0, 0.5, 1.5])
    l_matrix = np.array([[0.0], [1.0]])
    restriction = Restriction.regression_linear(2, l_matrix)
    direction = 3
    t = np.array([-1.0, 0.5, 2.0])
    points = np.column_stack([t, np.repeat(linreg.design[[direction]], len(t), axis=0)])
    generic = if2_composite(linreg, theta0, beta, restriction, points)
    published = regression_published_if2(linreg, theta0, beta, l_matrix, t, direction=direction)
    assert np.allclose(published, linreg.n * generic, rtol=1e-6)


def test_regression_all_directions_needs_full_response(linreg):
    with pytest.raises(ValueError):
        regression_published_if2(linreg, [1.0, 0.5, 1.5], 0.2, [0.0, 1.0], [1.0, 2.0])
    total = regression_published_if2(linreg, [1.0, 0.5, 1.5], 0.2, [0.0, 1.0], np.zeros(linreg.n))
    assert np.ndim(total) == 0 and total > 0


# ------------------------------------------------------------------- power


def test_pif_is_derivative_of_contaminated_power(normal_loc):
    beta, d, x, h = 0.3, 1.5, 1.2, 1e-4
    base = contiguous_power(normal_loc, [0.0], beta, ContiguousSpec(d=[d]))

    def forward(step):
        shifted = contiguous_power(normal_loc, [0.0], beta, ContiguousSpec(d=[d], epsilon=step, x=[x]))
        return (shifted - base) / step

    derivative = 2 * forward(h / 2) - forward(h)
    assert pif(normal_loc, [0.0], beta, x, d=[d]) == pytest.approx(derivative, rel=1e-5)


def test_pif_vanishes_without_shift(normal, bivnormal, bivnormal_null):
    assert np.all(pif(normal, [0.0, 1.0], 0.2, [1.0, 3.0], d=[0.0, 0.0]) == 0.0)
    restriction = Restriction.correlation()
    assert pif(bivnormal, bivnormal_null, 0.2, [1.0, 1.0], delta=[0.0], restriction=restriction) == 0.0
    assert np.all(weibull_published_pif(0.3, [1.0, 2.0], 0.0) == 0.0)
    assert np.all(correlation_published_pif(bivnormal_null, 0.3, [[1.0, 1.0]], 0.0) == 0.0)


def test_pif_argument_checks(normal, bivnormal, bivnormal_null):
    with pytest.raises(ValueError):
        pif(normal, [0.0, 1.0], 0.2, 1.0)
    with pytest.raises(ValueError):
        pif(bivnormal, bivnormal_null, 0.2, [1.0, 1.0], restriction=Restriction.correlation())


def test_weibull_published_pif_matches_exact_at_beta_zero(weibull):
    x = np.array([0.4, 1.7, 3.0])
    exact = pif(weibull, [1.0], 0.0, x, d=[2.0])
    assert np.allclose(exact, weibull_published_pif(0.0, x, 2.0), rtol=1e-7)


def test_correlation_published_pif_matches_exact_at_beta_zero(bivnormal, bivnormal_null):
    x = np.array([[0.8, -0.5], [1.5, 2.0]])
    exact = pif(bivnormal, bivnormal_null, 0.0, x, d=[0, 0, 0, 0, 3.0], restriction=Restriction.correlation())
    assert np.allclose(exact, correlation_published_pif(bivnormal_null, 0.0, x, 3.0), rtol=1e-7)


@pytest.mark.parametrize("beta", [0.0, 0.3])
def test_regression_published_pif_is_n_times_direction_influence(linreg, beta):
    theta0 = np.array([1.0, 0.5, 1.5])
    l_matrix = np.array([[0.0], [1.0]])
    restriction = Restriction.regression_linear(2, l_matrix)
    direction = 7
    t = np.array([0.0, 1.5, 4.0])
    points = np.column_stack([t, np.repeat(linreg.design[[direction]], len(t), axis=0)])
    generic = pif(linreg, theta0, beta, points, delta=[2.0], restriction=restriction)
    published = regression_published_pif(linreg, theta0, beta, l_matrix, [2.0], t, direction=direction)
    assert np.allclose(published, linreg.n * generic, rtol=1e-6)


# --------------------------------------------------------------- grid reports


def test_influence_report_flags_bounded_weibull_if2(weibull):
    points = np.linspace(0.01, 15.0, 400)
    report = influence_report(weibull, [1.0], 1.0, points, tail=points >= 14.25)
    assert report.bounded
    assert report.quantity == "IF2"
    assert gross_error_sensitivity(report) == pytest.approx(report.sup)
    assert report.to_rows()[0].keys() == {"x1", "IF2"}


def test_influence_report_at_beta_zero_is_unbounded(normal_loc):
    points = np.linspace(-10.0, 10.0, 401)
    report = influence_report(normal_loc, [0.0], 0.0, points, tail=np.abs(points) >= 9.5, quantity="IF")
    assert not report.bounded
    assert report.sup == pytest.approx(10.0)
    assert gross_error_sensitivity(report) == float("inf")


def test_influence_report_bounded_for_positive_beta(normal_loc):
    points = np.linspace(-10.0, 10.0, 401)
    report = influence_report(normal_loc, [0.0], 0.5, points, tail=np.abs(points) >= 9.5)
    assert report.bounded
    assert abs(report.argsup[0]) == pytest.approx(np.sqrt(2.0), abs=0.05)


def test_influence_report_unknown_quantity(normal_loc):
    with pytest.raises(ModelError):
        influence_report(normal_loc, [0.0], 0.5, [0.0, 1.0], tail=[False, True], quantity="LIF2")


def test_correlation_gross_error_sensitivity_decreases():
    values = [correlation_gross_error_sensitivity(b) for b in (0.1, 0.3, 0.5, 1.0)]
    assert np.all(np.diff(values) < 0)
    assert values[-1] == pytest.approx(2 * 3**2.5 / 4 * np.exp(-1.0))
    assert correlation_gross_error_sensitivity(0.0) == float("inf")
    assert correlation_gross_error_sensitivity(0.5, n=50) == pytest.approx(50 * correlation_gross_error_sensitivity(0.5))


# -------------------------------------------------------------------- CSIF


def test_csif_is_one_without_contamination(normal):
    report = csif(normal, [0.0, 1.0], 0.3, ContaminatedTruth([0.0, 1.0], 0.0, [3.0]))
    assert np.allclose(report.eigenvalues, 1.0)
    assert report.mean == pytest.approx(1.0)
    assert report.q == 2


def test_csif_mean_matches_trace(normal):
    report = csif(normal, [0.0, 1.0], 0.3, ContaminatedTruth([0.0, 1.0], 0.05, [4.0]))
    assert report.mean == pytest.approx(report.trace_mean, rel=1e-10)
    assert report.eigenvalues[0] >= report.eigenvalues[-1]


@pytest.mark.parametrize("beta,point", [(0.0, [2.0]), (0.3, [2.0]), (0.5, [-3.5])])
def test_csif_slope_matches_finite_difference_simple(normal, beta, point):
    analytic = csif_slope(normal, [0.0, 1.0], beta, point)
    numeric = csif_slope_fd(normal, [0.0, 1.0], beta, point)
    assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-6)


def test_csif_slope_matches_finite_difference_composite(bivnormal, bivnormal_null):
    restriction = Restriction.correlation()
    analytic = csif_slope(bivnormal, bivnormal_null, 0.2, [1.5, -0.7], restriction)
    numeric = csif_slope_fd(bivnormal, bivnormal_null, 0.2, [1.5, -0.7], restriction)
    assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-6)


def test_csif_report_carries_fd_residual(weibull):
    report = csif(weibull, [1.0], 0.4, ContaminatedTruth([1.0], 0.02, [3.0]), with_fd=True)
    payload = report.to_dict()
    assert payload["slope_residual"] == pytest.approx(0.0, abs=1e-5)
    assert {"eigenvalues", "mean", "trace_mean", "slope", "tau_at_point"} <= payload.keys()


def test_csif_needs_homogeneous_model(linreg):
    theta0 = [1.0, 0.5, 1.0]
    with pytest.raises(ModelError):
        csif(linreg, theta0, 0.2, ContaminatedTruth(theta0, 0.1, [0.0, 1.0, 0.0]))
    with pytest.raises(ModelError):
        csif_slope(linreg, theta0, 0.2, [0.0, 1.0, 0.0])


def test_if2_accepts_precomputed_matrices(normal):
    mats = matrices_at_model(normal, [0.0, 1.0], 0.3)
    x = np.array([0.5, 1.5])
    assert np.allclose(if2_simple(normal, [0.0, 1.0], 0.3, x, mats=mats), if2_simple(normal, [0.0, 1.0], 0.3, x))
