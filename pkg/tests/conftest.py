import numpy as np
import pytest

from src.models import BivariateNormalModel, LinearRegressionModel, NormalLocationModel, NormalModel, WeibullShapeModel


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def normal_loc():
    return NormalLocationModel(sigma=1.0)


@pytest.fixture
def normal():
    return NormalModel()


@pytest.fixture
def weibull():
    return WeibullShapeModel()


@pytest.fixture
def bivnormal():
    return BivariateNormalModel()


@pytest.fixture
def design():
    t = np.linspace(-1.5, 1.5, 12)
    return np.column_stack([np.ones_like(t), t])


@pytest.fixture
def linreg(design):
    return LinearRegressionModel(design)


@pytest.fixture
def bivnormal_null():
    return np.array([0.0, 0.0, 1.0, 1.0, 0.0])
