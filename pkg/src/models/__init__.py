from src.models.base import ParametricModel
from src.models.bivariate_normal import BivariateNormalModel
from src.models.normal import NormalLocationModel, NormalModel
from src.models.regression import LinearRegressionModel
from src.models.weibull import WeibullShapeModel
from src.models.zoo import MODEL_NAMES, build_model

__all__ = [
    "ParametricModel",
    "NormalLocationModel",
    "NormalModel",
    "WeibullShapeModel",
    "BivariateNormalModel",
    "LinearRegressionModel",
    "MODEL_NAMES",
    "build_model",
]
