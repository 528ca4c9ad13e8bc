from typing import Any, Optional, Sequence

from .logger import get_logger

logger = get_logger(__name__)


class RobustWaldError(Exception):
    """Base exception for the estimation and testing pipeline."""

    exit_code = 3

    def __init__(self, error_message: str, error_detail: Any = None):
        super().__init__(error_message)
        self.error_message = error_message
        self.error_detail = error_detail

        if error_detail is not None:
            logger.error(f"❌ {error_message}: {error_detail}")


class DataValidationError(RobustWaldError):
    """Input data is malformed, incomplete or outside the model support."""

    exit_code = 2

    def __init__(self, error_message: str, row: Optional[int] = None, error_detail: Any = None):
        if row is not None:
            error_message = f"{error_message} (row {row})"
        super().__init__(error_message, error_detail)
        self.row = row


class NumericalError(RobustWaldError):
    """A numerical stage failed: quadrature, optimization, linear algebra or a series."""

    exit_code = 3

    def __init__(
        self,
        error_message: str,
        stage: str = "numerics",
        best_estimate: Optional[Any] = None,
        error_bound: Optional[float] = None,
        error_detail: Any = None,
    ):
        message = f"[{stage}] {error_message}"
        if best_estimate is not None:
            message += f"; best estimate {best_estimate}"
        if error_bound is not None:
            message += f"; error bound {error_bound:.3g}"
        super().__init__(message, error_detail if error_detail is not None else best_estimate)
        self.stage = stage
        self.best_estimate = best_estimate
        self.error_bound = error_bound


class ModelError(NumericalError):
    """The requested computation is not defined for the chosen model or null."""

    def __init__(self, error_message: str, stage: str = "model", supported: Sequence[str] = ()):
        if supported:
            error_message = f"{error_message}; supported: {', '.join(supported)}"
        super().__init__(error_message, stage=stage)
