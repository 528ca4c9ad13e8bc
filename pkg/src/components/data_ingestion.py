# src/components/data_ingestion.py
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from src.models.base import ParametricModel
from src.pipeline.exception import DataValidationError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)


@dataclass
class Dataset:
    """Rectangular block of real observations read from CSV."""

    columns: List[str]
    values: np.ndarray = field(repr=False)
    source: Optional[str] = None

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def for_model(self, model: ParametricModel) -> np.ndarray:
        """Observations as (n, dim_obs) rows after model validation (support, dimension)."""
        return model.as_observations(self.values)


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise DataValidationError(f"CSV not found: {path}")
    try:
        df = pd.read_csv(path, sep=",", header=0, encoding="utf-8", decimal=".")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataValidationError(f"cannot parse {path}", error_detail=e) from e

    # a header is mandatory: numeric column labels mean the first row was data
    for col in df.columns:
        try:
            float(col)
        except ValueError:
            continue
        raise DataValidationError(f"{path.name} has no header row (column label {col!r} is numeric)")

    if df.empty:
        raise DataValidationError(f"{path.name} has a header but no rows")
    return df


def _as_numeric(df: pd.DataFrame, name: str) -> np.ndarray:
    numeric = df.apply(pd.to_numeric, errors="coerce")
    missing = numeric.isna().any(axis=1).to_numpy()
    if missing.any():
        row = int(np.argmax(missing))
        bad = [c for c in df.columns if pd.isna(numeric.iloc[row][c])]
        raise DataValidationError(f"missing or non-numeric value in {name} column(s) {bad}", row=row)
    return numeric.to_numpy(dtype=float)


def ingest_csv(path, expected_columns: Optional[int] = None) -> Dataset:
    """
    Loads a comma-separated, UTF-8 CSV with a header row.
    Every cell must parse as a real number; the first offending row is reported.
    """
    path = Path(path)
    logger.info(f"📥 Ingesting {path}")
    df = _read_frame(path)

    if expected_columns is not None and df.shape[1] != expected_columns:
        raise DataValidationError(
            f"{path.name} has {df.shape[1]} column(s), the model needs {expected_columns}"
        )

    values = _as_numeric(df, path.name)
    logger.info(f"✅ Loaded {values.shape[0]} rows x {values.shape[1]} columns from {path.name}")
    return Dataset(columns=[str(c) for c in df.columns], values=values, source=str(path))


def ingest_observations(path, model: ParametricModel) -> np.ndarray:
    """CSV rows validated against the model's observation dimension and support."""
    # regression data may be responses only (design comes separately) or full [y, x] rows
    expected = None if not model.homogeneous else model.dim_obs
    dataset = ingest_csv(path, expected_columns=expected)
    return dataset.for_model(model)


def ingest_design(path) -> Dataset:
    """Fixed design matrix for the regression model, one column per covariate."""
    dataset = ingest_csv(path)
    logger.info(f"🔧 Design matrix {dataset.values.shape} with columns {dataset.columns}")
    return dataset
