import json
from pathlib import Path
from typing import Any, Callable, Iterable, List

import joblib
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .logger import get_logger

logger = get_logger(__name__)

SUPPORTED_SUFFIXES = (".json", ".csv", ".joblib")


def _jsonable(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "model_dump"):
        return obj.model_dump()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def save_report(report, filepath: Path, float_format: str = None) -> Path:
    """
    Save a report to disk by suffix.

    - dict / pydantic model → .json (sorted keys, two-space indent)
    - DataFrame → .csv (no index)
    - anything else → .joblib
    """
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    suffix = filepath.suffix.lower()

    try:
        if suffix == ".json":
            payload = report.model_dump() if hasattr(report, "model_dump") else report
            if isinstance(payload, pd.DataFrame):
                payload = payload.to_dict(orient="records")
            filepath.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
            logger.info(f"✅ Saved JSON report to {filepath}")

        elif suffix == ".csv":
            frame = report if isinstance(report, pd.DataFrame) else pd.DataFrame(report)
            frame.to_csv(filepath, index=False, float_format=float_format, lineterminator="\n")
            logger.info(f"✅ Saved CSV table ({len(frame)} rows) to {filepath}")

        elif suffix == ".joblib":
            joblib.dump(report, filepath)
            logger.info(f"✅ Saved report with joblib to {filepath}")

        else:
            raise ValueError(f"unsupported report suffix {suffix!r}; use one of {SUPPORTED_SUFFIXES}")

    except Exception as e:
        logger.error(f"❌ Failed to save report to {filepath}: {e}")
        raise
    return filepath


def load_report(filepath):
    """Load a report written by save_report: dict for .json, DataFrame for .csv, object for .joblib."""
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"Report file not found: {filepath}")

    suffix = filepath.suffix.lower()
    try:
        if suffix == ".json":
            report = json.loads(filepath.read_text())
        elif suffix == ".csv":
            report = pd.read_csv(filepath)
        elif suffix == ".joblib":
            report = joblib.load(filepath)
        else:
            raise ValueError(f"unsupported report suffix {suffix!r}; use one of {SUPPORTED_SUFFIXES}")
    except Exception as e:
        logger.error(f"❌ Failed to load report from {filepath}: {e}")
        raise
    logger.info(f"✅ Loaded report from {filepath}")
    return report


def parallel_map(fn: Callable, items: Iterable, n_jobs: int = 1) -> List:
    """Ordered map over items; results come back in input order for any n_jobs."""
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return Parallel(n_jobs=n_jobs)(delayed(fn)(item) for item in items)
