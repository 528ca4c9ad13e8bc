import numpy as np
import pytest

from src.components.data_ingestion import ingest_csv, ingest_design, ingest_observations
from src.pipeline.exception import DataValidationError


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_csv_reads_header_and_values(tmp_path):
    path = _write(tmp_path, "pairs.csv", "x1,x2\n0.5,1.0\n-1.25,2e-3\n")
    dataset = ingest_csv(path, expected_columns=2)
    assert dataset.columns == ["x1", "x2"]
    assert dataset.n == 2
    assert np.allclose(dataset.values, [[0.5, 1.0], [-1.25, 0.002]])


def test_missing_value_reports_row(tmp_path):
    path = _write(tmp_path, "gaps.csv", "x\n1.0\n2.0\nabc\n")
    with pytest.raises(DataValidationError, match="row 2") as info:
        ingest_csv(path)
    assert info.value.row == 2
    assert info.value.exit_code == 2


def test_header_is_mandatory(tmp_path):
    with pytest.raises(DataValidationError, match="no header"):
        ingest_csv(_write(tmp_path, "bare.csv", "1.0\n2.0\n"))


def test_empty_inputs(tmp_path):
    with pytest.raises(DataValidationError):
        ingest_csv(_write(tmp_path, "empty.csv", ""))
    with pytest.raises(DataValidationError, match="no rows"):
        ingest_csv(_write(tmp_path, "header_only.csv", "x\n"))


def test_column_count_checked_against_model(tmp_path, bivnormal):
    path = _write(tmp_path, "single.csv", "x\n0.1\n0.2\n")
    with pytest.raises(DataValidationError, match="needs 2"):
        ingest_observations(path, bivnormal)


def test_observations_respect_support(tmp_path, weibull):
    path = _write(tmp_path, "weibull.csv", "x\n0.4\n0.0\n")
    with pytest.raises(DataValidationError, match="row 1"):
        ingest_observations(path, weibull)


def test_regression_responses_pair_with_design(tmp_path, linreg):
    responses = "y\n" + "\n".join(str(v) for v in np.linspace(0.0, 1.0, linreg.n)) + "\n"
    obs = ingest_observations(_write(tmp_path, "y.csv", responses), linreg)
    assert obs.shape == (linreg.n, 3)
    assert np.allclose(obs[:, 1:], linreg.design)


def test_ingest_design(tmp_path):
    dataset = ingest_design(_write(tmp_path, "design.csv", "intercept,x\n1,0.5\n1,1.5\n1,2.5\n"))
    assert dataset.values.shape == (3, 2)
