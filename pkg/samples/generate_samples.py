"""
Seeded sample CSVs for every shipped model, clean and point-contaminated.

    python samples/generate_samples.py
"""

import os

import numpy as np
import pandas as pd

# ---------- CONFIG ----------
OUTPUT_DIR = os.path.join("samples", "data")
os.makedirs(OUTPUT_DIR, exist_ok=True)

N_OBS = 200
CONTAMINATION = 0.05

# Model parameters of the generated data
NORMAL_PARAMS = {"mu": 0.0, "sigma": 1.0, "outlier": 8.0}
WEIBULL_PARAMS = {"shape": 1.0, "outlier": 12.0}
BIVARIATE_PARAMS = {"rho": 0.0, "outlier": (10.0, 10.0)}
REGRESSION_PARAMS = {"coef": (1.0, 2.0), "sigma": 1.0, "outlier": 15.0}

# Random generator (fixed seed for reproducibility)
RNG = np.random.default_rng(42)


def contaminate(values: np.ndarray, outlier, proportion: float = CONTAMINATION) -> np.ndarray:
    """Replace the first round(proportion * n) rows by the outlier."""
    values = values.copy()
    n_bad = int(round(proportion * len(values)))
    values[:n_bad] = outlier
    return values


def normal_sample(n: int = N_OBS) -> np.ndarray:
    return RNG.normal(NORMAL_PARAMS["mu"], NORMAL_PARAMS["sigma"], size=n)


def weibull_sample(n: int = N_OBS) -> np.ndarray:
    # unit-scale Weibull: numpy's generator already fixes the scale at one
    return RNG.weibull(WEIBULL_PARAMS["shape"], size=n)


def bivariate_sample(n: int = N_OBS) -> np.ndarray:
    rho = BIVARIATE_PARAMS["rho"]
    return RNG.multivariate_normal(np.zeros(2), [[1.0, rho], [rho, 1.0]], size=n)


def regression_sample(n: int = N_OBS):
    design = np.column_stack([np.ones(n), RNG.uniform(-2.0, 2.0, size=n)])
    response = design @ np.asarray(REGRESSION_PARAMS["coef"]) + RNG.normal(0.0, REGRESSION_PARAMS["sigma"], size=n)
    return design, response


def write(frame: pd.DataFrame, name: str) -> None:
    path = os.path.join(OUTPUT_DIR, name)
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    print(f"✅ Wrote {len(frame)} rows to {path}")


def main() -> None:
    x = normal_sample()
    write(pd.DataFrame({"x": x}), "normal.csv")
    write(pd.DataFrame({"x": contaminate(x, NORMAL_PARAMS["outlier"])}), "normal_contaminated.csv")

    w = weibull_sample()
    write(pd.DataFrame({"x": w}), "weibull.csv")
    write(pd.DataFrame({"x": contaminate(w, WEIBULL_PARAMS["outlier"])}), "weibull_contaminated.csv")

    b = bivariate_sample()
    write(pd.DataFrame(b, columns=["x1", "x2"]), "bivnormal.csv")
    bad = contaminate(b, np.asarray(BIVARIATE_PARAMS["outlier"]))
    write(pd.DataFrame(bad, columns=["x1", "x2"]), "bivnormal_contaminated.csv")

    design, response = regression_sample()
    write(pd.DataFrame(design, columns=["intercept", "x"]), "design.csv")
    write(pd.DataFrame({"y": response}), "response.csv")
    write(pd.DataFrame({"y": contaminate(response, REGRESSION_PARAMS["outlier"])}), "response_contaminated.csv")


if __name__ == "__main__":
    main()
