from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Central numerical configuration for the CLI."""

    alpha: float = Field(default=0.05, gt=0, lt=1, description="Default nominal level of every test.")
    rel_tol: float = Field(default=1e-10, gt=0, description="Relative tolerance of adaptive quadrature.")
    series_tol: float = Field(default=1e-12, gt=0, description="Truncation tolerance of the Poisson-mixture series.")
    series_max_terms: int = Field(default=10_000, ge=1, description="Hard cap on series terms before failing.")
    cond_limit: float = Field(default=1e12, gt=1, description="Largest accepted condition number of Sigma_beta.")
    n_jobs: int = Field(default=1, description="joblib workers for grid sweeps (-1 = all cores).")
    log_level: str = Field(default="INFO", description="Logging level applied to every package logger.")
    fd_step: float = Field(default=1e-4, gt=0, description="Finite-difference step for the CSIF slope oracle.")

    class Config:
        env_prefix = "ROBUST_WALD_"
        env_file = ".env"
        env_file_encoding = "utf-8"


@lru_cache
def get_settings() -> Settings:
    """Singleton accessor."""
    return Settings()
