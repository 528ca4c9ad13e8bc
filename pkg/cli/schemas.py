from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from src.models.zoo import MODEL_NAMES

ModelName = Literal[MODEL_NAMES]
NullName = Literal["simple", "correlation", "linear", "significance"]
Command = Literal["fit", "test", "power-table", "influence", "csif"]


class RunConfig(BaseModel):
    """Validated, fully resolved configuration of one CLI invocation."""

    command: Command
    model: ModelName
    betas: List[float] = Field(..., min_length=1)
    alpha: float = Field(0.05, gt=0, lt=1)
    method: Literal["quadrature", "closed-form"] = "quadrature"
    data: Optional[str] = None
    design: Optional[str] = None
    sigma_known: Optional[float] = Field(None, gt=0)
    null: NullName = "simple"
    theta0: Optional[List[float]] = None
    l_coef: Optional[List[List[float]]] = None
    l0: Optional[List[float]] = None
    d_grid: Optional[List[float]] = None
    d: Optional[float] = None
    flavour: Literal["published", "exact"] = "published"
    epsilon: float = Field(0.0, ge=0, lt=1)
    point: Optional[List[float]] = None
    direction: int = Field(0, ge=0)
    grid_size: Optional[int] = Field(None, ge=3)
    simulate: Optional[int] = Field(None, ge=10)
    seed: Optional[int] = None
    output: Optional[str] = None
    format: Literal["csv", "json"] = "json"
    round: Optional[int] = Field(None, ge=0)

    @field_validator("betas")
    @classmethod
    def _nonnegative(cls, betas: List[float]) -> List[float]:
        bad = [b for b in betas if b < 0]
        if bad:
            raise ValueError(f"beta values must be nonnegative, got {bad}")
        return betas

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.model == "linreg" and self.design is None:
            raise ValueError("linreg needs --design")
        if self.null == "correlation" and self.model != "bivnormal":
            raise ValueError("the correlation null applies to bivnormal only")
        if self.null in ("linear", "significance") and self.model != "linreg":
            raise ValueError(f"the {self.null} null applies to linreg only")
        if self.null == "linear" and self.l_coef is None:
            raise ValueError("the linear null needs --l-coef")
        if self.command == "fit" and self.data is None:
            raise ValueError("fit needs --data")
        if self.command == "test" and (self.data is None) == (self.simulate is None):
            raise ValueError("test needs exactly one of --data or --simulate")
        if self.simulate is not None and self.model != "bivnormal":
            raise ValueError("--simulate generates bivariate normal data only")
        if self.command == "csif" and self.point is None:
            raise ValueError("csif needs a contamination --point")
        if self.simulate is not None and self.seed is None:
            raise ValueError("--simulate needs an explicit --seed")
        return self


class FitEntry(BaseModel):
    beta: float = Field(..., ge=0)
    param_names: List[str]
    theta_hat: List[float]
    standard_errors: List[float]
    sigma: List[List[float]]
    objective_value: float
    n: int = Field(..., ge=1)
    polished: bool


class FitReport(BaseModel):
    tool_version: str
    config: RunConfig
    fits: List[FitEntry]


class WaldEntry(BaseModel):
    beta: float = Field(..., ge=0)
    null: str
    statistic: float = Field(..., ge=0)
    df: int = Field(..., ge=1)
    p_value: float = Field(..., ge=0, le=1)
    critical_value: float
    alpha: float = Field(..., gt=0, lt=1)
    reject: bool
    theta_hat: List[float]


class TestReport(BaseModel):
    tool_version: str
    config: RunConfig
    results: List[WaldEntry]


class PowerTableReport(BaseModel):
    tool_version: str
    config: RunConfig
    rows: List[Dict[str, float]]


class InfluenceSummary(BaseModel):
    quantity: Literal["IF", "IF2", "PIF"]
    beta: float = Field(..., ge=0)
    null: str
    sup: float = Field(..., ge=0)
    argsup: List[float]
    bounded: bool
    gross_error_sensitivity: Optional[float] = None


class InfluenceCurveReport(BaseModel):
    tool_version: str
    config: RunConfig
    summaries: List[InfluenceSummary]
    rows: List[Dict[str, float]]


class CsifEntry(BaseModel):
    beta: float = Field(..., ge=0)
    eigenvalues: List[float]
    mean: float
    trace_mean: float
    slope: float
    slope_fd: Optional[float] = None
    slope_residual: Optional[float] = Field(None, ge=0)
    tau_at_point: float
    epsilon: float = Field(..., ge=0, lt=1)
    point: List[float]
    q: int = Field(..., ge=1)


class CsifReportModel(BaseModel):
    tool_version: str
    config: RunConfig
    results: List[CsifEntry]
