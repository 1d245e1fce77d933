"""
API Models - Pydantic schemas for request/response validation
"""

from enum import Enum
from typing import Annotated, Any, Dict, List, Optional

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, model_validator

from app.config import config


class IntervalMethod(str, Enum):
    """Interval estimators exposed over HTTP"""
    T = "t"
    BOOTSTRAP = "bootstrap"
    BERNSTEIN = "bernstein"
    TOLERANCE = "tolerance"


def _check_size(values: List[float]) -> List[float]:
    if len(values) > config.MAX_SAMPLES_PER_REQUEST:
        raise ValueError(f"at most {config.MAX_SAMPLES_PER_REQUEST} samples per request")
    return values


SampleList = Annotated[List[float], AfterValidator(_check_size)]


# ========== Stats Models ==========

class IntervalRequest(BaseModel):
    """Request model for interval estimation"""

    samples: SampleList = Field(..., min_length=1, description="Per-run performance values M_1..M_n")
    method: IntervalMethod = Field(IntervalMethod.T, description="Interval estimator")
    alpha: float = Field(0.05, gt=0.0, lt=1.0, description="Error rate (confidence 1 - alpha)")
    beta: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Tolerance content (tolerance only)")
    value_range: Optional[List[float]] = Field(None, min_length=2, max_length=2,
                                               description="[low, high] bound for bernstein")
    resamples: int = Field(config.BOOTSTRAP_RESAMPLES, ge=100, description="Bootstrap resamples")
    seed: int = Field(0, ge=0, description="Seed for bootstrap resampling")

    model_config = ConfigDict(json_schema_extra={
        "example": {"samples": [0.81, 0.84, 0.79, 0.86, 0.83], "method": "t", "alpha": 0.05}
    })


class IntervalResponse(BaseModel):
    """Response model for an interval"""

    lower: float
    upper: float
    kind: str = Field(..., description="confidence or tolerance")
    method: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    n_samples: int
    center: Optional[float] = None


class SamplesRequest(BaseModel):
    """Plain sample set"""

    samples: SampleList = Field(..., min_length=1)


class IqmResponse(BaseModel):
    iqm: float
    mean: float
    n_samples: int


class DistributionResponse(BaseModel):
    bin_edges: List[float]
    masses: List[float]
    grid: List[float]
    density: List[float]
    modes: List[float]
    multimodal: bool


# ========== Compare Models ==========

class PairedRequest(BaseModel):
    """Two per-run sample sets; paired requires matched seeds (same lengths)"""

    samples_a: SampleList = Field(..., min_length=2)
    samples_b: SampleList = Field(..., min_length=2)
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    paired: bool = Field(True, description="Paired t (repeated measures) or Welch")
    k_comparisons: int = Field(1, ge=1, description="Bonferroni correction factor")


class CompareResponse(BaseModel):
    interval: IntervalResponse
    effect_size: float
    significant: bool
    effective_alpha: float


# ========== Hyperparameter Models ==========

class PerConfigRequest(BaseModel):
    """Per-configuration performance samples, in sweep order"""

    configs: List[List[float]] = Field(..., min_length=1)
    values: Optional[List[Any]] = Field(None, description="Hyperparameter value per config")
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    resamples: int = Field(config.BOOTSTRAP_RESAMPLES, ge=100)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_values(self):
        if self.values is not None and len(self.values) != len(self.configs):
            raise ValueError("values and configs must have equal lengths")
        if sum(len(c) for c in self.configs) > config.MAX_SAMPLES_PER_REQUEST:
            raise ValueError(f"at most {config.MAX_SAMPLES_PER_REQUEST} samples per request")
        return self


class MaxEstimateResponse(BaseModel):
    mean: float
    interval: IntervalResponse
    winner_counts: List[int]


class SensitivityRow(BaseModel):
    value: Any
    mean: float
    lower: float
    upper: float
    n: int
    best: bool


class SensitivityResponse(BaseModel):
    rows: List[SensitivityRow]
    best_index: int
    boundary_flag: bool


class FairSetRequest(BaseModel):
    config_counts: Dict[str, int] = Field(..., min_length=1)


class FairSetResponse(BaseModel):
    ok: bool
    reference_count: int
    violators: List[str]


class OverreportRequest(BaseModel):
    H: int = Field(36, ge=1, le=1000)
    N: int = Field(10, ge=1, le=1000)
    trials: int = Field(1000, ge=100, le=100_000)
    seed: int = Field(0, ge=0)


class OverreportResponse(BaseModel):
    fraction: float
    closed_form: float


# ========== Record Models ==========

class RecordSummary(BaseModel):
    key: str
    fingerprint: str
    env: str
    algorithm: str
    runs: int
    step_budget: int
    mean_return_rate: float
