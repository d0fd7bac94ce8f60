"""Pydantic request/response models for the HTTP service."""

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

DEFAULT_TAUS = [0.5, 0.75, 0.875]
DEFAULT_WARMUPS = [64, 128, 256, 512]


class SynthParamsModel(BaseModel):
    alpha: float = 1.0
    beta: float = 0.5
    noise_sigma: float = Field(0.0, ge=0.0)
    steps: int = Field(1024, ge=1)
    seed: int = 0
    concentration: float = Field(1.0, gt=0.0)


class GenTraceRequest(BaseModel):
    kind: str = "quantiles"  # "quantiles" | "scores"
    params: SynthParamsModel = SynthParamsModel()
    taus: List[float] = DEFAULT_TAUS
    model_name: str = "synthetic"
    dataset: str = "synthetic"


class GenTraceResponse(BaseModel):
    header: dict
    num_steps: int
    trace_b64: str


class FitRequest(BaseModel):
    trace_b64: str
    taus: Optional[List[float]] = None  # default: trace levels or DEFAULT_TAUS
    warmups: List[int] = DEFAULT_WARMUPS
    skip_first: int = Field(0, ge=0)  # drop the first n steps from fit windows


class FitEntry(BaseModel):
    tau: float
    warmup: int
    alpha: float
    beta: float
    r2: float  # fit on warmup window, evaluated over the full series


class FullFitEntry(BaseModel):
    tau: float
    alpha: float
    beta: float
    r2: float  # in-sample over the full series


class FitResponse(BaseModel):
    header: dict
    full_fits: List[FullFitEntry]
    entries: List[FitEntry]
    r2_summary: dict  # median/p5/p25/p75/p95 over the warmup entries


class EngineSpecModel(BaseModel):
    kind: str  # "full" | "topk" | "sift" | "evict"
    tau: float = 0.5
    warmup_steps: int = 64
    k_fraction: float = 0.5
    budget_fraction: float = 0.5
    recent_window_fraction: float = 0.1
    empty_filter_policy: str = "keep_argmax"
    renormalize: bool = False
    threshold_mode: str = "fit"  # "fit" | "oracle"


class CompareRequest(BaseModel):
    trace_b64: Optional[str] = None
    synth: Optional[SynthParamsModel] = None  # used when trace_b64 is absent
    engines: List[EngineSpecModel]
    head_dim: int = Field(64, ge=1)
    bytes_per_element: int = Field(2, ge=1)
    seed: int = 0
    step_range: Optional[Tuple[int, int]] = None


class CompareRow(BaseModel):
    engine: str
    intended_sparsity: float
    realized_sparsity: float
    mean_rel_l2_error: float
    fallback_count: int
    value_bytes_loaded: int
    value_bytes_full: int
    bytes_reduction_fraction: float
    steps: int


class CompareResponse(BaseModel):
    rows: List[CompareRow]
    csv: str


class MaskRequest(BaseModel):
    trace_b64: Optional[str] = None
    synth: Optional[SynthParamsModel] = None
    engine: EngineSpecModel
    head_dim: int = Field(64, ge=1)
    seed: int = 0
    step: Optional[int] = None  # single 1-based step; default all steps


class MaskResponse(BaseModel):
    csv: str
    steps: int
