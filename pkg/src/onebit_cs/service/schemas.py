"""Pydantic request/response models for the HTTP service."""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class TheoryRequest(BaseModel):
    alpha: float = Field(gt=0)
    rho: float = Field(gt=0, lt=1)


class FixedPointModel(BaseModel):
    m: float
    chi: float
    q_hat: float
    m_hat: float
    q_big_hat: float
    residual: float
    iterations: int
    converged: bool


class TheoryResponse(BaseModel):
    alpha: float
    rho: float
    mse: float
    direction_cosine: float
    fp: float
    fn: float
    at_lhs: float
    stable_rs: bool
    point: FixedPointModel


class TheoryCurvesRequest(BaseModel):
    alphas: List[float]
    rhos: List[float]


class TheoryCurvePoint(BaseModel):
    alpha: float
    rho: float
    converged: bool
    mse: Optional[float] = None
    fp: Optional[float] = None
    fn: Optional[float] = None
    at_lhs: Optional[float] = None
    stable_rs: Optional[bool] = None
    point: Optional[FixedPointModel] = None


class TheoryCurvesResponse(BaseModel):
    points: List[TheoryCurvePoint]


class InstanceRequest(BaseModel):
    n: int = Field(ge=1, default=128)
    alpha: float = Field(gt=0, default=3.0)
    rho: float = Field(gt=0, le=1, default=0.125)
    k_exact: Optional[int] = Field(default=None, ge=1)
    exact_support: bool = True
    seed: int = 0


class InstanceResponse(BaseModel):
    n: int
    m: int
    seed: int
    alpha: float
    x0: List[float]
    phi: List[List[float]]
    y: List[float]


class RecoverRequest(BaseModel):
    phi: List[List[float]]
    y: List[float]
    algorithm: Literal["rfpi", "cisr", "nort", "naive_cavity"] = "cisr"
    x0: Optional[List[float]] = None
    k_prior: Optional[int] = Field(default=None, ge=1)
    init_seed: int = 0
    delta: Optional[float] = None
    lambda0: Optional[float] = None
    lambda_growth: Optional[float] = None
    b_shrink: Optional[float] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None


class MetricsModel(BaseModel):
    mse: float
    direction_cosine: float
    overlap_m: float
    fp: Optional[float]
    fn: Optional[float]
    support_size_est: int


class RecoverResponse(BaseModel):
    algorithm: str
    x_hat: List[float]
    converged: bool
    inner_iterations: int
    outer_iterations: int
    restarts: int
    wall_time_s: float
    metrics: Optional[MetricsModel] = None


class MetricsRequest(BaseModel):
    x0: List[float]
    x_hat: List[float]
    zero_tol: Optional[float] = Field(default=None, gt=0)
