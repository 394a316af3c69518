"""Request/response models for the precoding service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

Algorithm = Literal["proposed", "msm", "zf"]


class InstancePayload(BaseModel):
    """Explicit problem data, as real/imaginary parts of the channel rows."""

    h_re: list[list[float]]
    h_im: list[list[float]]
    symbol_indices: list[int]


class PrecodeRequest(BaseModel):
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    m: int = Field(ge=4)
    l: int = Field(ge=4)
    seed: int = 0
    p_t: float = Field(default=1.0, gt=0.0)
    algorithm: Algorithm = "proposed"
    params: dict[str, float | int | bool] | None = None
    instance: InstancePayload | None = None


class PrecodeResponse(BaseModel):
    algorithm: str
    k: int
    n: int
    m: int
    l: int
    seed: int
    symbol_indices: list[int]
    x: list[float] | None
    t_re: list[float]
    t_im: list[float]
    feasible: bool
    objective: float
    margin: float
    iterations: int
    outer_iterations: int | None
    final_lambda: float | None
    solve_time_ms: float


class SweepRowModel(BaseModel):
    algorithm: str
    k: int
    n: int
    m: int
    l: int
    snr_db: float
    trials: int
    bit_errors: int
    bits: int
    ber: float
    mean_margin: float
    mean_time_ms: float
    seed: int


class SweepSnrRequest(BaseModel):
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    m: int = Field(ge=4)
    l: int = Field(ge=4)
    snr_db: list[float] = Field(min_length=1)
    trials: int = Field(ge=1)
    seed: int = 0
    algorithms: list[Algorithm] = ["proposed", "msm", "zf"]
    p_t: float = Field(default=1.0, gt=0.0)
    params: dict[str, float | int | bool] | None = None
    measure_time: bool = True
    workers: int | None = None


class SweepLRequest(BaseModel):
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    m: int = Field(ge=4)
    l_values: list[int] = Field(min_length=1)
    snr_db: float
    trials: int = Field(ge=1)
    seed: int = 0
    algorithms: list[Algorithm] = ["proposed", "msm", "zf"]
    p_t: float = Field(default=1.0, gt=0.0)
    params: dict[str, float | int | bool] | None = None
    measure_time: bool = True
    workers: int | None = None


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]
    diagnostics: dict[str, int]


class ParamsRequest(BaseModel):
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    m: int = Field(ge=4)
    l: int = Field(ge=4)
    seed: int = 0
    p_t: float = Field(default=1.0, gt=0.0)


class ParamsResponse(BaseModel):
    lambda0: float
    delta: float
    rho: float
    c_scale: float
    c_exponent: float
    tau_scale: float
    tau_exponent: float
    inner_tol: float
    inner_max_iters: int
    outer_max_iters: int
    feasibility_tol: float
    spectral_norm: float
    mean_abs_entry: float
    lambda_threshold: float


class SelftestRequest(BaseModel):
    fast: bool = True
    seed: int = 20240801


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str


class SelftestResponse(BaseModel):
    passed: bool
    checks: list[CheckModel]
