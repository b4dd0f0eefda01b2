"""Pydantic request/response models of the computation service.

Window endpoints a and b may be infinite; since strict JSON has no
Infinity, the wire format accepts the strings "inf" / "-inf" (numbers work
for finite values) and serialises infinite endpoints back to those strings.
"""

from __future__ import annotations

import math
from typing import Annotated, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_serializer

_ENDPOINT_STRINGS = {
    "inf": math.inf,
    "+inf": math.inf,
    "infinity": math.inf,
    "-inf": -math.inf,
    "-infinity": -math.inf,
}


def _parse_endpoint(value):
    if isinstance(value, str):
        key = value.strip().lower()
        if key in _ENDPOINT_STRINGS:
            return _ENDPOINT_STRINGS[key]
        return float(value)
    return value


Endpoint = Annotated[float, BeforeValidator(_parse_endpoint)]


def _encode_endpoint(value: float):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


class WindowModel(BaseModel):
    t_end: float = Field(gt=0)
    a: Endpoint
    b: Endpoint

    @field_serializer("a", "b")
    def _serialize_endpoint(self, value: float):
        return _encode_endpoint(value)


class ObservationModel(WindowModel):
    g: float = Field(ge=0)


class SimulateRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", gt=0)
    sigma: float = Field(gt=0)
    mu: float = 0.0
    u0: float = 0.0
    t_end: float = Field(gt=0)
    dt: float = Field(gt=0)
    seed: int = Field(default=0, ge=0, lt=2**64)


class SimulateResponse(BaseModel):
    times: list[float]
    values: list[float]
    seed: int


class ExpectRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", gt=0)
    sigma: float = Field(gt=0)
    t_end: float = Field(gt=0)
    a: Endpoint
    b: Endpoint
    method: Literal["direct", "split", "mc"] = "direct"
    n_samples: int = Field(default=10_000, ge=2)
    dt: float = Field(default=0.01, gt=0)
    seed: int = Field(default=0, ge=0, lt=2**64)


class ExpectResponse(BaseModel):
    value: float
    method: str
    std_error: Optional[float] = None
    n_samples: Optional[int] = None
    seed: Optional[int] = None


class EstimateRequest(BaseModel):
    observations: list[ObservationModel] = Field(min_length=1)
    tol: float = Field(default=1e-5, gt=0)
    max_iters: int = Field(default=2000, ge=1)
    start: tuple[float, float] = (1.0, 1.0)
    initial_scale: float = Field(default=0.25, gt=0)
    trace: bool = False


class TracePoint(BaseModel):
    lam: float
    sigma: float
    residual: float


class EstimateResponse(BaseModel):
    lambda_star: float
    sigma_star: float
    residual: float
    iterations: int
    converged: bool
    warnings: list[str] = []
    trace: Optional[list[TracePoint]] = None


class GenerateRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", gt=0)
    sigma: float = Field(gt=0)
    windows: list[WindowModel] = Field(min_length=1)
    method: Literal["direct", "monte_carlo"] = "direct"
    n_samples: int = Field(default=10_000, ge=2)
    dt: float = Field(default=0.01, gt=0)
    seed: int = Field(default=0, ge=0, lt=2**64)


class GenerateResponse(BaseModel):
    entries: list[ObservationModel]
    method: str
    seed: Optional[int] = None
    n_samples: Optional[int] = None
    dt: Optional[float] = None


class TableRequest(BaseModel):
    seed: int = Field(default=0, ge=0, lt=2**64)
    n_samples: int = Field(default=10_000, ge=2)
    dt: float = Field(default=0.01, gt=0)


class TableRow(BaseModel):
    lambda_true: float
    sigma_true: float
    lambda_direct: float
    sigma_direct: float
    lambda_mc: float
    sigma_mc: float


class TableResponse(BaseModel):
    rows: list[TableRow]
    seed: int
    n_samples: int
    dt: float


class HealthResponse(BaseModel):
    status: str
    version: str
