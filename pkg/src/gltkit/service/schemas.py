"""Pydantic request/response models for the experiment service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..experiments import DEFAULT_SEED

CoeffName = Literal["one", "exp_xy", "sqrt_mix", "jump", "x10", "abs_centered", "jump5000"]


class SurfaceExtremaRequest(BaseModel):
    k: int = Field(2, ge=1, le=3)
    grid: int = Field(1024, ge=2, le=4096)


class SymbolCheckRequest(BaseModel):
    samples: int = Field(1000, ge=1, le=100_000)
    kmax: int = Field(4, ge=1, le=8)
    seed: int = DEFAULT_SEED


class AssembleRequest(BaseModel):
    family: Literal["P", "Q"] = "P"
    k: int = Field(2, ge=1, le=8)
    d: int = Field(2, ge=1, le=2)
    n_sub: int = Field(8, ge=2, le=512)
    a: CoeffName = "one"


class DistributionRequest(BaseModel):
    k: int = Field(2, ge=1, le=3)
    n_sub: int = Field(16, ge=2, le=64)
    a: CoeffName = "exp_xy"


class ExtremalScalingRequest(BaseModel):
    k: int = Field(2, ge=1, le=3)
    d: int = Field(2, ge=1, le=2)
    sizes: list[int] = Field(default_factory=lambda: [8, 16, 32])


class PcgRequest(BaseModel):
    precond: Literal["diag-scaled", "identity", "ic0", "strang"] = "diag-scaled"
    k: int = Field(2, ge=1, le=3)
    sizes: Optional[list[int]] = None
    a: CoeffName = "exp_xy"
    tol: float = Field(1e-6, gt=0)
    seed: int = DEFAULT_SEED


class WeakClusterRequest(BaseModel):
    k: int = Field(2, ge=1, le=3)
    sizes: list[int] = Field(default_factory=lambda: [4, 8, 16])
    eps: float = Field(0.1, gt=0)


class MultigridRequest(BaseModel):
    k: int = Field(2, ge=1, le=3)
    d: int = Field(1, ge=1, le=2)
    sizes: list[int] = Field(default_factory=lambda: [8, 16, 32, 64, 128, 256, 512])
    tol: float = Field(1e-6, gt=0)
    a: CoeffName = "one"
    mode: Literal["two_grid", "v_cycle", "both"] = "both"


class TgmCheckRequest(BaseModel):
    k: int = Field(2, ge=1, le=3)
    grid: int = Field(512, ge=8, le=8192)
    delta: float = Field(1e-3, gt=0)


REQUEST_MODELS: dict[str, type[BaseModel]] = {
    "surface-extrema": SurfaceExtremaRequest,
    "symbol-check": SymbolCheckRequest,
    "assemble": AssembleRequest,
    "distribution": DistributionRequest,
    "extremal-scaling": ExtremalScalingRequest,
    "pcg": PcgRequest,
    "weak-cluster": WeakClusterRequest,
    "multigrid": MultigridRequest,
    "tgm-check": TgmCheckRequest,
}


class ExperimentResponse(BaseModel):
    experiment: str
    params: dict
    columns: list[str]
    rows: list[list]
    summary: dict = Field(default_factory=dict)
    artifacts: dict[str, str] = Field(default_factory=dict)


class ExperimentInfo(BaseModel):
    name: str
    parameters: dict


class HealthResponse(BaseModel):
    status: str
    version: str
