from typing import Optional

from pydantic import BaseModel, Field

from .arrays import Array3D


class ReducedMetricsRequest(BaseModel):
    ref: Array3D
    test: Array3D
    ratio: int = Field(4, ge=1)
    peak: float = Field(1.0, gt=0)
    block: int = Field(32, ge=2)


class FullMetricsRequest(BaseModel):
    fused: Array3D
    ms: Array3D
    pan: Array3D
    ratio: int = Field(4, ge=1)
    blur_sigma: Optional[float] = Field(None, gt=0)
    block: int = Field(32, ge=2)
