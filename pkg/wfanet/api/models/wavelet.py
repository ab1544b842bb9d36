from typing import List

from pydantic import BaseModel, Field

from .arrays import Array3D


class DwtRequest(BaseModel):
    data: Array3D
    levels: int = Field(1, ge=1)


class BandsPayload(BaseModel):
    ll: Array3D
    lh: Array3D
    hl: Array3D
    hh: Array3D


class DwtResponse(BaseModel):
    levels: List[BandsPayload]


class IdwtResponse(BaseModel):
    data: Array3D
