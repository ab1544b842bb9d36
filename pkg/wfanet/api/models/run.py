from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict


class EpochSummary(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    epoch: int
    lr: float
    mean_loss: float


class EvaluationSummary(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    sample_index: int
    mode: str
    psnr: Optional[float] = None
    sam: Optional[float] = None
    ergas: Optional[float] = None
    q2n: Optional[float] = None
    d_lambda: Optional[float] = None
    d_s: Optional[float] = None
    hqnr: Optional[float] = None


class RunSummary(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    id: int
    name: str
    seed: int
    params_checksum: str
    param_count: int
    final_loss: float
    validation_l1: Optional[float] = None
    wall_clock: float
    epoch_count: int
    created_at: datetime


class RunDetail(RunSummary):
    network_config: Dict[str, Any]
    train_config: Dict[str, Any]
    epochs: List[EpochSummary]
    evaluations: List[EvaluationSummary]
