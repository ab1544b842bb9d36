from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

METRIC_NAMES = ("psnr", "sam", "ergas", "q2n", "d_lambda", "d_s", "hqnr")
HQNR_TOLERANCE = 1e-9


class MetricsReport(BaseModel):
    """Flat metric record; absent metrics stay None and are left out of `computed`."""

    model_config = ConfigDict(extra='ignore')

    psnr: Optional[float] = None
    sam: Optional[float] = Field(None, ge=0)
    ergas: Optional[float] = Field(None, ge=0)
    q2n: Optional[float] = None
    d_lambda: Optional[float] = None
    d_s: Optional[float] = None
    hqnr: Optional[float] = None
    degenerate_blocks: int = Field(0, ge=0)
    skipped_pixels: int = Field(0, ge=0)

    @model_validator(mode='after')
    def _hqnr_is_consistent(self):
        if None not in (self.d_lambda, self.d_s, self.hqnr):
            expected = (1.0 - self.d_lambda) * (1.0 - self.d_s)
            if abs(self.hqnr - expected) > HQNR_TOLERANCE:
                raise ValueError(
                    f"hqnr {self.hqnr} disagrees with (1 - d_lambda)(1 - d_s) = {expected}"
                )
        return self

    @computed_field
    @property
    def computed(self) -> List[str]:
        return [name for name in METRIC_NAMES if getattr(self, name) is not None]
