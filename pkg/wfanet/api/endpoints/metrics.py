from fastapi import APIRouter

from ..models.arrays import to_array
from ..models.metrics import FullMetricsRequest, ReducedMetricsRequest
from ...core.config import EvalMode, MetricFlags
from ...data.raster import Raster
from ...metrics.quality import full_report, reduced_report
from ...metrics.report import MetricsReport

router = APIRouter(prefix="/metrics")


@router.post("/reduced", response_model=MetricsReport)
def reduced(payload: ReducedMetricsRequest):
    flags = MetricFlags(mode=EvalMode.REDUCED, ratio=payload.ratio, peak=payload.peak, block=payload.block)
    return reduced_report(
        Raster(to_array(payload.ref, "ref")),
        Raster(to_array(payload.test, "test")),
        flags,
    )


@router.post("/full", response_model=MetricsReport)
def full(payload: FullMetricsRequest):
    flags = MetricFlags(
        mode=EvalMode.FULL, ratio=payload.ratio, blur_sigma=payload.blur_sigma, block=payload.block
    )
    return full_report(
        Raster(to_array(payload.fused, "fused")),
        Raster(to_array(payload.ms, "ms")),
        Raster(to_array(payload.pan, "pan")),
        flags,
    )
