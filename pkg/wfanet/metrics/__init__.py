from .quality import (
    cd_mult,
    d_lambda,
    d_s,
    ergas,
    evaluate_pair,
    full_report,
    hqnr,
    psnr,
    q2n,
    q2n_blocks,
    reduced_report,
    sam,
    uqi,
)
from .report import MetricsReport

__all__ = [
    "MetricsReport",
    "cd_mult",
    "d_lambda",
    "d_s",
    "ergas",
    "evaluate_pair",
    "full_report",
    "hqnr",
    "psnr",
    "q2n",
    "q2n_blocks",
    "reduced_report",
    "sam",
    "uqi",
]
