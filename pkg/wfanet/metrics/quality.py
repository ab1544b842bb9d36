"""Pansharpening quality indices.

Reduced resolution (GT known): PSNR, SAM, ERGAS, Q2n.
Full resolution (no GT): D_lambda, D_s and HQNR = (1 - D_lambda)(1 - D_s).

Block indices use non-overlapping block×block windows; trailing pixels that
do not fill a whole block are ignored. A window where both variances or both
means vanish contributes 0 and is counted as degenerate.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.config import EvalMode, MetricFlags
from ..core.errors import ComputationError, ConfigError, DimensionError
from ..core.log import get_logger
from ..data.degrade import degrade_array
from ..data.raster import Raster
from .report import MetricsReport

logger = get_logger('metrics')

PSNR_CAP = 100.0
DEGENERATE_EPS = 1e-12
DEFAULT_BLOCK = 32


def _pair(ref: Raster, test: Raster, op: str) -> Tuple[np.ndarray, np.ndarray]:
    if ref.shape != test.shape:
        raise DimensionError(f"{op}: shapes differ, {ref.shape} vs {test.shape}")
    return ref.values.astype(np.float64), test.values.astype(np.float64)


def psnr(ref: Raster, test: Raster, peak: float = 1.0) -> float:
    if peak <= 0:
        raise ConfigError(f"psnr peak must be positive, got {peak}")
    a, b = _pair(ref, test, "psnr")
    mse = np.mean((a - b) ** 2, axis=(1, 2))
    per_band = np.full(mse.shape, PSNR_CAP)
    nonzero = mse > 0
    per_band[nonzero] = np.minimum(10.0 * np.log10(peak ** 2 / mse[nonzero]), PSNR_CAP)
    return float(per_band.mean())


def spectral_angles(ref: Raster, test: Raster) -> Tuple[np.ndarray, int]:
    """Per-pixel angles in degrees over the usable pixels, and the skipped-pixel count."""
    a, b = _pair(ref, test, "sam")
    if a.shape[0] < 2:
        raise DimensionError(f"sam needs at least two bands, got {a.shape[0]}")
    a = a.reshape(a.shape[0], -1)
    b = b.reshape(b.shape[0], -1)
    energy_a = np.sum(a * a, axis=0)
    energy_b = np.sum(b * b, axis=0)
    usable = (np.sqrt(energy_a) >= DEGENERATE_EPS) & (np.sqrt(energy_b) >= DEGENERATE_EPS)
    skipped = int(usable.size - np.count_nonzero(usable))
    if not usable.any():
        raise ComputationError("sam: every pixel has a zero spectrum")
    dot = np.sum(a * b, axis=0)[usable]
    cosine = dot / np.sqrt(energy_a[usable] * energy_b[usable])
    return np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0))), skipped


def sam(ref: Raster, test: Raster) -> float:
    angles, skipped = spectral_angles(ref, test)
    if skipped:
        logger.warning(f"sam skipped {skipped} pixels with zero spectra")
    return float(angles.mean())


def ergas(ref: Raster, test: Raster, ratio: float = 4) -> float:
    a, b = _pair(ref, test, "ergas")
    rmse = np.sqrt(np.mean((a - b) ** 2, axis=(1, 2)))
    means = a.mean(axis=(1, 2))
    for band, mean in enumerate(means):
        if abs(mean) < DEGENERATE_EPS:
            raise ComputationError(f"ergas: reference band {band} has zero mean")
    return float(100.0 / ratio * np.sqrt(np.mean((rmse / means) ** 2)))


# Cayley–Dickson algebra on the last axis (length a power of two).

def cd_conj(a: np.ndarray) -> np.ndarray:
    out = -a
    out[..., 0] = a[..., 0]
    return out


def cd_mult(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    if n == 1:
        return a * b
    half = n // 2
    p, q = a[..., :half], a[..., half:]
    r, s = b[..., :half], b[..., half:]
    return np.concatenate(
        [cd_mult(p, r) - cd_mult(cd_conj(s), q), cd_mult(s, p) + cd_mult(q, cd_conj(r))],
        axis=-1,
    )


@dataclass(frozen=True)
class BlockQuality:
    values: np.ndarray  # one index value per full block, (rows, cols)
    degenerate: int

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def _blocks(values: np.ndarray, block: int) -> np.ndarray:
    """(n, H, W) -> (rows, cols, block·block, n) over full blocks only."""
    n, h, w = values.shape
    rows, cols = h // block, w // block
    cropped = values[:, :rows * block, :cols * block]
    tiles = cropped.reshape(n, rows, block, cols, block).transpose(1, 3, 2, 4, 0)
    return tiles.reshape(rows, cols, block * block, n)


def _check_block(shape: Tuple[int, ...], block: int, op: str):
    if block < 2:
        raise ConfigError(f"{op}: block must be >= 2, got {block}")
    if shape[-2] < block or shape[-1] < block:
        raise DimensionError(f"{op}: extents {shape[-2]}x{shape[-1]} are smaller than block {block}")


def _hypercomplex_index(x: np.ndarray, y: np.ndarray) -> BlockQuality:
    """Q index per block for (rows, cols, pixels, n) hypercomplex samples."""
    mean_x = x.mean(axis=2)
    mean_y = y.mean(axis=2)
    var_x = np.mean(np.sum(x * x, axis=-1), axis=2) - np.sum(mean_x * mean_x, axis=-1)
    var_y = np.mean(np.sum(y * y, axis=-1), axis=2) - np.sum(mean_y * mean_y, axis=-1)
    energy_x = np.sum(mean_x * mean_x, axis=-1)
    energy_y = np.sum(mean_y * mean_y, axis=-1)
    cross = cd_mult(x, cd_conj(y)).mean(axis=2) - cd_mult(mean_x, cd_conj(mean_y))

    spread = var_x + var_y
    level = energy_x + energy_y
    degenerate = (spread < DEGENERATE_EPS) | (level < DEGENERATE_EPS)
    safe_spread = np.where(degenerate, 1.0, spread)
    safe_level = np.where(degenerate, 1.0, level)
    if x.shape[-1] == 1:
        # Real algebra: the signed scalar index.
        numerator = 4.0 * cross[..., 0] * mean_x[..., 0] * mean_y[..., 0]
    else:
        numerator = 4.0 * np.linalg.norm(cross, axis=-1) * np.sqrt(energy_x * energy_y)
    values = np.where(degenerate, 0.0, numerator / (safe_spread * safe_level))
    return BlockQuality(values, int(np.count_nonzero(degenerate)))


def _report_degenerate(op: str, quality: BlockQuality):
    if quality.degenerate:
        logger.warning(
            f"{op}: {quality.degenerate} of {quality.values.size} blocks are degenerate and count as 0"
        )


def uqi_blocks(x: np.ndarray, y: np.ndarray, block: int = DEFAULT_BLOCK) -> BlockQuality:
    """Scalar universal image quality index on single-band (H, W) images."""
    if x.shape != y.shape or x.ndim != 2:
        raise DimensionError(f"uqi needs two equal 2-D images, got {x.shape} and {y.shape}")
    _check_block(x.shape, block, "uqi")
    return _hypercomplex_index(
        _blocks(x[np.newaxis].astype(np.float64), block),
        _blocks(y[np.newaxis].astype(np.float64), block),
    )


def uqi(x: np.ndarray, y: np.ndarray, block: int = DEFAULT_BLOCK) -> float:
    quality = uqi_blocks(x, y, block)
    _report_degenerate("uqi", quality)
    return quality.mean


def _pad_to_power_of_two(values: np.ndarray) -> np.ndarray:
    bands = values.shape[0]
    width = 1 << (bands - 1).bit_length()
    if width == bands:
        return values
    pad = np.zeros((width - bands,) + values.shape[1:], dtype=values.dtype)
    return np.concatenate([values, pad], axis=0)


def q2n_blocks(ref: Raster, test: Raster, block: int = DEFAULT_BLOCK) -> BlockQuality:
    a, b = _pair(ref, test, "q2n")
    _check_block(a.shape, block, "q2n")
    return _hypercomplex_index(
        _blocks(_pad_to_power_of_two(a), block),
        _blocks(_pad_to_power_of_two(b), block),
    )


def q2n(ref: Raster, test: Raster, block: int = DEFAULT_BLOCK) -> float:
    quality = q2n_blocks(ref, test, block)
    _report_degenerate("q2n", quality)
    return quality.mean


def low_resolution_block(block: int, ratio: int) -> int:
    return max(4, block // ratio)


def _check_ratio(fused: Raster, ms: Raster, ratio: int, op: str):
    if fused.bands != ms.bands:
        raise DimensionError(f"{op}: fused has {fused.bands} bands, ms has {ms.bands}")
    if fused.height != ratio * ms.height or fused.width != ratio * ms.width:
        raise DimensionError(
            f"{op}: fused {fused.height}x{fused.width} is not ratio {ratio} times "
            f"ms {ms.height}x{ms.width}"
        )


def d_lambda(fused: Raster, ms: Raster, ratio: int = 4, blur_sigma: Optional[float] = None,
             block: int = DEFAULT_BLOCK) -> float:
    """Spectral distortion: 1 - Q2n between the degraded fusion and the MS input."""
    _check_ratio(fused, ms, ratio, "d_lambda")
    degraded = Raster(degrade_array(fused.values, ratio, blur_sigma), fused.bit_depth)
    return 1.0 - q2n(ms, degraded, low_resolution_block(block, ratio))


def d_s(fused: Raster, ms: Raster, pan: Raster, ratio: int = 4, blur_sigma: Optional[float] = None,
        block: int = DEFAULT_BLOCK) -> float:
    """Spatial distortion: mean |Q(fused_b, pan) - Q(ms_b, degraded pan)| over bands."""
    _check_ratio(fused, ms, ratio, "d_s")
    if pan.bands != 1 or (pan.height, pan.width) != (fused.height, fused.width):
        raise DimensionError(f"d_s: pan must be 1x{fused.height}x{fused.width}, got {pan.shape}")
    pan_full = pan.values[0].astype(np.float64)
    pan_low = degrade_array(pan_full, ratio, blur_sigma)
    low_block = low_resolution_block(block, ratio)
    gaps = [
        abs(uqi(fused.values[b], pan_full, block) - uqi(ms.values[b], pan_low, low_block))
        for b in range(fused.bands)
    ]
    return float(np.mean(gaps))


def hqnr(d_lambda_value: float, d_s_value: float) -> float:
    return (1.0 - d_lambda_value) * (1.0 - d_s_value)


def reduced_report(ref: Raster, test: Raster, flags: MetricFlags) -> MetricsReport:
    quality = q2n_blocks(ref, test, flags.block)
    _report_degenerate("q2n", quality)
    angles, skipped = spectral_angles(ref, test)
    return MetricsReport(
        psnr=psnr(ref, test, flags.peak),
        sam=float(angles.mean()),
        ergas=ergas(ref, test, flags.ratio),
        q2n=quality.mean,
        degenerate_blocks=quality.degenerate,
        skipped_pixels=skipped,
    )


def full_report(fused: Raster, ms: Raster, pan: Raster, flags: MetricFlags) -> MetricsReport:
    spectral = d_lambda(fused, ms, flags.ratio, flags.blur_sigma, flags.block)
    spatial = d_s(fused, ms, pan, flags.ratio, flags.blur_sigma, flags.block)
    return MetricsReport(d_lambda=spectral, d_s=spatial, hqnr=hqnr(spectral, spatial))


def evaluate_pair(fused: Raster, flags: MetricFlags, ref: Optional[Raster] = None,
                  ms: Optional[Raster] = None, pan: Optional[Raster] = None) -> MetricsReport:
    if flags.mode == EvalMode.REDUCED:
        if ref is None:
            raise ConfigError("reduced-resolution evaluation needs a reference (gt) raster")
        return reduced_report(ref, fused, flags)
    if ms is None or pan is None:
        raise ConfigError("full-resolution evaluation needs both the ms and pan rasters")
    return full_report(fused, ms, pan, flags)
