"""Wald-protocol degradation and simulated PAN response."""
import math
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from ..core.errors import ConfigError, DimensionError
from .raster import Raster

MTF_FACTOR = 0.85


def default_sigma(ratio: int) -> float:
    return ratio / 2 * MTF_FACTOR


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian truncated at radius ceil(3σ)."""
    if sigma <= 0:
        raise ConfigError(f"blur sigma must be positive, got {sigma}")
    radius = int(math.ceil(3 * sigma))
    taps = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (taps / sigma) ** 2)
    return kernel / kernel.sum()


def blur(values: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian over the two trailing axes, edges replicated."""
    kernel = gaussian_kernel(sigma)
    out = ndimage.correlate1d(np.asarray(values, dtype=np.float64), kernel, axis=-2, mode='nearest')
    return ndimage.correlate1d(out, kernel, axis=-1, mode='nearest')


def degrade_array(values: np.ndarray, ratio: int, blur_sigma: Optional[float] = None) -> np.ndarray:
    if ratio < 1:
        raise ConfigError(f"ratio must be >= 1, got {ratio}")
    h, w = values.shape[-2:]
    if h % ratio or w % ratio:
        raise DimensionError(f"extents {h}x{w} are not divisible by ratio {ratio}")
    sigma = default_sigma(ratio) if blur_sigma is None else blur_sigma
    offset = ratio // 2
    return blur(values, sigma)[..., offset::ratio, offset::ratio]


def wald_degrade(gt: Raster, ratio: int, blur_sigma: Optional[float] = None) -> Raster:
    """Blur each band, then keep every r-th pixel starting at r/2."""
    return Raster(degrade_array(gt.values, ratio, blur_sigma).astype(np.float32), gt.bit_depth)


def make_pan(gt: Raster, weights: Sequence[float]) -> Raster:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (gt.bands,):
        raise ConfigError(f"need {gt.bands} spectral weights, got {weights.size}")
    if np.any(weights < 0):
        raise ConfigError("spectral weights must be non-negative")
    if not math.isclose(float(weights.sum()), 1.0, abs_tol=1e-6):
        raise ConfigError(f"spectral weights must sum to 1, got {weights.sum():.6f}")
    pan = np.tensordot(weights, gt.values.astype(np.float64), axes=1)
    return Raster(pan[np.newaxis].astype(np.float32), gt.bit_depth)


def uniform_weights(bands: int) -> np.ndarray:
    return np.full(bands, 1.0 / bands)
