"""Seeded synthetic scenes standing in for real multispectral imagery."""
import numpy as np
from scipy import ndimage

from ..core.errors import ConfigError
from .raster import Raster

NOISE_SIGMA = 0.01
# per-band departure from the shared luminance, as a fraction of its spread
BAND_DETAIL = 0.05
SPECTRAL_JITTER = 0.05


def _smooth_field(rng: np.random.Generator, height: int, width: int, sigma: float) -> np.ndarray:
    field = ndimage.gaussian_filter(rng.standard_normal((height, width)), sigma, mode='wrap')
    return (field - field.mean()) / max(field.std(), 1e-12)


def synth_scene(seed: int, bands: int, height: int, width: int) -> Raster:
    """Shared luminance + weak per-band smooth fields + rectangles + small noise, scaled to [0, 1].

    Rectangles carry one brightness shaped by the band gains and a small
    per-band jitter, so bands stay strongly correlated.
    """
    if bands < 1:
        raise ConfigError(f"scene needs at least one band, got {bands}")
    for axis, extent in (("height", height), ("width", width)):
        if extent < 8 or extent % 2:
            raise ConfigError(f"scene {axis} must be even and >= 8, got {extent}")

    rng = np.random.default_rng(seed)
    span = max(height, width)
    luminance = _smooth_field(rng, height, width, span / 8)
    gains = rng.uniform(0.8, 1.2, size=bands)
    scene = np.empty((bands, height, width))
    for b in range(bands):
        scene[b] = gains[b] * luminance + BAND_DETAIL * _smooth_field(rng, height, width, span / 4)

    for _ in range(int(rng.integers(4, 9))):
        h = int(rng.integers(2, max(3, height // 3)))
        w = int(rng.integers(2, max(3, width // 3)))
        top = int(rng.integers(0, height - h + 1))
        left = int(rng.integers(0, width - w + 1))
        spectrum = rng.uniform(-1.0, 1.0) * gains * rng.uniform(1 - SPECTRAL_JITTER, 1 + SPECTRAL_JITTER, size=bands)
        scene[:, top:top + h, left:left + w] += spectrum[:, None, None]

    scene += NOISE_SIGMA * rng.standard_normal(scene.shape)
    low, high = scene.min(), scene.max()
    scene = (scene - low) / max(high - low, 1e-12)
    return Raster(np.clip(scene, 0.0, 1.0).astype(np.float32))
