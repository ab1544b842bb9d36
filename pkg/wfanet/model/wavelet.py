"""Exact 2-D Haar DWT/IDWT on channels-first tensors.

Per 2×2 block {a11 a12; a21 a22} with block-mean normalization:

    LL = (a11 + a12 + a21 + a22) / 4
    LH = (a11 + a12 - a21 - a22) / 4
    HL = (a11 - a12 + a21 - a22) / 4
    HH = (a11 - a12 - a21 + a22) / 4

HH is the standard diagonal detail. The alternative form (a21 + a22 - a11 - a12) / 4
equals -LH and would make the transform singular.
"""
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from ..core.errors import ConfigError, DimensionError
from ..engine import ops
from ..engine.tensor import Tensor, record

BAND_NAMES = ("ll", "lh", "hl", "hh")


@dataclass(frozen=True)
class WaveletBands:
    ll: Tensor
    lh: Tensor
    hl: Tensor
    hh: Tensor

    def __post_init__(self):
        shapes = {band.shape for band in self}
        if len(shapes) != 1:
            raise DimensionError(
                "wavelet bands disagree in shape: "
                + ", ".join(f"{name}={band.shape}" for name, band in zip(BAND_NAMES, self))
            )

    def __iter__(self) -> Iterator[Tensor]:
        return iter((self.ll, self.lh, self.hl, self.hh))

    def items(self) -> List[Tuple[str, Tensor]]:
        return list(zip(BAND_NAMES, self))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.ll.shape


@dataclass(frozen=True)
class WaveletPyramid:
    """Levels ordered smallest first; the last level is the source tensor."""

    levels: Tuple[Tensor, ...]

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, k: int) -> Tensor:
        return self.levels[k]

    @property
    def top(self) -> Tensor:
        return self.levels[-1]


def _check_even(op: str, x: Tensor):
    if x.ndim < 2:
        raise DimensionError(f"{op} expects at least two spatial axes, got shape {x.shape}")
    h, w = x.shape[-2:]
    for axis, extent in (("height", h), ("width", w)):
        if extent < 2 or extent % 2:
            raise DimensionError(f"{op}: {axis} must be even and >= 2, got {extent}")


def dwt2(x: Tensor) -> WaveletBands:
    _check_even("dwt2", x)
    a11 = x.data[..., 0::2, 0::2]
    a12 = x.data[..., 0::2, 1::2]
    a21 = x.data[..., 1::2, 0::2]
    a22 = x.data[..., 1::2, 1::2]
    quarter = x.dtype.type(0.25)
    packed = np.stack([
        (a11 + a12 + a21 + a22) * quarter,
        (a11 + a12 - a21 - a22) * quarter,
        (a11 - a12 + a21 - a22) * quarter,
        (a11 - a12 - a21 + a22) * quarter,
    ])

    def _backward(g):
        g_ll, g_lh, g_hl, g_hh = g
        grad = np.empty(x.shape, dtype=g.dtype)
        grad[..., 0::2, 0::2] = (g_ll + g_lh + g_hl + g_hh) * quarter
        grad[..., 0::2, 1::2] = (g_ll + g_lh - g_hl - g_hh) * quarter
        grad[..., 1::2, 0::2] = (g_ll - g_lh + g_hl - g_hh) * quarter
        grad[..., 1::2, 1::2] = (g_ll - g_lh - g_hl + g_hh) * quarter
        return (grad,)

    bands = record("dwt2", (x,), packed, _backward)
    return WaveletBands(*(ops.take(bands, i, axis=0) for i in range(4)))


def idwt2(bands: WaveletBands) -> Tensor:
    ll, lh, hl, hh = (band.data for band in bands)
    h, w = ll.shape[-2:]
    out = np.empty(ll.shape[:-2] + (2 * h, 2 * w), dtype=np.result_type(ll, lh, hl, hh))
    out[..., 0::2, 0::2] = ll + lh + hl + hh
    out[..., 0::2, 1::2] = ll + lh - hl - hh
    out[..., 1::2, 0::2] = ll - lh + hl - hh
    out[..., 1::2, 1::2] = ll - lh - hl + hh

    def _backward(g):
        g11 = g[..., 0::2, 0::2]
        g12 = g[..., 0::2, 1::2]
        g21 = g[..., 1::2, 0::2]
        g22 = g[..., 1::2, 1::2]
        return (
            g11 + g12 + g21 + g22,
            g11 + g12 - g21 - g22,
            g11 - g12 + g21 - g22,
            g11 - g12 - g21 + g22,
        )

    return record("idwt2", tuple(bands), out, _backward)


def max_levels(height: int, width: int) -> int:
    """Largest pyramid depth whose every split sees even extents."""
    levels = 1
    while height % 2 == 0 and width % 2 == 0 and height >= 2 and width >= 2:
        height //= 2
        width //= 2
        levels += 1
    return levels


def build_pyramid(x: Tensor, levels: int) -> WaveletPyramid:
    """LL-recursive pyramid: level n-1 is `x`, each lower level the LL of the one above."""
    if levels < 1:
        raise ConfigError(f"pyramid needs at least one level, got {levels}")
    h, w = x.shape[-2:]
    factor = 2 ** (levels - 1)
    if h % factor or w % factor:
        raise DimensionError(
            f"cannot build {levels} levels over {h}x{w}; at most {max_levels(h, w)} levels fit"
        )
    stack = [x]
    for _ in range(levels - 1):
        stack.insert(0, dwt2(stack[0]).ll)
    return WaveletPyramid(tuple(stack))


def wavedec(x: Tensor, levels: int) -> List[WaveletBands]:
    """Bands of each successive LL split, finest level first."""
    if levels < 1:
        raise ConfigError(f"decomposition needs at least one level, got {levels}")
    out = []
    current = x
    for _ in range(levels):
        bands = dwt2(current)
        out.append(bands)
        current = bands.ll
    return out
