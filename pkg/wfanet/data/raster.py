"""Raster value types and the WFRS file format.

WFRS layout: 8-byte magic `WFRSv001`, four little-endian uint32 values
(bands, height, width, bit depth), then bands·height·width little-endian
float32 values, band-sequential and row-major.
"""
import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..core.errors import DimensionError, FormatError, RasterValidationError
from ..engine.tensor import Tensor

RASTER_MAGIC = b"WFRSv001"
HEADER = struct.Struct('<4I')
HEADER_BYTES = len(RASTER_MAGIC) + HEADER.size
DEFAULT_BIT_DEPTH = 11


@dataclass(frozen=True)
class Raster:
    values: np.ndarray
    bit_depth: int = DEFAULT_BIT_DEPTH

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 3 or min(values.shape) < 1:
            raise DimensionError(f"raster must be bands×height×width with extents >= 1, got {values.shape}")
        object.__setattr__(self, "values", np.ascontiguousarray(values, dtype=np.float32))

    @classmethod
    def from_array(cls, values: np.ndarray, bit_depth: int = DEFAULT_BIT_DEPTH,
                   clamp: bool = False) -> "Raster":
        values = np.asarray(values, dtype=np.float32)
        if clamp:
            values = np.clip(values, 0.0, 1.0)
        return cls(values, bit_depth)

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    def to_tensor(self, requires_grad: bool = False) -> Tensor:
        return Tensor(self.values.copy(), requires_grad=requires_grad)

    def checksum(self) -> str:
        return hashlib.sha256(self.values.astype('<f4').tobytes()).hexdigest()


@dataclass(frozen=True)
class SamplePair:
    """PAN at full extent, LRMS at 1/r extent and, when known, the full-extent GT."""

    pan: Raster
    lrms: Raster
    gt: Optional[Raster] = None

    def __post_init__(self):
        if self.pan.bands != 1:
            raise DimensionError(f"pan must have one band, got {self.pan.bands}")
        if self.pan.height % self.lrms.height or self.pan.width % self.lrms.width:
            raise DimensionError(
                f"pan {self.pan.height}x{self.pan.width} is not an integer multiple of "
                f"lrms {self.lrms.height}x{self.lrms.width}"
            )
        if self.pan.height // self.lrms.height != self.pan.width // self.lrms.width:
            raise DimensionError("pan/lrms extent ratio differs between axes")
        if self.gt is not None:
            expected = (self.lrms.bands, self.pan.height, self.pan.width)
            if self.gt.shape != expected:
                raise DimensionError(f"gt must be {expected}, got {self.gt.shape}")

    @property
    def ratio(self) -> int:
        return self.pan.height // self.lrms.height


def save_raster(raster: Raster, path: Path, clamp: bool = True):
    """Writes WFRS; values are clamped to [0, 1] unless `clamp` is off (wavelet bands)."""
    values = np.clip(raster.values, 0.0, 1.0) if clamp else raster.values
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('wb') as handle:
        handle.write(RASTER_MAGIC)
        handle.write(HEADER.pack(raster.bands, raster.height, raster.width, raster.bit_depth))
        handle.write(values.astype('<f4').tobytes())


def load_raster(path: Path, validate: bool = True) -> Raster:
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise FormatError(f"raster file not found: {path}") from exc
    if raw[:len(RASTER_MAGIC)] != RASTER_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}, expected {RASTER_MAGIC!r}")
    if len(raw) < HEADER_BYTES:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    bands, height, width, bit_depth = HEADER.unpack(raw[len(RASTER_MAGIC):HEADER_BYTES])
    expected = HEADER_BYTES + 4 * bands * height * width
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {bands}x{height}x{width}, found {len(raw)}")
    if min(bands, height, width) < 1:
        raise FormatError(f"{path}: empty raster {bands}x{height}x{width}")

    values = np.frombuffer(raw, dtype='<f4', offset=HEADER_BYTES).astype(np.float32)
    values = values.reshape(bands, height, width)
    if validate:
        outside = int(np.count_nonzero(~((values >= 0.0) & (values <= 1.0))))
        if outside:
            raise RasterValidationError(f"{path}: {outside} values outside [0, 1]")
    return Raster(values, bit_depth)


def residual_raster(ref: Raster, test: Raster) -> Raster:
    """Absolute difference |ref - test|, the raw residual map."""
    if ref.shape != test.shape:
        raise DimensionError(f"residual needs equal shapes, got {ref.shape} and {test.shape}")
    return Raster(np.abs(ref.values - test.values), ref.bit_depth)
