"""Spatial Detail Enhancement Module.

Each DWT band of P runs through its own block stack (FABs by default,
Convolution Blocks in the ablation) and the IDWT puts the bands back together.
"""
from typing import Dict, Mapping

from ..core.config import DetailBlock, NetworkConfig
from ..core.errors import DimensionError
from ..engine import ops
from ..engine.tensor import Tensor
from . import layers
from .params import ParamGroup, ParamSpec, channel_linear_spec, conv_spec
from .wavelet import BAND_NAMES, WaveletBands, dwt2, idwt2


class SdemParams(ParamGroup):
    def __init__(self, params: Mapping[str, Tensor], prefix: str, config: NetworkConfig):
        super().__init__(params, prefix)
        self.config = config

    def band(self, name: str) -> ParamGroup:
        return ParamGroup(self._params, f"{self.prefix}.{name}")

    @property
    def blocks(self) -> int:
        if self.config.fab_or_cb == DetailBlock.FAB:
            return self.config.fab_count
        return self.config.cb_count


def sdem_param_specs(config: NetworkConfig, prefix: str) -> Dict[str, ParamSpec]:
    c = config.channels
    specs: Dict[str, ParamSpec] = {}
    for band in BAND_NAMES:
        if config.fab_or_cb == DetailBlock.FAB:
            for j in range(config.fab_count):
                specs.update(channel_linear_spec(f"{prefix}.{band}.fab{j}", c, c))
        else:
            for j in range(config.cb_count):
                specs.update(conv_spec(f"{prefix}.{band}.cb{j}", c, c))
    return specs


def _check_channels(x: Tensor, expected: int, block: str):
    if x.ndim != 3 or x.shape[0] != expected:
        raise DimensionError(f"{block} expects {expected} channels, got input of shape {x.shape}")


def fab_forward(band: Tensor, band_params: ParamGroup, blocks: int) -> Tensor:
    """Frequency Adaptation Blocks: per-position channel map, then sigmoid, `blocks` times."""
    x = band
    for j in range(blocks):
        weight = band_params[f"fab{j}.weight"]
        _check_channels(x, weight.shape[1], f"FAB {band_params.prefix}.fab{j}")
        x = ops.sigmoid(layers.channel_linear(x, band_params, f"fab{j}"))
    return x


def cb_forward(band: Tensor, band_params: ParamGroup, blocks: int) -> Tensor:
    x = band
    for j in range(blocks):
        weight = band_params[f"cb{j}.weight"]
        _check_channels(x, weight.shape[1], f"CB {band_params.prefix}.cb{j}")
        x = ops.relu(layers.conv(x, band_params, f"cb{j}"))
    return x


def sdem_forward(p: Tensor, params: SdemParams) -> Tensor:
    block = fab_forward if params.config.fab_or_cb == DetailBlock.FAB else cb_forward
    bands = dwt2(p)
    enhanced = {name: block(band, params.band(name), params.blocks) for name, band in bands.items()}
    return idwt2(WaveletBands(**enhanced))
