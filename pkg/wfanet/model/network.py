"""WFANet assembly: stems, the PAN feature pyramid, per-scale MFFA + SDEM
fusion and the final C→B projection.

Scale k fuses M_k (C×h_k×w_k) with pyramid level P_k (C×2h_k×2w_k); its
output is M_{k+1}. Features stay C-wide between scales.
"""
from typing import Any, Dict, Mapping, Optional, Union

from ..core.config import NetworkConfig, parse_config
from ..core.errors import ConfigError, DimensionError
from ..data.raster import Raster
from ..engine import ops
from ..engine.tensor import Tensor, no_grad
from .mffa import MffaParams, mffa_forward, mffa_param_specs
from .params import NetworkParams, ParamSpec, conv_spec, init_tensors
from .sdem import SdemParams, sdem_forward, sdem_param_specs
from .wavelet import build_pyramid


def scale_count(config: NetworkConfig) -> int:
    return config.scales if config.multi_scale else 1


def param_specs(config: NetworkConfig) -> Dict[str, ParamSpec]:
    c, b = config.channels, config.ms_bands
    specs: Dict[str, ParamSpec] = {}
    specs.update(conv_spec("stem.pan", 1, c))
    specs.update(conv_spec("stem.ms", b, c))
    specs.update(conv_spec("head", c, b))
    for k in range(scale_count(config)):
        specs.update(mffa_param_specs(config, f"scale{k}.mffa"))
        if config.use_sdem:
            specs.update(sdem_param_specs(config, f"scale{k}.sdem"))
    return specs


def init_params(config: Union[NetworkConfig, Mapping[str, Any]]) -> NetworkParams:
    if not isinstance(config, NetworkConfig):
        config = parse_config(NetworkConfig, dict(config))
    return NetworkParams(config, init_tensors(param_specs(config), config.seed))


def scale_step(m_k: Tensor, p_k: Tensor, params: Mapping[str, Tensor], config: NetworkConfig,
               k: int = 0) -> Tensor:
    fused = mffa_forward(p_k, m_k, MffaParams(params, f"scale{k}.mffa", config))
    if config.use_sdem:
        fused = ops.add(fused, sdem_forward(p_k, SdemParams(params, f"scale{k}.sdem", config)))
    return fused


def _conv(x: Tensor, params: Mapping[str, Tensor], name: str) -> Tensor:
    return ops.conv2d(x, params[f"{name}.weight"], params[f"{name}.bias"])


def _check_inputs(pan: Tensor, lrms: Tensor, config: NetworkConfig):
    if pan.ndim != 3 or pan.shape[0] != 1:
        raise DimensionError(f"pan must be 1×H×W, got {pan.shape}")
    if lrms.ndim != 3 or lrms.shape[0] != config.ms_bands:
        raise DimensionError(f"lrms must be {config.ms_bands}×h×w, got {lrms.shape}")
    r = config.ratio
    if pan.shape[1] != r * lrms.shape[1] or pan.shape[2] != r * lrms.shape[2]:
        raise DimensionError(
            f"pan {pan.shape[1]}x{pan.shape[2]} is not ratio {r} times lrms "
            f"{lrms.shape[1]}x{lrms.shape[2]}"
        )


def wfanet_forward(pan: Tensor, lrms: Tensor, params: NetworkParams,
                   config: Optional[NetworkConfig] = None) -> Tensor:
    config = config or params.config
    if config != params.config:
        raise ConfigError("parameters were built for a different network config")
    _check_inputs(pan, lrms, config)

    p_top = _conv(pan, params, "stem.pan")
    m = _conv(lrms, params, "stem.ms")
    if config.multi_scale:
        pyramid = build_pyramid(p_top, config.scales)
        for k in range(config.scales):
            m = scale_step(m, pyramid[k], params, config, k)
    else:
        m = ops.upsample_nearest(m, config.ratio // 2)
        m = scale_step(m, p_top, params, config, 0)
    return _conv(m, params, "head")


def fuse_rasters(pan: Raster, lrms: Raster, params: NetworkParams) -> Raster:
    """Inference on rasters; the prediction is clamped to [0, 1] on export."""
    with no_grad():
        out = wfanet_forward(pan.to_tensor(), lrms.to_tensor(), params)
    return Raster.from_array(out.data, bit_depth=lrms.bit_depth, clamp=True)
