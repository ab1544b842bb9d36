from .network import fuse_rasters, init_params, param_specs, scale_step, wfanet_forward
from .params import NetworkParams, load_params, save_params
from .wavelet import WaveletBands, WaveletPyramid, build_pyramid, dwt2, idwt2

__all__ = [
    "NetworkParams",
    "WaveletBands",
    "WaveletPyramid",
    "build_pyramid",
    "dwt2",
    "fuse_rasters",
    "idwt2",
    "init_params",
    "load_params",
    "param_specs",
    "save_params",
    "scale_step",
    "wfanet_forward",
]
