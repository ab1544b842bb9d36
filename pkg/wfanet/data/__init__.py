from .dataset import build_dataset, load_dataset, save_dataset, split_dataset
from .degrade import gaussian_kernel, make_pan, wald_degrade
from .raster import Raster, SamplePair, load_raster, residual_raster, save_raster
from .synth import synth_scene

__all__ = [
    "Raster",
    "SamplePair",
    "build_dataset",
    "gaussian_kernel",
    "load_dataset",
    "load_raster",
    "make_pan",
    "residual_raster",
    "save_dataset",
    "save_raster",
    "split_dataset",
    "synth_scene",
    "wald_degrade",
]
