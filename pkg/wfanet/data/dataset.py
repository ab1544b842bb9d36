"""Synthetic Wald-protocol datasets and their on-disk layout:
`<root>/<split>/<index>_{pan|lrms|gt}.wfrs`, gt optional.
"""
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core.errors import ConfigError, FormatError
from ..core.log import get_logger
from .degrade import make_pan, uniform_weights, wald_degrade
from .raster import SamplePair, load_raster, save_raster
from .synth import synth_scene

logger = get_logger('data')

FILE_PATTERN = re.compile(r"^(\d+)_(pan|lrms|gt)\.wfrs$")


def scene_seeds(seed: int, count: int) -> List[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def build_dataset(count: int, bands: int, size: int, ratio: int, seed: int,
                  weights: Optional[Sequence[float]] = None,
                  blur_sigma: Optional[float] = None) -> List[SamplePair]:
    if count < 1:
        raise ConfigError(f"dataset needs at least one sample, got {count}")
    if size % ratio:
        raise ConfigError(f"scene size {size} is not divisible by ratio {ratio}")
    weights = uniform_weights(bands) if weights is None else weights
    pairs = []
    for scene_seed in scene_seeds(seed, count):
        gt = synth_scene(scene_seed, bands, size, size)
        pairs.append(SamplePair(pan=make_pan(gt, weights), lrms=wald_degrade(gt, ratio, blur_sigma), gt=gt))
    return pairs


def split_dataset(pairs: Sequence[SamplePair], validation: int):
    """Last `validation` samples are held out."""
    if not 0 < validation < len(pairs):
        raise ConfigError(f"validation size must lie in 1..{len(pairs) - 1}, got {validation}")
    return list(pairs[:-validation]), list(pairs[-validation:])


def save_dataset(pairs: Sequence[SamplePair], root: Path, split: str = "train") -> Path:
    folder = Path(root) / split
    folder.mkdir(parents=True, exist_ok=True)
    for index, pair in enumerate(pairs):
        save_raster(pair.pan, folder / f"{index:04d}_pan.wfrs")
        save_raster(pair.lrms, folder / f"{index:04d}_lrms.wfrs")
        if pair.gt is not None:
            save_raster(pair.gt, folder / f"{index:04d}_gt.wfrs")
    logger.info(f"Wrote {len(pairs)} samples to {folder}")
    return folder


def load_dataset(root: Path, split: str = "train") -> List[SamplePair]:
    folder = Path(root) / split
    if not folder.is_dir():
        raise FormatError(f"dataset split not found: {folder}")
    found: Dict[int, Dict[str, Path]] = {}
    for path in folder.iterdir():
        match = FILE_PATTERN.match(path.name)
        if match:
            found.setdefault(int(match.group(1)), {})[match.group(2)] = path
    if not found:
        raise FormatError(f"no WFRS samples in {folder}")

    pairs = []
    for index in sorted(found):
        files = found[index]
        missing = [kind for kind in ("pan", "lrms") if kind not in files]
        if missing:
            raise FormatError(f"sample {index} in {folder} is missing {', '.join(missing)}")
        gt = load_raster(files["gt"]) if "gt" in files else None
        pairs.append(SamplePair(pan=load_raster(files["pan"]), lrms=load_raster(files["lrms"]), gt=gt))
    return pairs
