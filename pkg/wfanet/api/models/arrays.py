from typing import List

import numpy as np

from ...core.errors import DimensionError

Array3D = List[List[List[float]]]


def to_array(values: Array3D, name: str) -> np.ndarray:
    try:
        array = np.asarray(values, dtype=np.float32)
    except ValueError as exc:
        raise DimensionError(f"{name} is not a rectangular array") from exc
    if array.ndim != 3 or min(array.shape) < 1:
        raise DimensionError(f"{name} must be bands×height×width, got shape {array.shape}")
    return array
