"""Learnable tensor container, initialisation and the WFPM parameter file.

WFPM layout: 8-byte magic `WFPMv001`, little-endian uint32 header length,
UTF-8 JSON header, then one little-endian float32 blob. The header lists
every tensor as (name, shape, byte offset) in name order and carries the
NetworkConfig the tensors were built for.
"""
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from ..core.config import NetworkConfig, parse_config
from ..core.errors import ConfigError, DimensionError, FormatError
from ..engine.tensor import Tensor

PARAMS_MAGIC = b"WFPMv001"


@dataclass(frozen=True)
class ParamSpec:
    shape: Tuple[int, ...]
    kind: str  # weight | bias | gamma | beta
    fan_in: int = 0


def conv_spec(prefix: str, c_in: int, c_out: int) -> Dict[str, ParamSpec]:
    return {
        f"{prefix}.weight": ParamSpec((c_out, c_in, 3, 3), "weight", c_in * 9),
        f"{prefix}.bias": ParamSpec((c_out,), "bias"),
    }


def linear_spec(prefix: str, n_in: int, n_out: int) -> Dict[str, ParamSpec]:
    """Token-side linear map: tokens (N×n_in) @ weight (n_in×n_out) + bias."""
    return {
        f"{prefix}.weight": ParamSpec((n_in, n_out), "weight", n_in),
        f"{prefix}.bias": ParamSpec((n_out,), "bias"),
    }


def channel_linear_spec(prefix: str, c_in: int, c_out: int) -> Dict[str, ParamSpec]:
    """Per-position map over the channel axis: weight (c_out×c_in) @ x (c_in×HW)."""
    return {
        f"{prefix}.weight": ParamSpec((c_out, c_in), "weight", c_in),
        f"{prefix}.bias": ParamSpec((c_out,), "bias"),
    }


def norm_spec(prefix: str, channels: int) -> Dict[str, ParamSpec]:
    return {
        f"{prefix}.gamma": ParamSpec((channels,), "gamma"),
        f"{prefix}.beta": ParamSpec((channels,), "beta"),
    }


def mlp_spec(prefix: str, channels: int, hidden: int) -> Dict[str, ParamSpec]:
    specs = linear_spec(f"{prefix}.fc1", channels, hidden)
    specs.update(linear_spec(f"{prefix}.fc2", hidden, channels))
    return specs


class ParamGroup:
    """Read-only view of the tensors under one name prefix."""

    def __init__(self, params: Mapping[str, Tensor], prefix: str):
        self._params = params
        self.prefix = prefix

    def __getitem__(self, name: str) -> Tensor:
        return self._params[f"{self.prefix}.{name}"]

    def __contains__(self, name: str) -> bool:
        return f"{self.prefix}.{name}" in self._params

    def names(self):
        head = self.prefix + "."
        return sorted(name[len(head):] for name in self._params if name.startswith(head))


class NetworkParams(Mapping[str, Tensor]):
    """Name-ordered map of every learnable tensor plus the config that shaped them."""

    def __init__(self, config: NetworkConfig, tensors: Mapping[str, Tensor]):
        self.config = config
        self._tensors: Dict[str, Tensor] = {name: tensors[name] for name in sorted(tensors)}

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def group(self, prefix: str) -> ParamGroup:
        return ParamGroup(self._tensors, prefix)

    def replace(self, tensors: Mapping[str, Tensor]) -> "NetworkParams":
        if set(tensors) != set(self._tensors):
            missing = sorted(set(self._tensors) ^ set(tensors))
            raise DimensionError(f"parameter names changed: {', '.join(missing)}")
        return NetworkParams(self.config, tensors)

    def count(self) -> int:
        return int(sum(t.size for t in self._tensors.values()))

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, tensor in self._tensors.items():
            digest.update(name.encode('utf-8'))
            digest.update(np.ascontiguousarray(tensor.data, dtype='<f4').tobytes())
        return digest.hexdigest()


def init_tensors(specs: Mapping[str, ParamSpec], seed: int) -> Dict[str, Tensor]:
    """Uniform(-a, a), a = sqrt(6 / fan_in) weights; zero biases; unit gains.

    Draws happen in name order from one seeded generator.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for name in sorted(specs):
        spec = specs[name]
        if spec.kind == "weight":
            bound = np.sqrt(6.0 / spec.fan_in)
            data = rng.uniform(-bound, bound, size=spec.shape)
        elif spec.kind == "gamma":
            data = np.ones(spec.shape)
        else:
            data = np.zeros(spec.shape)
        tensors[name] = Tensor(data.astype(np.float32), requires_grad=True)
    return tensors


def save_params(params: NetworkParams, path: Path):
    entries = []
    offset = 0
    blobs = []
    for name, tensor in params.items():
        blob = np.ascontiguousarray(tensor.data, dtype='<f4').tobytes()
        entries.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps(
        {"config": params.config.model_dump(mode='json'), "tensors": entries},
        sort_keys=True,
        separators=(',', ':'),
    ).encode('utf-8')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('wb') as handle:
        handle.write(PARAMS_MAGIC)
        handle.write(struct.pack('<I', len(header)))
        handle.write(header)
        for blob in blobs:
            handle.write(blob)


def load_params(path: Path) -> NetworkParams:
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise FormatError(f"parameter file not found: {path}") from exc
    if raw[:8] != PARAMS_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}, expected {PARAMS_MAGIC!r}")
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    (header_len,) = struct.unpack('<I', raw[8:12])
    header_end = 12 + header_len
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12:header_end].decode('utf-8'))
        config = parse_config(NetworkConfig, header["config"])
        entries = [(e["name"], tuple(int(n) for n in e["shape"]), int(e["offset"])) for e in header["tensors"]]
    except ConfigError as exc:
        raise FormatError(f"{path}: header holds an invalid network config ({exc.detail})") from exc
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: unreadable header ({exc!r})") from exc

    # late import: the network module builds on this one
    from .network import param_specs

    expected = {name: spec.shape for name, spec in param_specs(config).items()}
    found = {name: shape for name, shape, _ in entries}
    missing = sorted(set(expected) - set(found))
    unexpected = sorted(set(found) - set(expected))
    if missing or unexpected:
        raise FormatError(
            f"{path}: tensors do not match the network config "
            f"(missing {missing or '-'}, unexpected {unexpected or '-'})"
        )
    for name, shape in found.items():
        if shape != tuple(expected[name]):
            raise FormatError(f"{path}: tensor {name} has shape {shape}, config expects {tuple(expected[name])}")

    blob = raw[header_end:]
    tensors = {}
    for name, shape, start in entries:
        stop = start + 4 * int(np.prod(shape, dtype=np.int64))
        if start < 0 or stop > len(blob):
            raise FormatError(f"{path}: tensor {name} runs past the end of the file")
        data = np.frombuffer(blob[start:stop], dtype='<f4').astype(np.float32).reshape(shape)
        tensors[name] = Tensor(data, requires_grad=True)
    return NetworkParams(config, tensors)
