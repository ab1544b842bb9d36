"""Multi-Frequency Fusion Attention.

PAN features P (C×2H×2W) are split by the Haar DWT into four bands on the
H×W grid of the MS features M. Frequency-Queries come from each band,
the Spatial-Key from the LL band and the Fusion-Value from a convolution
over [M, P_LL]. Attention runs per band over the N = H·W spatial tokens
and the four attended bands are recombined by the IDWT, so the output is
twice the spatial size of M.
"""
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

from ..core.config import NetworkConfig, TripletPermutation
from ..core.errors import DimensionError
from ..engine import ops
from ..engine.tensor import Tensor
from . import layers
from .params import ParamGroup, ParamSpec, conv_spec, mlp_spec, norm_spec
from .wavelet import BAND_NAMES, WaveletBands, dwt2, idwt2

FREQUENCY_QUERY = "fq"
SPATIAL_KEY = "sk"
FUSION_VALUE = "fv"

# (query, key, value) sources for each role assignment.
TRIPLET_ROLES: Dict[TripletPermutation, Tuple[str, str, str]] = {
    TripletPermutation.OURS: (FREQUENCY_QUERY, SPATIAL_KEY, FUSION_VALUE),
    TripletPermutation.V1: (FREQUENCY_QUERY, FUSION_VALUE, SPATIAL_KEY),
    TripletPermutation.V2: (SPATIAL_KEY, FREQUENCY_QUERY, FUSION_VALUE),
    TripletPermutation.V3: (SPATIAL_KEY, FUSION_VALUE, FREQUENCY_QUERY),
    TripletPermutation.V4: (FUSION_VALUE, FREQUENCY_QUERY, SPATIAL_KEY),
    TripletPermutation.V5: (FUSION_VALUE, SPATIAL_KEY, FREQUENCY_QUERY),
}

CONV_FUSION_DEPTH = 3


class MffaParams(ParamGroup):
    def __init__(self, params: Mapping[str, Tensor], prefix: str, config: NetworkConfig):
        super().__init__(params, prefix)
        self.config = config


@dataclass(frozen=True)
class FrequencyTriplet:
    q_ll: Tensor
    q_lh: Tensor
    q_hl: Tensor
    q_hh: Tensor
    k: Tensor
    v: Tensor
    grid: Tuple[int, int]

    def __post_init__(self):
        shapes = {t.shape for t in (self.q_ll, self.q_lh, self.q_hl, self.q_hh, self.k, self.v)}
        if len(shapes) != 1:
            raise DimensionError(f"triplet tensors disagree in N×C: {sorted(shapes)}")
        (shape,) = shapes
        if len(shape) != 2 or shape[0] != self.grid[0] * self.grid[1]:
            raise DimensionError(f"triplet tokens {shape} do not match grid {self.grid}")

    def query(self, band: str) -> Tensor:
        return getattr(self, f"q_{band}")

    @property
    def tokens(self) -> int:
        return self.k.shape[0]

    @property
    def channels(self) -> int:
        return self.k.shape[1]


def mffa_param_specs(config: NetworkConfig, prefix: str) -> Dict[str, ParamSpec]:
    c, hidden = config.channels, config.hidden
    specs: Dict[str, ParamSpec] = {}
    if not config.use_mffa_attention:
        for band in BAND_NAMES:
            specs.update(conv_spec(f"{prefix}.conv_{band}.0", 2 * c, c))
            for depth in range(1, CONV_FUSION_DEPTH):
                specs.update(conv_spec(f"{prefix}.conv_{band}.{depth}", c, c))
        return specs

    query_paths = ["q"] if config.query_ablation else [f"q_{band}" for band in BAND_NAMES]
    if config.query_ablation:
        specs.update(conv_spec(f"{prefix}.q.conv", c, c))
    if config.key_ablation:
        specs.update(conv_spec(f"{prefix}.k.conv", c, c))
    if config.value_ablation:
        specs.update(conv_spec(f"{prefix}.v.conv", c, c))
    else:
        specs.update(conv_spec(f"{prefix}.v.fuse", 2 * c, c))
    for path in query_paths + ["k", "v"]:
        specs.update(norm_spec(f"{prefix}.{path}.ln", c))
        specs.update(mlp_spec(f"{prefix}.{path}.mlp", c, hidden))
    for band in BAND_NAMES:
        specs.update(mlp_spec(f"{prefix}.out_{band}.mlp", c, hidden))
    return specs


def _check_factor_two(p: Tensor, m: Tensor):
    if p.ndim != 3 or m.ndim != 3:
        raise DimensionError(f"MFFA expects C×H×W inputs, got P {p.shape} and M {m.shape}")
    if p.shape[0] != m.shape[0]:
        raise DimensionError(f"MFFA channel widths differ: P has {p.shape[0]}, M has {m.shape[0]}")
    if p.shape[1] != 2 * m.shape[1] or p.shape[2] != 2 * m.shape[2]:
        raise DimensionError(
            f"P extents {p.shape[1:]} must be exactly twice M extents {m.shape[1:]}"
        )


def _encode(x: Tensor, params: MffaParams, path: str) -> Tensor:
    tokens = layers.norm(layers.to_tokens(x), params, f"{path}.ln", params.config.ln_eps)
    return layers.mlp(tokens, params, f"{path}.mlp")


def generate_triplet(p: Tensor, m: Tensor, params: MffaParams) -> FrequencyTriplet:
    _check_factor_two(p, m)
    config = params.config
    bands = dwt2(p)

    if config.query_ablation:
        shared = _encode(ops.decimate2(layers.conv(p, params, "q.conv")), params, "q")
        queries = {band: shared for band in BAND_NAMES}
    else:
        queries = {name: _encode(band, params, f"q_{name}") for name, band in bands.items()}

    key_source = ops.decimate2(layers.conv(p, params, "k.conv")) if config.key_ablation else bands.ll
    key = _encode(key_source, params, "k")

    if config.value_ablation:
        value_source = layers.conv(m, params, "v.conv")
    else:
        value_source = layers.conv(ops.concat([m, bands.ll], axis=0), params, "v.fuse")
    value = _encode(value_source, params, "v")

    return FrequencyTriplet(
        q_ll=queries["ll"], q_lh=queries["lh"], q_hl=queries["hl"], q_hh=queries["hh"],
        k=key, v=value, grid=(m.shape[1], m.shape[2]),
    )


def scaled_attention(query: Tensor, key: Tensor, value: Tensor) -> Tuple[Tensor, Tensor]:
    """Returns (attention map S, attended tokens S·V); S rows sum to one."""
    if query.ndim != 2 or query.shape != key.shape or key.shape != value.shape:
        raise DimensionError(
            f"attention needs equal N×C tokens, got Q {query.shape}, K {key.shape}, V {value.shape}"
        )
    scores = ops.scale(ops.matmul(query, ops.transpose(key)), 1.0 / math.sqrt(query.shape[1]))
    weights = ops.softmax(scores, axis=-1)
    return weights, ops.matmul(weights, value)


def _role_sources(triplet: FrequencyTriplet, band: str, permutation: TripletPermutation):
    sources = {
        FREQUENCY_QUERY: triplet.query(band),
        SPATIAL_KEY: triplet.k,
        FUSION_VALUE: triplet.v,
    }
    return tuple(sources[role] for role in TRIPLET_ROLES[permutation])


def attention_maps(triplet: FrequencyTriplet, params: MffaParams) -> Dict[str, Tensor]:
    maps = {}
    for band in BAND_NAMES:
        query, key, value = _role_sources(triplet, band, params.config.triplet_permutation)
        maps[band], _ = scaled_attention(query, key, value)
    return maps


def attention_reconstruct(triplet: FrequencyTriplet, params: MffaParams) -> WaveletBands:
    h, w = triplet.grid
    out = {}
    for band in BAND_NAMES:
        query, key, value = _role_sources(triplet, band, params.config.triplet_permutation)
        _, attended = scaled_attention(query, key, value)
        refined = ops.add(layers.mlp(attended, params, f"out_{band}.mlp"), attended)
        out[band] = layers.from_tokens(refined, h, w)
    return WaveletBands(**out)


def conv_fusion(p: Tensor, m: Tensor, params: MffaParams) -> WaveletBands:
    """Attention-free variant: each band is concatenated with M and run through a conv stack."""
    _check_factor_two(p, m)
    out = {}
    for name, band in dwt2(p).items():
        x = ops.concat([m, band], axis=0)
        for depth in range(CONV_FUSION_DEPTH):
            x = layers.conv(x, params, f"conv_{name}.{depth}")
            if depth < CONV_FUSION_DEPTH - 1:
                x = ops.relu(x)
        out[name] = x
    return WaveletBands(**out)


def mffa_forward(p: Tensor, m: Tensor, params: MffaParams) -> Tensor:
    if params.config.use_mffa_attention:
        bands = attention_reconstruct(generate_triplet(p, m, params), params)
    else:
        bands = conv_fusion(p, m, params)
    return idwt2(bands)
