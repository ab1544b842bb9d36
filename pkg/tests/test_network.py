import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wfanet.core.config import NetworkConfig, TripletPermutation, network_config
from wfanet.core.errors import ConfigError, DimensionError, FormatError
from wfanet.data.raster import Raster
from wfanet.diagnostics import run_battery
from wfanet.engine import Tensor, no_grad
from wfanet.model.mffa import MffaParams, mffa_forward
from wfanet.model.network import fuse_rasters, init_params, param_specs, scale_step, wfanet_forward
from wfanet.model.params import PARAMS_MAGIC, NetworkParams, load_params, save_params
from wfanet.training.ablation import ablation_param_names

DEFAULT_PARAM_COUNT = 151848


def _toy(**overrides) -> NetworkConfig:
    values = dict(channels=4, ms_bands=2, ratio=4, scales=2, seed=1)
    values.update(overrides)
    return network_config(**values)


def _inputs(seed: int, bands: int, size: int, ratio: int = 4):
    rng = np.random.default_rng(seed)
    pan = Tensor(rng.random((1, size, size)).astype(np.float32))
    lrms = Tensor(rng.random((bands, size // ratio, size // ratio)).astype(np.float32))
    return pan, lrms


def _forward(config: NetworkConfig, seed: int = 0, size: int = 16):
    pan, lrms = _inputs(seed, config.ms_bands, size, config.ratio)
    with no_grad():
        return wfanet_forward(pan, lrms, init_params(config))


def test_default_network_output_shape():
    config = network_config()
    out = _forward(config, size=64)
    assert out.shape == (8, 64, 64)


def test_reduced_network_output_shape():
    out = _forward(network_config(ms_bands=4), size=32)
    assert out.shape == (4, 32, 32)


def test_default_parameter_count():
    params = init_params(network_config())
    assert params.count() == DEFAULT_PARAM_COUNT
    assert len(params) == len(param_specs(network_config()))


def test_initialisation_is_seeded():
    config = _toy()
    assert init_params(config).checksum() == init_params(config).checksum()
    assert init_params(config).checksum() != init_params(_toy(seed=2)).checksum()


def test_initialisation_ranges():
    params = init_params(_toy())
    for name, tensor in params.items():
        if name.endswith(".bias") or name.endswith(".beta"):
            assert np.all(tensor.data == 0.0), name
        elif name.endswith(".gamma"):
            assert np.all(tensor.data == 1.0), name
        else:
            if tensor.ndim == 4:
                fan_in = int(np.prod(tensor.shape[1:]))
            elif ".sdem." in name:
                fan_in = tensor.shape[1]
            else:
                fan_in = tensor.shape[0]
            assert np.max(np.abs(tensor.data)) <= np.sqrt(6.0 / fan_in) * (1 + 1e-6), name


def test_invalid_configs():
    with pytest.raises(ConfigError):
        network_config(channels=0)
    with pytest.raises(ConfigError) as exc:
        network_config(ratio=8, scales=2)
    assert "2**scales" in exc.value.detail
    with pytest.raises(ConfigError):
        init_params({"channels": 4, "bogus": 1})


def test_forward_is_deterministic():
    config = _toy()
    assert np.array_equal(_forward(config).data, _forward(config).data)


def test_forward_checks_inputs():
    config = _toy()
    params = init_params(config)
    pan, lrms = _inputs(0, 2, 16)
    with pytest.raises(DimensionError):
        wfanet_forward(pan, Tensor(np.zeros((2, 8, 8))), params)
    with pytest.raises(DimensionError):
        wfanet_forward(pan, Tensor(np.zeros((3, 4, 4))), params)
    with pytest.raises(ConfigError):
        wfanet_forward(pan, lrms, params, _toy(seed=9))


@pytest.mark.parametrize("name, absent", [
    ("no_sdem", ".sdem."),
    ("no_attention", ".q_ll."),
    ("query_ablation", ".q_ll."),
    ("value_ablation", ".v.fuse."),
])
def test_ablations_drop_their_parameters(name, absent):
    base = _toy()
    full = set(init_params(base))
    ablated = set(ablation_param_names(base, name))
    assert any(absent in n for n in full)
    assert not any(absent in n for n in ablated)


def test_single_scale_has_one_fusion_step():
    names = ablation_param_names(_toy(), "single_scale")
    assert any(n.startswith("scale0.") for n in names)
    assert not any(n.startswith("scale1.") for n in names)
    assert _forward(_toy(multi_scale=False)).shape == (2, 16, 16)


@pytest.mark.parametrize("permutation", list(TripletPermutation))
def test_permutations_keep_the_output_shape(permutation):
    assert _forward(_toy(triplet_permutation=permutation)).shape == (2, 16, 16)


@pytest.mark.parametrize("overrides", [
    {"use_sdem": False},
    {"use_mffa_attention": False},
    {"fab_or_cb": "cb"},
    {"key_ablation": True},
])
def test_variants_run_end_to_end(overrides):
    assert _forward(_toy(**overrides)).shape == (2, 16, 16)


def test_scale_step_without_sdem_is_the_attention_output():
    config = _toy(use_sdem=False)
    params = init_params(config)
    rng = np.random.default_rng(3)
    p = Tensor(rng.standard_normal((4, 8, 8)))
    m = Tensor(rng.standard_normal((4, 4, 4)))
    with no_grad():
        stepped = scale_step(m, p, params, config, 1)
        attended = mffa_forward(p, m, MffaParams(params, "scale1.mffa", config))
    assert np.array_equal(stepped.data, attended.data)


def test_fuse_rasters_clamps():
    config = _toy()
    pan, lrms = _inputs(4, 2, 16)
    fused = fuse_rasters(Raster(pan.data), Raster(lrms.data, bit_depth=12), init_params(config))
    assert fused.shape == (2, 16, 16)
    assert fused.bit_depth == 12
    assert fused.values.min() >= 0.0 and fused.values.max() <= 1.0


def test_parameter_file_round_trip(tmp_path):
    params = init_params(_toy(value_ablation=True))
    path = tmp_path / "model.wfpm"
    save_params(params, path)
    restored = load_params(path)
    assert restored.config == params.config
    assert restored.checksum() == params.checksum()
    assert list(restored) == list(params)


def test_parameter_file_errors(tmp_path):
    path = tmp_path / "model.wfpm"
    save_params(init_params(_toy()), path)
    raw = path.read_bytes()
    assert raw.startswith(PARAMS_MAGIC)

    bad_magic = tmp_path / "bad.wfpm"
    bad_magic.write_bytes(b"XXXXv001" + raw[8:])
    with pytest.raises(FormatError):
        load_params(bad_magic)

    truncated = tmp_path / "short.wfpm"
    truncated.write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        load_params(truncated)

    with pytest.raises(FormatError):
        load_params(tmp_path / "missing.wfpm")


def test_network_gradients_match_finite_differences():
    results = run_battery(names=["scale_step", "network"])
    assert all(result.passed for result in results), [r.error for r in results]


def test_parameter_files_are_byte_reproducible(tmp_path):
    save_params(init_params(_toy()), tmp_path / "a.wfpm")
    save_params(init_params(_toy()), tmp_path / "b.wfpm")
    assert (tmp_path / "a.wfpm").read_bytes() == (tmp_path / "b.wfpm").read_bytes()


def _rewrite_header(source, target, edit):
    raw = source.read_bytes()
    (length,) = struct.unpack('<I', raw[8:12])
    header = json.loads(raw[12:12 + length])
    edit(header)
    encoded = json.dumps(header).encode('utf-8')
    target.write_bytes(raw[:8] + struct.pack('<I', len(encoded)) + encoded + raw[12 + length:])


def test_parameter_file_must_match_its_config(tmp_path):
    params = init_params(_toy())
    partial = tmp_path / "partial.wfpm"
    save_params(NetworkParams(params.config, {n: t for n, t in params.items() if n != "head.bias"}), partial)
    with pytest.raises(FormatError, match="head.bias"):
        load_params(partial)

    full = tmp_path / "model.wfpm"
    save_params(params, full)

    def shrink_head_bias(header):
        for entry in header["tensors"]:
            if entry["name"] == "head.bias":
                entry["shape"] = [1]

    reshaped = tmp_path / "reshaped.wfpm"
    _rewrite_header(full, reshaped, shrink_head_bias)
    with pytest.raises(FormatError, match="head.bias"):
        load_params(reshaped)

    bad_config = tmp_path / "bad_config.wfpm"
    _rewrite_header(full, bad_config, lambda header: header["config"].update(channels=0))
    with pytest.raises(FormatError, match="network config"):
        load_params(bad_config)

    no_offset = tmp_path / "no_offset.wfpm"
    _rewrite_header(full, no_offset, lambda header: header["tensors"][0].pop("offset"))
    with pytest.raises(FormatError, match="unreadable header"):
        load_params(no_offset)


@settings(max_examples=25, deadline=None)
@given(
    scales=st.integers(1, 3),
    bands=st.integers(1, 3),
    height=st.integers(1, 4),
    width=st.integers(1, 4),
    multi_scale=st.booleans(),
)
def test_output_shape_follows_any_valid_geometry(scales, bands, height, width, multi_scale):
    ratio = 2 ** scales
    config = network_config(channels=2, ms_bands=bands, ratio=ratio, scales=scales, multi_scale=multi_scale)
    rng = np.random.default_rng([scales, bands, height, width])
    pan = Tensor(rng.random((1, ratio * height, ratio * width)).astype(np.float32))
    lrms = Tensor(rng.random((bands, height, width)).astype(np.float32))
    with no_grad():
        out = wfanet_forward(pan, lrms, init_params(config))
    assert out.shape == (bands, ratio * height, ratio * width)
    assert np.isfinite(out.data).all()
