import math

import numpy as np
import pytest

from wfanet.core.config import NetworkConfig, TripletPermutation, network_config
from wfanet.core.errors import DimensionError
from wfanet.diagnostics import run_battery
from wfanet.engine import Tensor, no_grad
from wfanet.model.mffa import (
    MffaParams,
    attention_maps,
    attention_reconstruct,
    generate_triplet,
    mffa_forward,
    mffa_param_specs,
    scaled_attention,
)
from wfanet.model.params import init_tensors


def _block(config: NetworkConfig, prefix: str = "mffa") -> MffaParams:
    return MffaParams(init_tensors(mffa_param_specs(config, prefix), config.seed), prefix, config)


def _maps(seed: int, channels: int, size: int):
    rng = np.random.default_rng(seed)
    p = Tensor(rng.standard_normal((channels, 2 * size, 2 * size)).astype(np.float32))
    m = Tensor(rng.standard_normal((channels, size, size)).astype(np.float32))
    return p, m


def test_triplet_and_output_shapes_at_full_width():
    config = network_config(channels=32)
    params = _block(config)
    p, m = _maps(0, 32, 32)
    with no_grad():
        triplet = generate_triplet(p, m, params)
        out = mffa_forward(p, m, params)
    assert (triplet.tokens, triplet.channels) == (1024, 32)
    assert triplet.grid == (32, 32)
    assert out.shape == (32, 64, 64)


def test_factor_two_contract():
    config = network_config(channels=4)
    params = _block(config)
    p = Tensor(np.zeros((4, 64, 64)))
    with pytest.raises(DimensionError):
        generate_triplet(p, Tensor(np.zeros((4, 16, 16))), params)
    with pytest.raises(DimensionError):
        mffa_forward(p, Tensor(np.zeros((3, 32, 32))), params)


def test_attention_rows_are_stochastic():
    config = network_config(channels=4)
    params = _block(config)
    p, m = _maps(1, 4, 4)
    with no_grad():
        maps = attention_maps(generate_triplet(p, m, params), params)
    assert sorted(maps) == ["hh", "hl", "lh", "ll"]
    for weights in maps.values():
        assert weights.shape == (16, 16)
        assert np.all(weights.data >= 0)
        assert np.allclose(weights.data.sum(axis=1), 1.0, atol=1e-5)


def test_identical_keys_give_uniform_rows():
    rng = np.random.default_rng(2)
    query = Tensor(rng.standard_normal((5, 3)))
    key = Tensor(np.tile(rng.standard_normal((1, 3)), (5, 1)))
    value = Tensor(rng.standard_normal((5, 3)))
    weights, attended = scaled_attention(query, key, value)
    assert np.allclose(weights.data, 0.2)
    assert np.allclose(attended.data, np.tile(value.data.mean(axis=0), (5, 1)))


def test_two_token_attention_by_hand():
    weights, attended = scaled_attention(Tensor([[1.0], [0.0]]), Tensor([[1.0], [0.0]]), Tensor([[1.0], [2.0]]))
    e = math.e
    assert np.allclose(weights.data, [[e / (e + 1), 1 / (e + 1)], [0.5, 0.5]])
    assert np.allclose(attended.data, [[(e + 2) / (e + 1)], [1.5]])


def test_attention_is_scaled_by_root_channels():
    query = Tensor([[2.0, 2.0], [0.0, 0.0]])
    key = Tensor([[1.0, 1.0], [0.0, 0.0]])
    weights, _ = scaled_attention(query, key, Tensor(np.zeros((2, 2))))
    score = 4.0 / math.sqrt(2.0)
    assert weights.data[0, 0] == pytest.approx(math.exp(score) / (math.exp(score) + 1.0))


def test_attention_is_permutation_equivariant():
    rng = np.random.default_rng(3)
    q, k, v = (rng.standard_normal((6, 4)) for _ in range(3))
    order = rng.permutation(6)
    _, base = scaled_attention(Tensor(q), Tensor(k), Tensor(v))
    _, permuted = scaled_attention(Tensor(q[order]), Tensor(k[order]), Tensor(v[order]))
    assert np.allclose(permuted.data, base.data[order])


def test_attention_rejects_mismatched_tokens():
    with pytest.raises(DimensionError):
        scaled_attention(Tensor(np.zeros((4, 2))), Tensor(np.zeros((3, 2))), Tensor(np.zeros((4, 2))))


def test_constant_pan_collapses_detail_queries():
    config = network_config(channels=4)
    params = _block(config)
    with no_grad():
        triplet = generate_triplet(Tensor(np.full((4, 8, 8), 0.3)), Tensor(np.full((4, 4, 4), 0.7)), params)
    for band in ("lh", "hl", "hh"):
        query = triplet.query(band).data
        assert np.allclose(query, query[0])


def test_forward_is_deterministic():
    config = network_config(channels=4)
    p, m = _maps(4, 4, 4)
    with no_grad():
        first = mffa_forward(p, m, _block(config)).data
        second = mffa_forward(p, m, _block(config)).data
    assert np.array_equal(first, second)


def test_parameter_names_follow_the_variant():
    names = set(mffa_param_specs(network_config(channels=4), "m"))
    assert {"m.q_ll.ln.gamma", "m.q_hh.mlp.fc2.weight", "m.k.mlp.fc1.bias", "m.v.fuse.weight"} <= names
    assert not any(".conv_" in name for name in names)

    query_ablated = set(mffa_param_specs(network_config(channels=4, query_ablation=True), "m"))
    assert "m.q.conv.weight" in query_ablated
    assert not any(name.startswith("m.q_") for name in query_ablated)

    key_ablated = set(mffa_param_specs(network_config(channels=4, key_ablation=True), "m"))
    assert "m.k.conv.weight" in key_ablated

    value_ablated = set(mffa_param_specs(network_config(channels=4, value_ablation=True), "m"))
    assert "m.v.conv.weight" in value_ablated
    assert "m.v.fuse.weight" not in value_ablated

    conv_only = set(mffa_param_specs(network_config(channels=4, use_mffa_attention=False), "m"))
    assert all(".conv_" in name for name in conv_only)
    assert "m.conv_ll.0.weight" in conv_only


@pytest.mark.parametrize("overrides", [
    {"query_ablation": True},
    {"key_ablation": True},
    {"value_ablation": True},
    {"use_mffa_attention": False},
])
def test_ablated_variants_keep_the_output_shape(overrides):
    config = network_config(channels=4, **overrides)
    p, m = _maps(5, 4, 4)
    with no_grad():
        assert mffa_forward(p, m, _block(config)).shape == (4, 8, 8)


@pytest.mark.parametrize("permutation", list(TripletPermutation))
def test_role_permutations_keep_the_output_shape(permutation):
    config = network_config(channels=4, triplet_permutation=permutation)
    p, m = _maps(6, 4, 4)
    with no_grad():
        triplet = generate_triplet(p, m, _block(config))
        bands = attention_reconstruct(triplet, _block(config))
    assert bands.shape == (4, 4, 4)


def test_permutations_change_the_result():
    p, m = _maps(7, 4, 4)
    outputs = []
    for permutation in (TripletPermutation.OURS, TripletPermutation.V3):
        config = network_config(channels=4, triplet_permutation=permutation)
        with no_grad():
            outputs.append(mffa_forward(p, m, _block(config)).data)
    assert not np.allclose(outputs[0], outputs[1])


def test_mffa_gradients_match_finite_differences():
    (result,) = run_battery(names=["mffa"])
    assert result.passed, result.error
