import numpy as np
import pytest
from scipy.special import expit

from wfanet.core.config import DetailBlock, network_config
from wfanet.core.errors import DimensionError
from wfanet.diagnostics import run_battery
from wfanet.engine import Tensor, no_grad
from wfanet.model.params import ParamGroup, init_tensors
from wfanet.model.sdem import SdemParams, cb_forward, fab_forward, sdem_forward, sdem_param_specs
from wfanet.model.wavelet import BAND_NAMES, WaveletBands, dwt2, idwt2


def _fab_group(weight, bias, prefix: str = "band") -> ParamGroup:
    return ParamGroup({f"{prefix}.fab0.weight": Tensor(weight), f"{prefix}.fab0.bias": Tensor(bias)}, prefix)


def _zeroed(params: SdemParams) -> SdemParams:
    zeros = {name: Tensor(np.zeros(t.shape)) for name, t in params._params.items()}
    return SdemParams(zeros, params.prefix, params.config)


def _block(**overrides) -> SdemParams:
    config = network_config(channels=2, **overrides)
    return SdemParams(init_tensors(sdem_param_specs(config, "sdem"), 5), "sdem", config)


def test_zero_affine_gives_half():
    out = fab_forward(Tensor(np.random.default_rng(0).standard_normal((2, 3, 3))),
                      _fab_group(np.zeros((2, 2)), np.zeros(2)), 1)
    assert np.all(out.data == 0.5)


def test_identity_weights_on_zero_input_give_half():
    out = fab_forward(Tensor(np.zeros((2, 2, 2))), _fab_group(np.eye(2), np.zeros(2)), 1)
    assert np.all(out.data == 0.5)


def test_two_channel_affine_by_hand():
    band = np.array([[[1.0, 2.0], [0.0, -1.0]], [[0.5, 0.0], [3.0, 1.0]]])
    weight = np.array([[1.0, -2.0], [0.5, 1.0]])
    bias = np.array([0.1, -0.3])
    out = fab_forward(Tensor(band), _fab_group(weight, bias), 1).data
    for i in range(2):
        for j in range(2):
            expected = expit(weight @ band[:, i, j] + bias)
            assert np.allclose(out[:, i, j], expected)


def test_fab_rejects_wrong_width():
    with pytest.raises(DimensionError):
        fab_forward(Tensor(np.zeros((3, 2, 2))), _fab_group(np.zeros((2, 2)), np.zeros(2)), 1)


def test_zero_weights_reconstruct_a_fixed_pattern():
    out = sdem_forward(Tensor(np.random.default_rng(1).standard_normal((2, 8, 8))), _zeroed(_block())).data
    expected = np.zeros((2, 8, 8))
    expected[:, 0::2, 0::2] = 2.0
    assert np.allclose(out, expected)


def test_sdem_preserves_shape_and_fab_range():
    params = _block()
    p = Tensor(np.random.default_rng(2).standard_normal((2, 8, 12)))
    with no_grad():
        assert sdem_forward(p, params).shape == (2, 8, 12)
        band = fab_forward(Tensor(np.random.default_rng(3).standard_normal((2, 4, 6)) * 10),
                           params.band("lh"), params.blocks)
    assert np.all((band.data > 0) & (band.data < 1))


def test_parameter_layout():
    names = set(sdem_param_specs(network_config(channels=2, fab_count=2), "s"))
    assert names == {f"s.{band}.fab{j}.{kind}" for band in BAND_NAMES for j in range(2) for kind in ("weight", "bias")}
    cb_names = set(sdem_param_specs(network_config(channels=2, fab_or_cb=DetailBlock.CB, cb_count=1), "s"))
    assert cb_names == {f"s.{band}.cb0.{kind}" for band in BAND_NAMES for kind in ("weight", "bias")}


def test_convolution_block_variant():
    params = _block(fab_or_cb=DetailBlock.CB)
    assert params.blocks == params.config.cb_count
    with no_grad():
        band = cb_forward(Tensor(np.random.default_rng(4).standard_normal((2, 4, 4))), params.band("hh"), params.blocks)
        out = sdem_forward(Tensor(np.random.default_rng(5).standard_normal((2, 8, 8))), params)
    assert np.all(band.data >= 0)
    assert out.shape == (2, 8, 8)


def test_sdem_gradients_match_finite_differences():
    (result,) = run_battery(names=["sdem"])
    assert result.passed, result.error


def _with_bands(bands: WaveletBands, **replaced) -> Tensor:
    values = {name: replaced.get(name, band) for name, band in bands.items()}
    return idwt2(WaveletBands(**values))


def test_each_output_band_depends_only_on_its_input_band():
    params = _block()
    p = Tensor(np.random.default_rng(6).standard_normal((2, 8, 8)))
    bands = dwt2(p)
    zeros = Tensor(np.zeros(bands.lh.shape))
    with no_grad():
        out = dwt2(sdem_forward(p, params))
        detail_free = dwt2(sdem_forward(_with_bands(bands, lh=zeros, hl=zeros, hh=zeros), params))
        new_ll = Tensor(np.random.default_rng(7).standard_normal(bands.ll.shape))
        ll_swapped = dwt2(sdem_forward(_with_bands(bands, ll=new_ll), params))
        silent = {name: fab_forward(zeros, params.band(name), params.blocks).data for name in ("lh", "hl", "hh")}

    # dropping the details leaves the LL pathway untouched
    assert np.allclose(detail_free.ll.data, out.ll.data, atol=1e-5)
    for name, expected in silent.items():
        assert np.allclose(getattr(detail_free, name).data, expected, atol=1e-5)
        assert not np.allclose(getattr(out, name).data, expected, atol=1e-3)

    # replacing LL moves only the LL pathway
    assert not np.allclose(ll_swapped.ll.data, out.ll.data, atol=1e-3)
    for name in ("lh", "hl", "hh"):
        assert np.allclose(getattr(ll_swapped, name).data, getattr(out, name).data, atol=1e-5)
