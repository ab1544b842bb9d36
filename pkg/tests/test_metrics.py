import numpy as np
import pytest
from pydantic import ValidationError

from wfanet.core.config import EvalMode, MetricFlags
from wfanet.core.errors import ComputationError, ConfigError, DimensionError
from wfanet.data import Raster, synth_scene, wald_degrade
from wfanet.data.degrade import degrade_array
from wfanet.metrics import (
    MetricsReport,
    cd_mult,
    d_lambda,
    d_s,
    ergas,
    evaluate_pair,
    full_report,
    hqnr,
    psnr,
    q2n,
    q2n_blocks,
    reduced_report,
    sam,
    uqi,
)


def _direct_uqi(x: np.ndarray, y: np.ndarray) -> float:
    x, y = x.astype(np.float64).ravel(), y.astype(np.float64).ravel()
    mx, my = x.mean(), y.mean()
    cov = np.mean((x - mx) * (y - my))
    return 4 * cov * mx * my / ((x.var() + y.var()) * (mx ** 2 + my ** 2))


def _pixels(*vectors) -> Raster:
    """Every pixel of a 2x2 image holds the given spectral vector."""
    return Raster(np.tile(np.array(vectors, dtype=np.float64).reshape(-1, 1, 1), (1, 2, 2)))


def _noisy(gt: Raster, sigma: float, seed: int = 0) -> Raster:
    noise = np.random.default_rng(seed).standard_normal(gt.shape)
    return Raster(gt.values + sigma * noise)


def test_identities():
    gt = synth_scene(2, 4, 64, 64)
    assert psnr(gt, gt) == 100.0
    assert sam(gt, gt) == 0.0
    assert ergas(gt, gt) == 0.0
    assert q2n(gt, gt) == pytest.approx(1.0, abs=1e-6)


def test_psnr_of_a_constant_offset():
    ref = Raster(np.full((2, 8, 8), 0.5))
    assert psnr(ref, Raster(ref.values + 0.1)) == pytest.approx(20.0, abs=1e-4)
    with pytest.raises(DimensionError):
        psnr(ref, Raster(np.zeros((2, 8, 4))))


def test_sam_angles():
    assert sam(_pixels(1.0, 0.0), _pixels(0.0, 1.0)) == pytest.approx(90.0)
    assert sam(_pixels(1.0, 1.0), _pixels(1.0, 0.0)) == pytest.approx(45.0)
    with pytest.raises(ComputationError):
        sam(_pixels(0.0, 0.0), _pixels(0.0, 0.0))


def test_sam_skips_zero_spectra():
    ref = Raster(np.array([[[1.0, 0.0]], [[0.0, 0.0]]]))
    test = Raster(np.array([[[1.0, 1.0]], [[1.0, 1.0]]]))
    assert sam(ref, test) == pytest.approx(45.0)


def test_ergas_worked_value():
    ref = Raster(np.ones((1, 8, 8)))
    assert ergas(ref, Raster(np.full((1, 8, 8), 1.04)), ratio=4) == pytest.approx(1.0, rel=1e-5)
    with pytest.raises(ComputationError) as exc:
        ergas(Raster(np.zeros((2, 4, 4))), Raster(np.ones((2, 4, 4))))
    assert "band 0" in exc.value.detail


def test_cayley_dickson_reduces_to_complex_multiplication():
    a = np.array([1.0, 2.0])
    b = np.array([3.0, -1.0])
    product = complex(1, 2) * complex(3, -1)
    assert np.allclose(cd_mult(a, b), [product.real, product.imag])


def test_quaternion_norm_is_multiplicative():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(4), rng.standard_normal(4)
    assert np.linalg.norm(cd_mult(a, b)) == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b))


def test_single_band_q2n_matches_the_scalar_index():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.2, 0.8, size=(32, 32))
    y = 2 * x.mean() - x
    value = q2n(Raster(x[np.newaxis]), Raster(y[np.newaxis]))
    assert value < 1.0
    assert value == pytest.approx(_direct_uqi(x.astype(np.float32), y.astype(np.float32)), abs=1e-6)


def test_degenerate_blocks_count_as_zero():
    quality = q2n_blocks(Raster(np.full((2, 64, 64), 0.3)), Raster(np.full((2, 64, 64), 0.6)))
    assert quality.degenerate == 4
    assert quality.mean == 0.0


def test_q2n_requires_a_full_block():
    with pytest.raises(DimensionError):
        q2n(Raster(np.zeros((2, 16, 16))), Raster(np.zeros((2, 16, 16))), block=32)


def test_q2n_pads_odd_band_counts():
    gt = synth_scene(5, 3, 32, 32)
    assert q2n(gt, gt) == pytest.approx(1.0, abs=1e-6)


def test_hqnr_values():
    assert hqnr(0.0, 0.0) == 1.0
    assert hqnr(0.017, 0.027) == pytest.approx(0.95646, abs=1e-5)
    assert hqnr(1.0, 0.3) == 0.0


def test_reduced_metrics_degrade_with_noise():
    gt = synth_scene(6, 4, 64, 64)
    runs = [reduced_report(gt, _noisy(gt, sigma), MetricFlags()) for sigma in (0.01, 0.02, 0.05)]
    assert runs[0].psnr > runs[1].psnr > runs[2].psnr
    assert runs[0].sam < runs[1].sam < runs[2].sam
    assert runs[0].ergas < runs[1].ergas < runs[2].ergas
    assert runs[0].q2n > runs[1].q2n > runs[2].q2n


def test_d_lambda_is_zero_when_degradation_reproduces_ms():
    fused = synth_scene(9, 4, 64, 64)
    assert d_lambda(fused, wald_degrade(fused, 4), ratio=4) == pytest.approx(0.0, abs=1e-6)


def test_d_lambda_of_a_replicated_ms():
    ms = wald_degrade(synth_scene(10, 4, 64, 64), 4)
    upsampled = Raster(np.repeat(np.repeat(ms.values, 4, axis=1), 4, axis=2))
    value = d_lambda(upsampled, ms, ratio=4)
    direct = 1.0 - q2n(ms, wald_degrade(upsampled, 4), block=8)
    assert value == pytest.approx(direct, abs=1e-9)
    assert 0.0 <= value < 0.5


def test_d_lambda_ratio_mismatch():
    fused = synth_scene(1, 2, 64, 64)
    with pytest.raises(DimensionError):
        d_lambda(fused, wald_degrade(fused, 4), ratio=2)


def test_d_s_is_zero_when_every_band_is_the_pan():
    pan = synth_scene(11, 1, 64, 64)
    low = degrade_array(pan.values.astype(np.float64), 4)
    fused = Raster(np.repeat(pan.values, 2, axis=0))
    ms = Raster(np.repeat(low, 2, axis=0))
    assert d_s(fused, ms, pan, ratio=4) == pytest.approx(0.0, abs=1e-5)


def test_single_band_d_s_matches_direct_arithmetic():
    scene = synth_scene(12, 2, 64, 64)
    fused, pan = Raster(scene.values[:1]), Raster(scene.values[1:])
    ms = wald_degrade(synth_scene(13, 1, 64, 64), 4)
    pan_low = degrade_array(pan.values[0].astype(np.float64), 4)
    expected = abs(uqi(fused.values[0], pan.values[0], 32) - uqi(ms.values[0], pan_low, 8))
    assert d_s(fused, ms, pan, ratio=4) == pytest.approx(expected, abs=1e-12)


def test_d_s_shape_errors():
    fused = synth_scene(1, 2, 64, 64)
    pan = synth_scene(2, 1, 64, 64)
    with pytest.raises(DimensionError):
        d_s(fused, Raster(np.zeros((2, 8, 8))), pan)
    with pytest.raises(DimensionError):
        d_s(fused, wald_degrade(fused, 4), synth_scene(2, 1, 32, 32))


def test_full_report_is_consistent():
    fused = synth_scene(14, 2, 64, 64)
    report = full_report(fused, wald_degrade(fused, 4), synth_scene(15, 1, 64, 64), MetricFlags(mode=EvalMode.FULL))
    assert report.computed == ["d_lambda", "d_s", "hqnr"]
    assert report.hqnr == pytest.approx((1 - report.d_lambda) * (1 - report.d_s))


def test_evaluate_pair_needs_its_inputs():
    fused = synth_scene(1, 2, 64, 64)
    with pytest.raises(ConfigError):
        evaluate_pair(fused, MetricFlags())
    with pytest.raises(ConfigError):
        evaluate_pair(fused, MetricFlags(mode=EvalMode.FULL), ms=wald_degrade(fused, 4))
    assert evaluate_pair(fused, MetricFlags(), ref=fused).computed == ["psnr", "sam", "ergas", "q2n"]


def test_report_json_round_trip():
    report = MetricsReport(psnr=31.5, sam=2.25, ergas=1.5, q2n=0.9, degenerate_blocks=1)
    restored = MetricsReport.model_validate_json(report.model_dump_json())
    assert restored == report
    assert restored.computed == ["psnr", "sam", "ergas", "q2n"]


def test_report_rejects_inconsistent_hqnr():
    with pytest.raises(ValidationError):
        MetricsReport(d_lambda=0.1, d_s=0.1, hqnr=0.5)
    with pytest.raises(ValidationError):
        MetricsReport(sam=-1.0)
