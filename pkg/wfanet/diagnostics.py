"""Gradient-check battery over every differentiable op and the assembled network."""
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .core.config import NetworkConfig, network_config
from .core.errors import ConfigError
from .core.log import get_logger
from .engine import ops
from .engine.gradcheck import grad_check
from .engine.tensor import Tensor
from .model.mffa import MffaParams, mffa_forward, mffa_param_specs
from .model.network import init_params, scale_step, wfanet_forward
from .model.params import init_tensors
from .model.sdem import SdemParams, sdem_forward, sdem_param_specs
from .model.wavelet import WaveletBands, dwt2, idwt2

logger = get_logger('diagnostics')

DEFAULT_TOLERANCE = 1e-3

Check = Tuple[Callable[..., Tensor], List[Tensor], float]


class GradCheckResult(BaseModel):
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _tensor(rng: np.random.Generator, *shape: int, away_from_zero: bool = False) -> Tensor:
    data = rng.standard_normal(shape)
    if away_from_zero:
        data = np.sign(data) * (0.2 + np.abs(data))
    return Tensor(data, requires_grad=True)


def _weighted(out: Tensor, seed: int) -> Tensor:
    """Scalar sum(out * w) with fixed random weights."""
    weights = _rng(seed).standard_normal(out.shape)
    return ops.sum(ops.mul(out, Tensor(weights.astype(out.dtype))))


def _unary(op: Callable[[Tensor], Tensor], *shape: int, away_from_zero: bool = False):
    def build(seed: int) -> Check:
        x = _tensor(_rng(seed), *shape, away_from_zero=away_from_zero)
        return (lambda t: _weighted(op(t), seed + 1)), [x], 1e-3
    return build


def _binary(op: Callable[[Tensor, Tensor], Tensor], a_shape, b_shape):
    def build(seed: int) -> Check:
        rng = _rng(seed)
        a, b = _tensor(rng, *a_shape), _tensor(rng, *b_shape)
        return (lambda x, y: _weighted(op(x, y), seed + 1)), [a, b], 1e-3
    return build


def _conv(seed: int) -> Check:
    rng = _rng(seed)
    x, w, b = _tensor(rng, 2, 5, 4), _tensor(rng, 3, 2, 3, 3), _tensor(rng, 3)
    return (lambda *t: _weighted(ops.conv2d(*t), seed + 1)), [x, w, b], 1e-3


def _layer_norm(seed: int) -> Check:
    rng = _rng(seed)
    x, gamma, beta = _tensor(rng, 5, 4), _tensor(rng, 4), _tensor(rng, 4)
    return (lambda *t: _weighted(ops.layer_norm(*t, eps=1e-5), seed + 1)), [x, gamma, beta], 1e-3


def _softmax_matmul(seed: int) -> Check:
    rng = _rng(seed)
    q, v = _tensor(rng, 4, 4), _tensor(rng, 4, 4)
    return (lambda a, b: _weighted(ops.matmul(ops.softmax(a), b), seed + 1)), [q, v], 1e-3


def _l1(seed: int) -> Check:
    rng = _rng(seed)
    target = rng.standard_normal((3, 4))
    offset = np.sign(rng.standard_normal((3, 4))) * (0.2 + rng.random((3, 4)))
    pred = Tensor(target + offset, requires_grad=True)
    return (lambda p: ops.l1_loss(p, Tensor(target))), [pred], 1e-3


def _concat(seed: int) -> Check:
    rng = _rng(seed)
    a, b = _tensor(rng, 2, 3, 4), _tensor(rng, 1, 3, 4)
    return (lambda x, y: _weighted(ops.concat([x, y], axis=0), seed + 1)), [a, b], 1e-3


def _idwt(seed: int) -> Check:
    rng = _rng(seed)
    bands = [_tensor(rng, 2, 3, 3) for _ in range(4)]
    return (lambda *t: _weighted(idwt2(WaveletBands(*t)), seed + 1)), bands, 1e-3


def _toy_config(**overrides) -> NetworkConfig:
    settings = dict(channels=4, ms_bands=2, ratio=4, scales=2, seed=3)
    settings.update(overrides)
    return network_config(**settings)


def _block_check(kind: str):
    def build(seed: int) -> Check:
        config = _toy_config(channels=2)
        rng = _rng(seed)
        p = _tensor(rng, 2, 8, 8)
        m = _tensor(rng, 2, 4, 4)
        if kind == "mffa":
            specs = mffa_param_specs(config, "block")
        else:
            specs = sdem_param_specs(config, "block")
        tensors = init_tensors(specs, config.seed)
        names = sorted(tensors)

        def f(*inputs):
            params = dict(zip(names, inputs[2:]))
            if kind == "mffa":
                out = mffa_forward(inputs[0], inputs[1], MffaParams(params, "block", config))
            else:
                out = sdem_forward(inputs[0], SdemParams(params, "block", config))
            return _weighted(out, seed + 1)

        return f, [p, m] + [tensors[n] for n in names], 1e-4
    return build


def _scale_step(seed: int) -> Check:
    config = _toy_config()
    rng = _rng(seed)
    params = init_params(config)
    names = [n for n in params if n.startswith("scale0.")]
    p, m = _tensor(rng, 4, 8, 8), _tensor(rng, 4, 4, 4)

    def f(p_k, m_k, *tensors):
        return _weighted(scale_step(m_k, p_k, dict(zip(names, tensors)), config, 0), seed + 1)

    return f, [p, m] + [params[n] for n in names], 1e-4


def _network(seed: int) -> Check:
    config = _toy_config()
    rng = _rng(seed)
    params = init_params(config)
    names = list(params)
    pan = Tensor(rng.random((1, 16, 16)), requires_grad=True)
    lrms = Tensor(rng.random((2, 4, 4)), requires_grad=True)

    def f(pan_t, lrms_t, *tensors):
        return _weighted(wfanet_forward(pan_t, lrms_t, params.replace(dict(zip(names, tensors)))), seed + 1)

    return f, [pan, lrms] + [params[n] for n in names], 1e-4


CHECKS: Dict[str, Callable[[int], Check]] = {
    "add": _binary(ops.add, (3, 4), (4,)),
    "sub": _binary(ops.sub, (3, 4), (3, 1)),
    "mul": _binary(ops.mul, (2, 3, 4), (3, 4)),
    "scale": _unary(lambda t: ops.scale(t, -1.7), 3, 4),
    "sum": _unary(ops.sum, 3, 4),
    "mean": _unary(ops.mean, 3, 4),
    "reshape": _unary(lambda t: ops.reshape(t, (4, 3)), 3, 4),
    "transpose": _unary(ops.transpose, 3, 4),
    "concat": _concat,
    "take": _unary(lambda t: ops.take(t, 1, axis=0), 3, 2, 2),
    "decimate2": _unary(ops.decimate2, 2, 4, 4),
    "upsample_nearest": _unary(lambda t: ops.upsample_nearest(t, 2), 2, 3, 3),
    "matmul": _binary(ops.matmul, (3, 4), (4, 2)),
    "conv2d": _conv,
    "softmax": _unary(ops.softmax, 3, 5),
    "softmax_matmul": _softmax_matmul,
    "layer_norm": _layer_norm,
    "sigmoid": _unary(ops.sigmoid, 3, 4),
    "relu": _unary(ops.relu, 3, 4, away_from_zero=True),
    "l1_loss": _l1,
    "dwt2": _unary(lambda t: ops.concat(list(dwt2(t)), axis=0), 2, 4, 6),
    "idwt2": _idwt,
    "mffa": _block_check("mffa"),
    "sdem": _block_check("sdem"),
    "scale_step": _scale_step,
    "network": _network,
}


def run_battery(tolerance: float = DEFAULT_TOLERANCE, names: Optional[Sequence[str]] = None,
                seed: int = 0, max_elements: Optional[int] = None) -> List[GradCheckResult]:
    """Every element of every input is perturbed unless `max_elements` caps the count per input."""
    selected = list(names) if names else list(CHECKS)
    unknown = [name for name in selected if name not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown gradient checks: {', '.join(unknown)}")
    results = []
    for index, name in enumerate(selected):
        f, inputs, eps = CHECKS[name](seed + 17 * index)
        error = grad_check(f, inputs, eps=eps, max_elements=max_elements, seed=seed)
        result = GradCheckResult(name=name, error=error, tolerance=tolerance)
        if not result.passed:
            logger.warning(f"Gradient check {name} failed: error {error:.3e} > {tolerance:.1e}")
        results.append(result)
    return results
