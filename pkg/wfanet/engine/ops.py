"""Differentiable ops. Every op returns a new Tensor and, when gradients
flow, records a backward closure on the active tape.

Layout is channels-first (C×H×W); token matrices are N×C.
"""
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..core.errors import ConfigError, DimensionError
from .tensor import Tensor, record

Operand = Union[Tensor, float, int, np.ndarray]

ACTIVATIONS = ("sigmoid", "relu")


def _as_tensor(value: Operand, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from exc


def add(a: Operand, b: Operand) -> Tensor:
    if not isinstance(a, Tensor):
        a = _as_tensor(a, b)
    b = _as_tensor(b, a)
    _broadcast_shape("add", a, b)

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", (a, b), a.data + b.data, _backward)


def sub(a: Operand, b: Operand) -> Tensor:
    if not isinstance(a, Tensor):
        a = _as_tensor(a, b)
    b = _as_tensor(b, a)
    _broadcast_shape("sub", a, b)

    def _backward(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return record("sub", (a, b), a.data - b.data, _backward)


def mul(a: Operand, b: Operand) -> Tensor:
    if not isinstance(a, Tensor):
        a = _as_tensor(a, b)
    b = _as_tensor(b, a)
    _broadcast_shape("mul", a, b)

    def _backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record("mul", (a, b), a.data * b.data, _backward)


def scale(x: Tensor, factor: float) -> Tensor:
    factor = x.dtype.type(factor)

    def _backward(g):
        return (g * factor,)

    return record("scale", (x,), x.data * factor, _backward)


def sum(x: Tensor) -> Tensor:  # noqa: A001
    def _backward(g):
        return (np.broadcast_to(g, x.shape).astype(x.dtype),)

    return record("sum", (x,), np.asarray(x.data.sum(dtype=np.float64), dtype=x.dtype), _backward)


def mean(x: Tensor) -> Tensor:
    n = x.size

    def _backward(g):
        return (np.broadcast_to(g / n, x.shape).astype(x.dtype),)

    return record("mean", (x,), np.asarray(x.data.mean(dtype=np.float64), dtype=x.dtype), _backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}")

    def _backward(g):
        return (g.reshape(x.shape),)

    return record("reshape", (x,), x.data.reshape(shape), _backward)


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {x.shape}")

    def _backward(g):
        return (g.T,)

    return record("transpose", (x,), np.ascontiguousarray(x.data.T), _backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise DimensionError(f"concat along axis {axis}: incompatible shapes {shapes}") from exc
    cuts = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, cuts, axis=axis))

    return record("concat", tensors, data, _backward)


def take(x: Tensor, index: int, axis: int = 0) -> Tensor:
    def _backward(g):
        grad = np.zeros(x.shape, dtype=g.dtype)
        slicer = [slice(None)] * x.ndim
        slicer[axis] = index
        grad[tuple(slicer)] = g
        return (grad,)

    return record("take", (x,), np.take(x.data, index, axis=axis), _backward)


def decimate2(x: Tensor) -> Tensor:
    """Keep every second row and column of the two trailing axes."""
    def _backward(g):
        grad = np.zeros(x.shape, dtype=g.dtype)
        grad[..., ::2, ::2] = g
        return (grad,)

    return record("decimate2", (x,), np.ascontiguousarray(x.data[..., ::2, ::2]), _backward)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    if factor < 1:
        raise ConfigError(f"upsample factor must be >= 1, got {factor}")
    h, w = x.shape[-2:]

    def _backward(g):
        lead = g.shape[:-2]
        return (g.reshape(*lead, h, factor, w, factor).sum(axis=(-3, -1)),)

    data = np.repeat(np.repeat(x.data, factor, axis=-2), factor, axis=-1)
    return record("upsample_nearest", (x,), data, _backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner extents disagree: {a.shape} @ {b.shape}")

    def _backward(g):
        return g @ b.data.T, a.data.T @ g

    return record("matmul", (a, b), a.data @ b.data, _backward)


def _im2col(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(padded, (3, 3), axis=(1, 2))
    return windows.transpose(1, 2, 0, 3, 4).reshape(h * w, c * 9)


def _col2im(cols: np.ndarray, c: int, h: int, w: int) -> np.ndarray:
    patches = cols.reshape(h, w, c, 3, 3).transpose(2, 0, 1, 3, 4)
    padded = np.zeros((c, h + 2, w + 2), dtype=cols.dtype)
    for i in range(3):
        for j in range(3):
            padded[:, i:i + h, j:j + w] += patches[..., i, j]
    return padded[:, 1:-1, 1:-1]


def conv2d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """3×3 cross-correlation with zero padding 1 (same-size output) plus bias."""
    if x.ndim != 3:
        raise DimensionError(f"conv2d expects C×H×W input, got shape {x.shape}")
    if weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise DimensionError(f"conv2d expects a C_out×C_in×3×3 kernel, got shape {weight.shape}")
    if weight.shape[1] != x.shape[0]:
        raise DimensionError(
            f"conv2d: input has {x.shape[0]} channels but kernel expects {weight.shape[1]}"
        )
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"conv2d: bias shape {bias.shape} does not match {weight.shape[0]} outputs")

    c_in, h, w = x.shape
    c_out = weight.shape[0]
    cols = _im2col(x.data)
    kernel = weight.data.reshape(c_out, c_in * 9)
    out = (cols @ kernel.T).T.reshape(c_out, h, w) + bias.data[:, None, None]

    def _backward(g):
        flat = g.reshape(c_out, h * w)
        d_weight = (flat @ cols).reshape(weight.shape)
        d_bias = flat.sum(axis=1)
        d_x = _col2im(flat.T @ kernel, c_in, h, w)
        return d_x, d_weight, d_bias

    return record("conv2d", (x, weight, bias), out, _backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return record("softmax", (x,), y, _backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each token over its trailing (channel) axis, then apply gamma/beta."""
    channels = x.shape[-1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionError(
            f"layer_norm: {channels} channels but gamma {gamma.shape}, beta {beta.shape}"
        )
    if eps <= 0:
        raise ConfigError(f"layer_norm eps must be positive, got {eps}")

    dtype = np.result_type(x.data, gamma.data, beta.data)
    xd = x.data.astype(np.float64)
    mu = xd.mean(axis=-1, keepdims=True)
    var = ((xd - mu) ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (xd - mu) * inv_std
    out = (x_hat * gamma.data + beta.data).astype(dtype)

    def _backward(g):
        gd = g.astype(np.float64)
        d_hat = gd * gamma.data
        d_x = inv_std * (
            d_hat
            - d_hat.mean(axis=-1, keepdims=True)
            - x_hat * (d_hat * x_hat).mean(axis=-1, keepdims=True)
        )
        d_gamma = (gd * x_hat).reshape(-1, channels).sum(axis=0)
        d_beta = gd.reshape(-1, channels).sum(axis=0)
        return d_x.astype(x.dtype), d_gamma.astype(gamma.dtype), d_beta.astype(beta.dtype)

    return record("layer_norm", (x, gamma, beta), out, _backward)


def activation(x: Tensor, kind: str) -> Tensor:
    if kind == "sigmoid":
        y = expit(x.data)

        def _backward(g):
            return (g * y * (1 - y),)

    elif kind == "relu":
        y = np.maximum(x.data, 0)
        mask = x.data > 0

        def _backward(g):
            return (g * mask,)

    else:
        raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")
    return record(kind, (x,), y, _backward)


def sigmoid(x: Tensor) -> Tensor:
    return activation(x, "sigmoid")


def relu(x: Tensor) -> Tensor:
    return activation(x, "relu")


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; subgradient 0 at exact ties.

    With a leading batch axis all samples have the same size, so the global
    mean equals the mean of per-sample means.
    """
    if pred.shape != target.shape:
        raise DimensionError(f"l1_loss: prediction {pred.shape} vs target {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    value = np.asarray(np.abs(diff).mean(dtype=np.float64), dtype=diff.dtype)

    def _backward(g):
        grad = (g / n) * np.sign(diff)
        return grad, -grad

    return record("l1_loss", (pred, target), value, _backward)


def add_all(values: List[Tensor]) -> Tensor:
    """Sum tensors left to right; the fixed order keeps reductions deterministic."""
    total = values[0]
    for value in values[1:]:
        total = add(total, value)
    return total
