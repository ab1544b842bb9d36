from ..engine import ops
from ..engine.tensor import Tensor
from .params import ParamGroup


def to_tokens(x: Tensor) -> Tensor:
    """C×H×W feature map -> N×C tokens, N = H·W in row-major order."""
    c, h, w = x.shape
    return ops.transpose(ops.reshape(x, (c, h * w)))


def from_tokens(tokens: Tensor, h: int, w: int) -> Tensor:
    n, c = tokens.shape
    return ops.reshape(ops.transpose(tokens), (c, h, w))


def conv(x: Tensor, group: ParamGroup, name: str) -> Tensor:
    return ops.conv2d(x, group[f"{name}.weight"], group[f"{name}.bias"])


def linear(tokens: Tensor, group: ParamGroup, name: str) -> Tensor:
    return ops.add(ops.matmul(tokens, group[f"{name}.weight"]), group[f"{name}.bias"])


def channel_linear(x: Tensor, group: ParamGroup, name: str) -> Tensor:
    """Same linear map over the channel axis at every spatial position."""
    c, h, w = x.shape
    weight = group[f"{name}.weight"]
    bias = group[f"{name}.bias"]
    flat = ops.matmul(weight, ops.reshape(x, (c, h * w)))
    flat = ops.add(flat, ops.reshape(bias, (bias.shape[0], 1)))
    return ops.reshape(flat, (weight.shape[0], h, w))


def norm(tokens: Tensor, group: ParamGroup, name: str, eps: float) -> Tensor:
    return ops.layer_norm(tokens, group[f"{name}.gamma"], group[f"{name}.beta"], eps)


def mlp(tokens: Tensor, group: ParamGroup, name: str) -> Tensor:
    hidden = ops.relu(linear(tokens, group, f"{name}.fc1"))
    return linear(hidden, group, f"{name}.fc2")
