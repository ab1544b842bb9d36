from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..core.errors import ConfigError, DimensionError
from .tensor import Tensor


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Mapping[str, Tensor], **hyper) -> "AdamState":
        return cls(
            m={name: np.zeros_like(t.data) for name, t in params.items()},
            v={name: np.zeros_like(t.data) for name, t in params.items()},
            **hyper,
        )


def adam_step(params: Mapping[str, Tensor], grads: Mapping[str, Optional[np.ndarray]],
              state: AdamState, lr: float) -> Tuple[Dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update. Returns fresh tensors and a fresh state."""
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")

    step = state.step + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step
    new_params: Dict[str, Tensor] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}

    for name in sorted(params):
        param = params[name]
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        m = state.m.get(name, np.zeros_like(param.data))
        v = state.v.get(name, np.zeros_like(param.data))
        if grad.shape != param.shape or m.shape != param.shape or v.shape != param.shape:
            raise DimensionError(
                f"adam_step: {name} has shape {param.shape}, grad {grad.shape}, moments {m.shape}/{v.shape}"
            )
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_params[name] = Tensor((param.data - update).astype(param.dtype), requires_grad=True)
        new_m[name] = m.astype(param.dtype)
        new_v[name] = v.astype(param.dtype)

    return new_params, AdamState(new_m, new_v, step, state.beta1, state.beta2, state.eps)


def clip_grad_norm(grads: Mapping[str, Optional[np.ndarray]], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """Scale every gradient by one factor so the global L2 norm is at most `max_norm`."""
    present = {name: g for name, g in grads.items() if g is not None}
    total = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for _, g in sorted(present.items()))))
    if total <= max_norm or total == 0.0:
        return dict(present), total
    factor = max_norm / total
    return {name: (g * factor).astype(g.dtype) for name, g in present.items()}, total
