from typing import Callable, Optional, Sequence

import numpy as np

from ..core.errors import ContractError
from .tensor import Tape, Tensor, backward, no_grad


def _scalar(out: Tensor) -> float:
    if not isinstance(out, Tensor) or out.data.size != 1:
        shape = getattr(out, 'shape', type(out).__name__)
        raise ContractError(f"grad_check needs a scalar-valued function, got {shape}")
    return float(out.data.reshape(-1)[0])


def grad_check(f: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-3,
               max_elements: Optional[int] = None, seed: int = 0) -> float:
    """Max relative error between taped gradients and central differences.

    Inputs are promoted to float64 for the duration of the check and restored
    afterwards. With `max_elements`, a seeded subset of each input's elements
    is perturbed instead of all of them.
    """
    if not 1e-4 <= eps <= 1e-2:
        raise ContractError(f"grad_check eps must lie in [1e-4, 1e-2], got {eps}")

    saved = [(t.data, t.grad, t.requires_grad) for t in inputs]
    rng = np.random.default_rng(seed)
    worst = 0.0
    try:
        for t in inputs:
            t.data = t.data.astype(np.float64)
            t.grad = None
            t.requires_grad = True

        with Tape():
            out = f(*inputs)
            _scalar(out)
            if out.requires_grad:
                backward(out)
        analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]

        with no_grad():
            for t, grad in zip(inputs, analytic):
                flat = t.data.reshape(-1)
                positions = np.arange(flat.size)
                if max_elements is not None and flat.size > max_elements:
                    positions = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
                for i in positions:
                    original = flat[i]
                    flat[i] = original + eps
                    plus = _scalar(f(*inputs))
                    flat[i] = original - eps
                    minus = _scalar(f(*inputs))
                    flat[i] = original
                    numeric = (plus - minus) / (2 * eps)
                    error = abs(float(grad.reshape(-1)[i]) - numeric) / max(1.0, abs(numeric))
                    worst = max(worst, error)
    finally:
        for t, (data, grad, requires_grad) in zip(inputs, saved):
            t.data, t.grad, t.requires_grad = data, grad, requires_grad
    return worst
