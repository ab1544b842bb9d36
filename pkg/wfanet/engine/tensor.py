import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import settings
from ..core.errors import ContractError, NumericError


class Tensor:
    """Dense float array with an optional gradient slot.

    Data is float32 unless it is created from float64 input (the gradient
    oracle promotes to double precision). Values are never mutated by ops;
    only `grad` is written, by `backward`.
    """

    def __init__(self, data, requires_grad: bool = False):
        array = np.asarray(data)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        self.data = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._tape: Optional["Tape"] = None

    def __repr__(self) -> str:
        return f"<Tensor shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}>"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)


@dataclass
class Node:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Ordered record of executed differentiable ops.

    Nodes are appended as ops run, so inputs always precede their consumers.
    One `backward` consumes the tape.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.consumed = False

    def __len__(self) -> int:
        return len(self.nodes)

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc_info):
        _stack().pop()
        return False

    def record(self, node: Node):
        if self.consumed:
            raise ContractError("cannot record on a consumed tape")
        self.nodes.append(node)


_local = threading.local()


def _stack() -> List[Tape]:
    if not hasattr(_local, 'stack'):
        _local.stack = []
    return _local.stack


def current_tape() -> Tape:
    stack = _stack()
    if stack:
        return stack[-1]
    default = getattr(_local, 'default', None)
    if default is None or default.consumed:
        default = Tape()
        _local.default = default
    return default


def grad_enabled() -> bool:
    return getattr(_local, 'grad_enabled', True)


def is_checked() -> bool:
    return getattr(_local, 'checked', settings.CHECKED_MODE)


@contextmanager
def no_grad() -> Iterator[None]:
    previous = grad_enabled()
    _local.grad_enabled = False
    try:
        yield
    finally:
        _local.grad_enabled = previous


@contextmanager
def checked_mode(enabled: bool = True) -> Iterator[None]:
    previous = is_checked()
    _local.checked = enabled
    try:
        yield
    finally:
        _local.checked = previous


def scan_finite(op: str, data: np.ndarray):
    finite = np.isfinite(data)
    if not finite.all():
        bad = int(data.size - np.count_nonzero(finite))
        raise NumericError(f"{op} produced {bad} non-finite value(s)")


def record(op: str, inputs: Sequence[Tensor], data: np.ndarray,
           backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> Tensor:
    """Wrap an op result and put it on the active tape when gradients flow."""
    out = Tensor(data)
    if is_checked():
        scan_finite(op, out.data)
    if not grad_enabled() or not any(t.requires_grad for t in inputs):
        return out
    tape = current_tape()
    for t in inputs:
        if t._tape is not None and t._tape is not tape:
            raise ContractError(f"{op}: input was produced on a different tape")
    out.requires_grad = True
    out._tape = tape
    tape.record(Node(op, tuple(inputs), out, backward))
    return out


def backward(loss: Tensor):
    """Populate `grad` on every requires_grad leaf reachable from `loss`."""
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = loss._tape
    if tape is None:
        if loss.requires_grad:
            loss.grad = np.ones_like(loss.data)
            return
        raise ContractError("loss is not connected to any tensor that requires grad")
    if tape.consumed:
        raise ContractError("tape already consumed; run the forward pass again before backward")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.backward(upstream)):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            grads[key] = grads[key] + grad if key in grads else grad
            if tensor.is_leaf:
                leaves[key] = tensor

    for key, tensor in leaves.items():
        tensor.grad = np.asarray(grads[key], dtype=tensor.dtype).reshape(tensor.shape)
    tape.consumed = True
    tape.nodes.clear()
