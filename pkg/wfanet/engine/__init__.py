from .gradcheck import grad_check
from .optim import AdamState, adam_step, clip_grad_norm
from .tensor import Tape, Tensor, backward, checked_mode, current_tape, no_grad

__all__ = [
    "AdamState",
    "Tape",
    "Tensor",
    "adam_step",
    "backward",
    "checked_mode",
    "clip_grad_norm",
    "current_tape",
    "grad_check",
    "no_grad",
]
