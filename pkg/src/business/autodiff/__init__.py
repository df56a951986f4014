from . import ops
from .optim import adam_step, init_adam_state
from .tensor import (
    MacCount,
    Tape,
    Tensor,
    backward,
    get_tape,
    is_grad_enabled,
    mac_counter,
    no_grad,
)

__all__ = [
    "ops",
    "adam_step",
    "init_adam_state",
    "MacCount",
    "Tape",
    "Tensor",
    "backward",
    "get_tape",
    "is_grad_enabled",
    "mac_counter",
    "no_grad",
]
