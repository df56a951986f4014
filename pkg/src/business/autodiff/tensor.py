"""
Dense float64 tensors recorded on an append-only gradient tape.

Every differentiable op in ``ops`` builds its output through ``record``; the
tape keeps one node per recorded op, in execution order, so ``backward`` can
walk it in strict reverse append order.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.config import Config, logger
from src.errors import GradientException

engine_logger = logger.getChild("engine")

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """N-dimensional float64 array that can participate in the gradient tape."""

    __slots__ = ("data", "requires_grad", "grad", "tape_id", "name", "__weakref__")

    # Make numpy defer to the reflected Tensor operators.
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.tape_id: Optional[int] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise GradientException(
                f"item() needs a single-element tensor, got shape {self.shape}"
            )
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the implementations live in ops.
    def __add__(self, other):
        from src.business.autodiff import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from src.business.autodiff import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from src.business.autodiff import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from src.business.autodiff import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from src.business.autodiff import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from src.business.autodiff import ops

        return ops.mul(other, self)

    def __truediv__(self, other):
        from src.business.autodiff import ops

        return ops.div(self, other)

    def __rtruediv__(self, other):
        from src.business.autodiff import ops

        return ops.div(other, self)

    def __neg__(self):
        from src.business.autodiff import ops

        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from src.business.autodiff import ops

        return ops.matmul(self, other)

    def __getitem__(self, key):
        from src.business.autodiff import ops

        return ops.index(self, key)

    def sum(self, axis=None, keepdims: bool = False):
        from src.business.autodiff import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        from src.business.autodiff import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from src.business.autodiff import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from src.business.autodiff import ops

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes)


@dataclass
class Node:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn


@dataclass
class Tape:
    """Append-only op log; append order is a topological order."""

    nodes: List[Node] = field(default_factory=list)

    def record(self, op: str, inputs: Tuple[Tensor, ...], output: Tensor, backward_fn: BackwardFn) -> int:
        self.nodes.append(Node(op, inputs, output, backward_fn))
        output.tape_id = len(self.nodes) - 1
        return output.tape_id

    def clear(self) -> None:
        for node in self.nodes:
            node.output.tape_id = None
        self.nodes.clear()

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass
class MacCount:
    total: int = 0

    @property
    def gmacs(self) -> float:
        return self.total / 1e9


_tape = Tape()
_grad_enabled = True
_mac_counters: List[MacCount] = []


def get_tape() -> Tape:
    return _tape


def is_grad_enabled() -> bool:
    return _grad_enabled


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate ops without recording them on the tape."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


@contextmanager
def mac_counter() -> Iterator[MacCount]:
    """Accumulate the multiply-accumulate count of every op run inside the block."""
    counter = MacCount()
    _mac_counters.append(counter)
    try:
        yield counter
    finally:
        _mac_counters.remove(counter)


def add_macs(count: int) -> None:
    for counter in _mac_counters:
        counter.total += int(count)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def record(op: str, data: np.ndarray, inputs: Tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    """Wrap an op result and append it to the tape if any input needs a gradient."""
    out = Tensor(data)
    if Config.DEBUG_CHECKS and not np.all(np.isfinite(out.data)):
        if all(np.all(np.isfinite(t.data)) for t in inputs):
            raise GradientException(f"{op} produced non-finite values from finite inputs")
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        _tape.record(op, inputs, out, backward_fn)
    return out


def backward(loss: Tensor, tape: Optional[Tape] = None) -> Dict[Tensor, np.ndarray]:
    """
    Reverse-mode sweep from a scalar loss.

    Args:
        loss: Single-element tensor produced by recorded ops
        tape: Tape to consume (defaults to the global tape)

    Returns:
        Mapping from every requires_grad leaf reached by the sweep to its gradient
    """
    tape = tape or _tape
    if loss.data.size != 1:
        raise GradientException(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss.tape_id is None or not loss.requires_grad:
        raise GradientException("backward called on a loss that is not connected to the tape")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[int, Tensor] = {}

    for node in reversed(tape.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        input_grads = node.backward_fn(upstream)
        for tensor, grad in zip(node.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad
            if tensor.tape_id is None:
                leaves[key] = tensor

    engine_logger.debug(f"Backward pass over {len(tape)} nodes reached {len(leaves)} leaves")
    tape.clear()

    result: Dict[Tensor, np.ndarray] = {}
    for key, tensor in leaves.items():
        grad = grads[key].reshape(tensor.shape)
        tensor.grad = grad
        result[tensor] = grad
    return result
