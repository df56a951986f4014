"""
Parameter containers.

A Module registers Tensor and Module attributes in assignment order; that
order is the canonical parameter order used by the optimizer and checkpoints.
"""

from collections import OrderedDict
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from src.business.autodiff import Tensor
from src.errors import ResourceNotFoundException, ShapeException

Member = Union[Tensor, "Module"]


def uniform_fan_in(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    """Sample U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Module:
    def __init__(self) -> None:
        object.__setattr__(self, "_members", OrderedDict())

    def __setattr__(self, name: str, value) -> None:
        members: Dict[str, Member] = self.__dict__.get("_members")
        if members is None:
            raise AttributeError(f"{type(self).__name__}.__init__ must call Module.__init__ first")
        if isinstance(value, Tensor):
            value.requires_grad = True
            members[name] = value
        elif isinstance(value, Module):
            members[name] = value
        else:
            members.pop(name, None)
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, member in self._members.items():
            full_name = f"{prefix}{name}"
            if isinstance(member, Tensor):
                yield full_name, member
            else:
                yield from member.named_parameters(prefix=f"{full_name}.")

    def parameters(self) -> List[Tensor]:
        return [param for _, param in self.named_parameters()]

    def param_count(self) -> int:
        return int(sum(param.size for param in self.parameters()))

    def assign_names(self) -> None:
        for name, param in self.named_parameters():
            param.name = name

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, param.data.copy()) for name, param in self.named_parameters())

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy arrays into the parameters by name; every parameter must be present."""
        for name, param in self.named_parameters():
            if name not in state:
                raise ResourceNotFoundException(f"No tensor named '{name}' in the loaded state")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise ShapeException(
                    f"Tensor '{name}' has shape {value.shape}, model expects {param.shape}"
                )
            param.data = np.ascontiguousarray(value.copy())


class ModuleList(Module):
    """Ordered collection of sub-modules named by position."""

    def __init__(self, modules=()) -> None:
        super().__init__()
        object.__setattr__(self, "_items", [])
        for module in modules:
            self.append(module)

    def append(self, module: Module) -> None:
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __getitem__(self, position: int) -> Module:
        return self._items[position]

    def __iter__(self):
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)
