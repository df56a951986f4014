from typing import Optional

import numpy as np

from src.business.autodiff import Tensor, ops
from src.business.models.base import Module, uniform_fan_in


class ChannelLinear(Module):
    """Per-voxel linear map over the channel axis of a [N,C,D,H,W] tensor."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.weight = Tensor(uniform_fan_in(rng, (c_in, c_out), c_in))
        self.bias = Tensor(uniform_fan_in(rng, (c_out,), c_in)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.channel_linear(x, self.weight, self.bias)


class Conv3d(Module):
    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        groups: int = 1,
        bias: bool = True,
        zero_init: bool = False,
    ):
        super().__init__()
        shape = (c_out, c_in // groups, kernel, kernel, kernel)
        fan_in = (c_in // groups) * kernel**3
        if zero_init:
            self.weight = Tensor(np.zeros(shape))
            self.bias = Tensor(np.zeros(c_out)) if bias else None
        else:
            self.weight = Tensor(uniform_fan_in(rng, shape, fan_in))
            self.bias = Tensor(uniform_fan_in(rng, (c_out,), fan_in)) if bias else None
        self.stride = stride
        self.padding = padding
        self.groups = groups

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv3d(x, self.weight, self.bias, self.stride, self.padding, self.groups)


class InstanceNorm(Module):
    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.gamma = Tensor(np.ones(channels))
        self.beta = Tensor(np.zeros(channels))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.instance_norm(x, self.gamma, self.beta, self.eps)


def average_pool3d(x: Tensor, kernel: int = 3) -> Tensor:
    """Stride-1 mean filter with zero padding, channel by channel."""
    channels = x.shape[1]
    weight = Tensor(np.full((channels, 1, kernel, kernel, kernel), 1.0 / kernel**3))
    return ops.conv3d(x, weight, None, stride=1, padding=kernel // 2, groups=channels)


def maybe(layer: Optional[Module], x: Tensor) -> Tensor:
    return x if layer is None else layer(x)
