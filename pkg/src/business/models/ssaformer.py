"""
SSAFormer bottleneck: separable self-attention token mixer plus a depthwise
convolutional channel MLP, both residual with pre-normalisation. A standard
multi-head attention is kept alongside as the quadratic baseline.
"""

import math
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.business.autodiff import Tensor, ops
from src.business.models.base import Module, uniform_fan_in
from src.business.models.layers import Conv3d, InstanceNorm
from src.config import logger
from src.data.schemas import MixerKind
from src.errors import ConfigException, ShapeException

ssa_logger = logger.getChild("ssaformer")


class SSAParams(Module):
    """Latent projection w_i[d] and the key, value and output maps (row-vector convention)."""

    def __init__(self, d: int, rng: np.random.Generator, d_out: Optional[int] = None):
        super().__init__()
        d_out = d if d_out is None else d_out
        self.w_i = Tensor(uniform_fan_in(rng, (d,), d))
        self.w_k = Tensor(uniform_fan_in(rng, (d, d), d))
        self.w_v = Tensor(uniform_fan_in(rng, (d, d), d))
        self.w_o = Tensor(uniform_fan_in(rng, (d, d_out), d))

    @property
    def d(self) -> int:
        return self.w_i.shape[0]


class MHAParams(Module):
    def __init__(self, d: int, heads: int, rng: np.random.Generator, d_out: Optional[int] = None):
        super().__init__()
        if heads < 1 or d % heads:
            raise ConfigException(f"Embedding dim {d} is not divisible by {heads} heads")
        d_out = d if d_out is None else d_out
        self.heads = heads
        self.w_q = Tensor(uniform_fan_in(rng, (d, d), d))
        self.w_k = Tensor(uniform_fan_in(rng, (d, d), d))
        self.w_v = Tensor(uniform_fan_in(rng, (d, d), d))
        self.w_o = Tensor(uniform_fan_in(rng, (d, d_out), d))


class DCSParams(Module):
    """Depthwise 3^3 conv, per-channel scale and pointwise 1^3 conv."""

    def __init__(self, channels: int, rng: np.random.Generator):
        super().__init__()
        self.depthwise = Conv3d(channels, channels, 3, rng, padding=1, groups=channels)
        self.scale = Tensor(np.ones(channels))
        self.pointwise = Conv3d(channels, channels, 1, rng)


def _check_tokens(tokens: Tensor, d: int) -> None:
    if tokens.ndim != 2 or tokens.shape[0] < 1:
        raise ShapeException(f"Token sequence must be [k, d] with k >= 1, got {tokens.shape}")
    if tokens.shape[1] != d:
        raise ShapeException(f"Token dim {tokens.shape[1]} does not match parameter dim {d}")


def context_scores(tokens: Tensor, p: SSAParams) -> Tensor:
    """c_s = softmax over tokens of (H_i . w_i) / sqrt(d)."""
    _check_tokens(tokens, p.d)
    k, d = tokens.shape
    latent = ops.matmul(tokens, ops.reshape(p.w_i, (d, 1)))
    return ops.softmax(ops.mul(ops.reshape(latent, (k,)), 1.0 / math.sqrt(d)), axis=0)


def context_vector(tokens: Tensor, c_s: Tensor, p: SSAParams) -> Tensor:
    """c_v = sum_i c_s[i] * (H_i W_K)."""
    _check_tokens(tokens, p.d)
    k, d = tokens.shape
    if c_s.shape != (k,):
        raise ShapeException(f"Context scores of shape {c_s.shape} do not match {k} tokens")
    keys = ops.matmul(tokens, p.w_k)
    return ops.sum(ops.mul(keys, ops.reshape(c_s, (k, 1))), axis=0)


def ssa(tokens: Tensor, p: SSAParams) -> Tensor:
    """y_i = (c_v * relu(H_i W_V)) W_O for every token."""
    c_s = context_scores(tokens, p)
    c_v = context_vector(tokens, c_s, p)
    values = ops.relu(ops.matmul(tokens, p.w_v))
    mixed = ops.mul(values, ops.reshape(c_v, (1, p.d)))
    return ops.matmul(mixed, p.w_o)


def mha_reference(
    tokens: Tensor, p: MHAParams, return_weights: bool = False
) -> Union[Tensor, Tuple[Tensor, np.ndarray]]:
    """
    Scaled dot-product multi-head attention over a [k, d] token sequence.

    Args:
        tokens: Input tokens
        p: Projection weights and head count
        return_weights: Also return the [heads, k, k] attention matrix

    Returns:
        [k, d_out] output, optionally with the attention weights
    """
    d = p.w_q.shape[0]
    _check_tokens(tokens, d)
    k = tokens.shape[0]
    head_dim = d // p.heads

    def split_heads(t: Tensor) -> Tensor:
        return ops.transpose(ops.reshape(t, (k, p.heads, head_dim)), (1, 0, 2))

    q = split_heads(ops.matmul(tokens, p.w_q))
    key = split_heads(ops.matmul(tokens, p.w_k))
    v = split_heads(ops.matmul(tokens, p.w_v))
    scores = ops.mul(ops.matmul(q, ops.transpose(key, (0, 2, 1))), 1.0 / math.sqrt(head_dim))
    weights = ops.softmax(scores, axis=-1)
    heads_out = ops.matmul(weights, v)
    merged = ops.reshape(ops.transpose(heads_out, (1, 0, 2)), (k, d))
    out = ops.matmul(merged, p.w_o)
    if return_weights:
        return out, weights.data.copy()
    return out


def dcs(x: Tensor, p: DCSParams, activation: bool = True) -> Tensor:
    """Depthwise conv, GeLU, per-channel scale, pointwise conv."""
    channels = p.scale.shape[0]
    if x.ndim != 5 or x.shape[1] != channels:
        raise ShapeException(f"DCS built for {channels} channels got input of shape {x.shape}")
    h = p.depthwise(x)
    if activation:
        h = ops.gelu(h)
    h = ops.mul(h, ops.reshape(p.scale, (1, channels, 1, 1, 1)))
    return p.pointwise(h)


class SSAFormerParams(Module):
    def __init__(
        self,
        channels: int,
        rng: np.random.Generator,
        mixer: MixerKind = MixerKind.SSA,
        heads: int = 4,
    ):
        super().__init__()
        self.channels = channels
        self.mixer_kind = MixerKind(mixer)
        self.norm1 = InstanceNorm(channels)
        if self.mixer_kind == MixerKind.SSA:
            self.mixer = SSAParams(channels, rng)
        else:
            self.mixer = MHAParams(channels, heads, rng)
        self.norm2 = InstanceNorm(channels)
        self.dcs = DCSParams(channels, rng)


def _mix_tokens(tokens: Tensor, params: SSAFormerParams) -> Tensor:
    if params.mixer_kind == MixerKind.SSA:
        return ssa(tokens, params.mixer)
    return mha_reference(tokens, params.mixer)


def ssaformer_block(x: Tensor, params: SSAFormerParams) -> Tensor:
    """x + mixer(tokens(norm(x))), then + dcs(norm(.)); tokens are the flattened voxels."""
    if x.ndim != 5 or x.shape[1] != params.channels:
        raise ShapeException(
            f"SSAFormer built for {params.channels} channels got input of shape {x.shape}"
        )
    n, channels = x.shape[:2]
    spatial = x.shape[2:]
    normed = params.norm1(x)
    mixed = []
    for sample in range(n):
        tokens = ops.transpose(ops.reshape(normed[sample], (channels, -1)), (1, 0))
        y = _mix_tokens(tokens, params)
        mixed.append(ops.reshape(ops.transpose(y, (1, 0)), (1, channels) + tuple(spatial)))
    x = ops.add(x, mixed[0] if n == 1 else ops.concat(mixed, axis=0))
    return ops.add(x, dcs(params.norm2(x), params.dcs))


def mixer_flop_terms(kind: Union[MixerKind, str], k: int, d: int, d_out: Optional[int] = None) -> Dict[str, int]:
    """Multiply-accumulate count of one token-mixer forward pass, term by term."""
    d_out = d if d_out is None else d_out
    kind = MixerKind(kind)
    if k < 1 or d < 1:
        raise ConfigException(f"Token count and dim must be positive, got k={k}, d={d}")
    if kind == MixerKind.SSA:
        return {
            "scores": k * d,
            "keys": k * d * d,
            "context": k * d,
            "values": k * d * d,
            "broadcast": k * d,
            "output": k * d * d_out,
        }
    return {
        "projections": 3 * k * d * d,
        "scores": k * k * d,
        "weighted_values": k * k * d,
        "output": k * d * d_out,
    }


def count_mixer_flops(kind: Union[MixerKind, str], k: int, d: int, d_out: Optional[int] = None) -> int:
    return sum(mixer_flop_terms(kind, k, d, d_out).values())
