"""
Sparse Graph Attention.

Every voxel is connected to every K-th voxel along its row, column and depth
line (circularly). Max-relative aggregation over that fixed neighbourhood is
computed with rolls of the whole feature map, so no adjacency list or reshape
is ever materialised.
"""

import itertools
from typing import List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from src.business.autodiff import Tensor, ops
from src.business.models.base import Module
from src.business.models.layers import ChannelLinear, Conv3d, InstanceNorm, average_pool3d, maybe
from src.config import logger
from src.data.schemas import GraphSpec
from src.errors import ConfigException, ShapeException

sga_logger = logger.getChild("sga")

Voxel = Tuple[int, int, int]

# Roll order of the aggregation: width, then height, then depth.
AXIS_ORDER = (("width", 2), ("height", 1), ("depth", 0))

ORACLE_MAX_EXTENT = 16


def make_graph_spec(stride_k: int, dims: Tuple[int, int, int]) -> GraphSpec:
    try:
        return GraphSpec(stride_k=stride_k, dims=tuple(dims))
    except ValidationError as exc:
        raise ConfigException(f"Invalid graph spec stride_k={stride_k}, dims={dims}: {exc}") from exc


def sga_neighbors(spec: GraphSpec, p: Voxel) -> List[Voxel]:
    """
    Voxels connected to p: p shifted by m*K (m >= 0, m*K < extent) along one axis.

    The result is deduplicated, keeps first-seen order and contains p itself.
    """
    if any(not 0 <= c < d for c, d in zip(p, spec.dims)):
        raise ShapeException(f"Voxel {p} lies outside dims {spec.dims}")
    seen = {}
    for _, axis in AXIS_ORDER:
        extent = spec.dims[axis]
        m = 0
        while m * spec.stride_k < extent:
            q = list(p)
            q[axis] = (p[axis] + m * spec.stride_k) % extent
            seen.setdefault(tuple(q), None)
            m += 1
    return list(seen)


def _check_spec(x: Tensor, spec: GraphSpec) -> None:
    if x.ndim != 5:
        raise ShapeException(f"SGA expects a [N,C,D,H,W] tensor, got shape {x.shape}")
    if tuple(x.shape[2:]) != tuple(spec.dims):
        raise ShapeException(f"Graph dims {spec.dims} do not match feature map {x.shape[2:]}")
    if spec.stride_k < 1:
        raise ConfigException(f"stride_k must be >= 1, got {spec.stride_k}")


def relative_max(x: Tensor, spec: GraphSpec) -> Tensor:
    """X_j: running element-wise max of X - roll(X, m*K) over all axes and valid m, from 0."""
    _check_spec(x, spec)
    x_j = Tensor(np.zeros(x.shape))
    for axis_name, axis in AXIS_ORDER:
        extent = spec.dims[axis]
        m = 0
        while m * spec.stride_k < extent:
            relative = ops.sub(x, ops.roll3d(x, axis_name, -m * spec.stride_k))
            x_j = ops.elem_max(relative, x_j)
            m += 1
    return x_j


def mrconv_sga(x: Tensor, spec: GraphSpec, conv: Conv3d) -> Tensor:
    """Max-relative graph convolution: conv(concat(X, X_j))."""
    x_j = relative_max(x, spec)
    return conv(ops.concat([x, x_j], axis=1))


def sga_oracle(x: Tensor, spec: GraphSpec) -> Tensor:
    """Brute-force X_j by explicit neighbour iteration (no rolls); small inputs only."""
    _check_spec(x, spec)
    if any(d > ORACLE_MAX_EXTENT for d in spec.dims):
        raise ConfigException(
            f"sga_oracle is limited to {ORACLE_MAX_EXTENT}^3 inputs, got dims {spec.dims}"
        )
    data = x.data
    out = np.zeros_like(data)
    for p in itertools.product(*(range(d) for d in spec.dims)):
        neighbours = sga_neighbors(spec, p)
        centre = data[(slice(None), slice(None)) + p]
        best = np.zeros_like(centre)
        for q in neighbours:
            best = np.maximum(best, centre - data[(slice(None), slice(None)) + q])
        out[(slice(None), slice(None)) + p] = best
    return Tensor(out)


class GrapherParams(Module):
    """W_in, graph conv and W_out of the Grapher, each followed by instance norm."""

    def __init__(self, channels: int, rng: np.random.Generator, fc: bool = True):
        super().__init__()
        self.channels = channels
        self.fc_in = ChannelLinear(channels, channels, rng) if fc else None
        self.norm_in = InstanceNorm(channels) if fc else None
        self.mr_conv = Conv3d(2 * channels, channels, 1, rng)
        self.norm_graph = InstanceNorm(channels)
        self.fc_out = ChannelLinear(channels, channels, rng) if fc else None
        self.norm_out = InstanceNorm(channels) if fc else None


class FFNParams(Module):
    def __init__(self, channels: int, rng: np.random.Generator, expansion: int = 4):
        super().__init__()
        hidden = expansion * channels
        self.fc1 = ChannelLinear(channels, hidden, rng)
        self.norm1 = InstanceNorm(hidden)
        self.fc2 = ChannelLinear(hidden, channels, rng)
        self.norm2 = InstanceNorm(channels)


def _check_channels(x: Tensor, channels: int, block: str) -> None:
    if x.ndim != 5 or x.shape[1] != channels:
        raise ShapeException(f"{block} built for {channels} channels got input of shape {x.shape}")


def grapher(x: Tensor, p: GrapherParams, spec: GraphSpec) -> Tensor:
    """Y = norm(W_out(gelu(norm(MRConv(norm(W_in(X))))))) + X."""
    _check_channels(x, p.channels, "Grapher")
    h = maybe(p.norm_in, maybe(p.fc_in, x))
    h = ops.gelu(p.norm_graph(mrconv_sga(h, spec, p.mr_conv)))
    h = maybe(p.norm_out, maybe(p.fc_out, h))
    return ops.add(x, h)


def ffn(x: Tensor, p: FFNParams) -> Tensor:
    """Z = norm(W_2(gelu(norm(W_1(Y))))) + Y."""
    _check_channels(x, p.fc1.weight.shape[0], "FFN")
    h = ops.gelu(p.norm1(p.fc1(x)))
    h = p.norm2(p.fc2(h))
    return ops.add(x, h)


def sga_block(
    x: Tensor, spec: GraphSpec, grapher_params: GrapherParams, ffn_params: Optional[FFNParams]
) -> Tensor:
    y = grapher(x, grapher_params, spec)
    return y if ffn_params is None else ffn(y, ffn_params)


class SGABlock(Module):
    """Grapher followed by an optional FFN; the graph is rebuilt for the input's dims."""

    def __init__(
        self,
        channels: int,
        stride_k: int,
        rng: np.random.Generator,
        fc: bool = True,
        use_ffn: bool = True,
        ffn_expansion: int = 4,
    ):
        super().__init__()
        if stride_k < 1:
            raise ConfigException(f"stride_k must be >= 1, got {stride_k}")
        self.stride_k = stride_k
        self.grapher = GrapherParams(channels, rng, fc=fc)
        self.ffn = FFNParams(channels, rng, ffn_expansion) if use_ffn else None

    def __call__(self, x: Tensor) -> Tensor:
        spec = make_graph_spec(self.stride_k, x.shape[2:])
        return sga_block(x, spec, self.grapher, self.ffn)


class PoolBlock(Module):
    """Mean-pooling token mixer in place of the graph: x + (pool(norm(x)) - norm(x)), then FFN."""

    def __init__(
        self,
        channels: int,
        rng: np.random.Generator,
        use_ffn: bool = True,
        ffn_expansion: int = 4,
    ):
        super().__init__()
        self.channels = channels
        self.norm = InstanceNorm(channels)
        self.ffn = FFNParams(channels, rng, ffn_expansion) if use_ffn else None

    def __call__(self, x: Tensor) -> Tensor:
        _check_channels(x, self.channels, "PoolBlock")
        h = self.norm(x)
        y = ops.add(x, ops.sub(average_pool3d(h), h))
        return y if self.ffn is None else ffn(y, self.ffn)
