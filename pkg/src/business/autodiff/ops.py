"""
Differentiable op set.

Each op computes its forward result with numpy and hands ``record`` a closure
mapping the upstream gradient to one gradient per input (``None`` for inputs
that get nothing).
"""

import itertools
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from src.business.autodiff.tensor import Tensor, add_macs, as_tensor, record
from src.errors import ShapeException

Operand = Union[Tensor, float, int, np.ndarray]

SPATIAL_AXES = {"depth": 2, "height": 3, "width": 4}

_SQRT_2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_5d(x: Tensor, op: str) -> None:
    if x.ndim != 5:
        raise ShapeException(f"{op} expects a 5D tensor [N,C,D,H,W], got shape {x.shape}")


# Elementwise arithmetic


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", a.data + b.data, (a, b), backward_fn)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record("sub", a.data - b.data, (a, b), backward_fn)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward_fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record("mul", a.data * b.data, (a, b), backward_fn)


def div(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward_fn(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return record("div", out, (a, b), backward_fn)


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)

    def backward_fn(g):
        return (g * 0.5 / out,)

    return record("sqrt", out, (x,), backward_fn)


def square(x: Tensor) -> Tensor:
    def backward_fn(g):
        return (2.0 * g * x.data,)

    return record("square", x.data * x.data, (x,), backward_fn)


def where(condition: np.ndarray, a: Operand, b: Operand) -> Tensor:
    """Select from a where condition holds, else from b; condition is not differentiated."""
    a, b = as_tensor(a), as_tensor(b)
    condition = np.asarray(condition, dtype=bool)

    def backward_fn(g):
        return (
            _unbroadcast(np.where(condition, g, 0.0), a.shape),
            _unbroadcast(np.where(condition, 0.0, g), b.shape),
        )

    return record("where", np.where(condition, a.data, b.data), (a, b), backward_fn)


def elem_max(a: Tensor, b: Tensor) -> Tensor:
    """Element-wise maximum; ties route the gradient to the first argument."""
    if a.shape != b.shape:
        raise ShapeException(f"elem_max shape mismatch: {a.shape} vs {b.shape}")
    first = a.data >= b.data

    def backward_fn(g):
        return np.where(first, g, 0.0), np.where(first, 0.0, g)

    return record("elem_max", np.where(first, a.data, b.data), (a, b), backward_fn)


# Activations


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0

    def backward_fn(g):
        return (g * positive,)

    return record("relu", np.where(positive, x.data, 0.0), (x,), backward_fn)


def gelu(x: Tensor) -> Tensor:
    """Exact GeLU, x * Phi(x)."""
    cdf = 0.5 * (1.0 + erf(x.data / _SQRT_2))

    def backward_fn(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data * x.data)
        return (g * (cdf + x.data * pdf),)

    return record("gelu", x.data * cdf, (x,), backward_fn)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=axis, keepdims=True)

    def backward_fn(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return record("softmax", out, (x,), backward_fn)


# Reductions and layout


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return record("sum", np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), backward_fn)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    def backward_fn(g):
        return (g.reshape(x.shape),)

    return record("reshape", x.data.reshape(shape), (x,), backward_fn)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward_fn(g):
        return (np.transpose(g, inverse),)

    return record("transpose", np.transpose(x.data, axes), (x,), backward_fn)


def index(x: Tensor, key) -> Tensor:
    """Basic (slice/int) indexing."""

    def backward_fn(g):
        grad = np.zeros_like(x.data)
        grad[key] = g
        return (grad,)

    return record("index", np.array(x.data[key]), (x,), backward_fn)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return record("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward_fn)


def roll3d(x: Tensor, axis: str, shift: int) -> Tensor:
    """Circular shift along a spatial axis of a [N,C,D,H,W] tensor; out[i] = x[i - shift]."""
    _check_5d(x, "roll3d")
    if axis not in SPATIAL_AXES:
        raise ShapeException(f"roll3d axis must be one of {sorted(SPATIAL_AXES)}, got {axis!r}")
    dim = SPATIAL_AXES[axis]
    shift = int(shift) % x.shape[dim]

    def backward_fn(g):
        return (np.roll(g, -shift, axis=dim),)

    return record("roll3d", np.roll(x.data, shift, axis=dim), (x,), backward_fn)


# Linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeException(f"matmul dimension mismatch: {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)
    add_macs(out.size * a.shape[-1])

    def backward_fn(g):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return record("matmul", out, (a, b), backward_fn)


def linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """x[..., Din] @ w[Din, Dout] + b[Dout]."""
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeException(f"linear dimension mismatch: input {x.shape}, weight {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise ShapeException(f"linear bias shape {b.shape} does not match {w.shape[1]} outputs")
    out = x.data @ w.data
    if b is not None:
        out = out + b.data
    add_macs(out.size * w.shape[0])
    inputs = (x, w) if b is None else (x, w, b)

    def backward_fn(g):
        flat_x = x.data.reshape(-1, w.shape[0])
        flat_g = g.reshape(-1, w.shape[1])
        grads = [g @ w.data.T, flat_x.T @ flat_g]
        if b is not None:
            grads.append(flat_g.sum(axis=0))
        return tuple(grads)

    return record("linear", out, inputs, backward_fn)


def channel_linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Apply linear() to the channel axis of a [N,C,D,H,W] tensor."""
    _check_5d(x, "channel_linear")
    moved = transpose(x, (0, 2, 3, 4, 1))
    return transpose(linear(moved, w, b), (0, 4, 1, 2, 3))


# Normalization


def instance_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-(sample, channel) normalization over the spatial axes, then a per-channel affine."""
    if x.ndim < 3:
        raise ShapeException(f"instance_norm expects [N,C,...], got shape {x.shape}")
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeException(
            f"instance_norm affine shapes {gamma.shape}/{beta.shape} do not match {channels} channels"
        )
    axes = tuple(range(2, x.ndim))
    count = int(np.prod(x.shape[2:]))
    if count < 2:
        raise ShapeException(f"instance_norm needs at least 2 elements per channel, got shape {x.shape}")

    affine_shape = (1, channels) + (1,) * (x.ndim - 2)
    mu = x.data.mean(axis=axes, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv_std
    g_r = gamma.data.reshape(affine_shape)
    out = x_hat * g_r + beta.data.reshape(affine_shape)

    def backward_fn(g):
        reduce_axes = (0,) + axes
        grad_gamma = (g * x_hat).sum(axis=reduce_axes)
        grad_beta = g.sum(axis=reduce_axes)
        d_hat = g * g_r
        grad_x = inv_std * (
            d_hat
            - d_hat.mean(axis=axes, keepdims=True)
            - x_hat * (d_hat * x_hat).mean(axis=axes, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta

    return record("instance_norm", out, (x, gamma, beta), backward_fn)


# Convolution and resampling


def _conv_out_size(size: int, kernel: int, stride: int, padding: int, axis: str) -> int:
    span = size + 2 * padding - kernel
    if span < 0 or span % stride != 0:
        raise ShapeException(
            f"conv3d {axis}: ({size} + 2*{padding} - {kernel}) is not divisible by stride {stride}"
        )
    return span // stride + 1


def _mix(weight: np.ndarray, patch: np.ndarray, groups: int) -> np.ndarray:
    """Channel contraction of a [g,Og,Cg] weight tap with a [N,g,Cg,...] patch."""
    if groups == 1:
        return np.moveaxis(np.tensordot(weight[0], patch[:, 0], axes=([1], [1])), 0, 1)[:, None]
    if weight.shape[1] == 1 and weight.shape[2] == 1:
        # depthwise
        return patch * weight.reshape(1, groups, 1, 1, 1, 1)
    return np.einsum("goc,ngcdhw->ngodhw", weight, patch)


def conv3d(
    x: Tensor,
    w: Tensor,
    b: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
    groups: int = 1,
) -> Tensor:
    """Grouped 3D cross-correlation with zero padding."""
    _check_5d(x, "conv3d")
    if w.ndim != 5:
        raise ShapeException(f"conv3d weight must be [Cout,Cin/g,kd,kh,kw], got {w.shape}")
    n, c_in, depth, height, width = x.shape
    c_out, c_group, kd, kh, kw = w.shape
    if groups < 1 or c_in % groups or c_out % groups or c_group != c_in // groups:
        raise ShapeException(
            f"conv3d channel mismatch: input {c_in}, weight {w.shape}, groups {groups}"
        )
    if b is not None and b.shape != (c_out,):
        raise ShapeException(f"conv3d bias shape {b.shape} does not match {c_out} outputs")
    s, p = int(stride), int(padding)
    out_d = _conv_out_size(depth, kd, s, p, "depth")
    out_h = _conv_out_size(height, kh, s, p, "height")
    out_w = _conv_out_size(width, kw, s, p, "width")

    padded = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p), (p, p)))
    grouped = padded.reshape(n, groups, c_group, *padded.shape[2:])
    o_group = c_out // groups
    w_grouped = w.data.reshape(groups, o_group, c_group, kd, kh, kw)
    taps = list(itertools.product(range(kd), range(kh), range(kw)))

    def window(i: int, j: int, k: int) -> Tuple[slice, ...]:
        return (
            slice(None),
            slice(None),
            slice(None),
            slice(i, i + s * (out_d - 1) + 1, s),
            slice(j, j + s * (out_h - 1) + 1, s),
            slice(k, k + s * (out_w - 1) + 1, s),
        )

    out = np.zeros((n, groups, o_group, out_d, out_h, out_w))
    for i, j, k in taps:
        out += _mix(w_grouped[..., i, j, k], grouped[window(i, j, k)], groups)
    out = out.reshape(n, c_out, out_d, out_h, out_w)
    if b is not None:
        out += b.data.reshape(1, c_out, 1, 1, 1)
    add_macs(n * c_out * out_d * out_h * out_w * c_group * kd * kh * kw)
    inputs = (x, w) if b is None else (x, w, b)

    def backward_fn(g):
        g_grouped = g.reshape(n, groups, o_group, out_d, out_h, out_w)
        grad_padded = np.zeros_like(grouped)
        grad_w = np.zeros_like(w_grouped)
        for i, j, k in taps:
            sl = window(i, j, k)
            patch = grouped[sl]
            tap = w_grouped[..., i, j, k]
            if groups == 1:
                grad_w[0, :, :, i, j, k] = np.tensordot(
                    g_grouped[:, 0], patch[:, 0], axes=([0, 2, 3, 4], [0, 2, 3, 4])
                )
                grad_padded[sl][:, 0] += np.moveaxis(
                    np.tensordot(tap[0], g_grouped[:, 0], axes=([0], [1])), 0, 1
                )
            else:
                grad_w[..., i, j, k] = np.einsum("ngodhw,ngcdhw->goc", g_grouped, patch)
                grad_padded[sl] += np.einsum("goc,ngodhw->ngcdhw", tap, g_grouped)
        grad_padded = grad_padded.reshape(padded.shape)
        grad_x = grad_padded[:, :, p : p + depth, p : p + height, p : p + width]
        grads = [np.ascontiguousarray(grad_x), grad_w.reshape(w.shape)]
        if b is not None:
            grads.append(g.sum(axis=(0, 2, 3, 4)))
        return tuple(grads)

    return record("conv3d", out, inputs, backward_fn)


def window_sum3d(x: Tensor, size: int) -> Tensor:
    """Sum over every full size³ window of the spatial axes (valid windows only)."""
    _check_5d(x, "window_sum3d")
    if size < 1 or any(dim < size for dim in x.shape[2:]):
        raise ShapeException(f"window {size} does not fit spatial shape {x.shape[2:]}")

    def valid_sum(data: np.ndarray) -> np.ndarray:
        for axis in (2, 3, 4):
            data = np.lib.stride_tricks.sliding_window_view(data, size, axis=axis).sum(axis=-1)
        return data

    def backward_fn(g):
        pad = size - 1
        for axis in (4, 3, 2):
            widths = [(0, 0)] * 5
            widths[axis] = (pad, pad)
            g = np.lib.stride_tricks.sliding_window_view(np.pad(g, widths), size, axis=axis).sum(axis=-1)
        return (g,)

    return record("window_sum3d", valid_sum(x.data), (x,), backward_fn)


def _linear_upsample_matrix(size: int, factor: int) -> np.ndarray:
    """Half-pixel linear interpolation matrix of shape [size*factor, size]."""
    out_size = size * factor
    matrix = np.zeros((out_size, size))
    for target in range(out_size):
        source = min(max((target + 0.5) / factor - 0.5, 0.0), size - 1.0)
        lo = int(math.floor(source))
        hi = min(lo + 1, size - 1)
        frac = source - lo
        matrix[target, lo] += 1.0 - frac
        matrix[target, hi] += frac
    return matrix


def resample_axis(x: Tensor, matrix: np.ndarray, axis: int) -> Tensor:
    """Apply a fixed linear map along one axis."""

    def backward_fn(g):
        moved = np.tensordot(matrix.T, np.moveaxis(g, axis, 0), axes=([1], [0]))
        return (np.moveaxis(moved, 0, axis),)

    moved = np.tensordot(matrix, np.moveaxis(x.data, axis, 0), axes=([1], [0]))
    return record("resample_axis", np.moveaxis(moved, 0, axis), (x,), backward_fn)


def upsample_trilinear(x: Tensor, factor: int = 2) -> Tensor:
    _check_5d(x, "upsample_trilinear")
    out = x
    for axis in (2, 3, 4):
        out = resample_axis(out, _linear_upsample_matrix(x.shape[axis], factor), axis)
    return out


def _corner_bounds(coords: np.ndarray, size: int):
    clamped = np.clip(coords, 0.0, size - 1.0)
    # NaN coordinates index corner 0 and keep a NaN weight
    lo = np.clip(np.floor(np.nan_to_num(clamped)), 0, max(size - 2, 0)).astype(np.int64)
    hi = np.minimum(lo + 1, size - 1)
    frac = clamped - lo
    inside = (coords >= 0.0) & (coords <= size - 1.0)
    return lo, hi, frac, inside


def warp3d(src: Tensor, flow: Tensor) -> Tensor:
    """
    Trilinear resampling out(p) = src(p + flow(p)) with clamp-to-border coordinates.

    Args:
        src: [N,C,D,H,W] volume to sample
        flow: [N,3,D,H,W] displacement in voxels, components ordered (depth, height, width)

    Returns:
        [N,C,D,H,W] warped volume, differentiable w.r.t. both inputs
    """
    _check_5d(src, "warp3d")
    _check_5d(flow, "warp3d")
    n, channels, depth, height, width = src.shape
    if flow.shape != (n, 3, depth, height, width):
        raise ShapeException(f"warp3d flow shape {flow.shape} does not match volume {src.shape}")
    sizes = (depth, height, width)
    grid = np.indices(sizes, dtype=np.float64)
    coords = grid[None] + flow.data
    bounds = [_corner_bounds(coords[:, a], sizes[a]) for a in range(3)]
    flat_src = src.data.reshape(n, channels, -1)

    corners = []
    for bits in itertools.product((0, 1), repeat=3):
        idx = [bounds[a][1] if bits[a] else bounds[a][0] for a in range(3)]
        factors = [bounds[a][2] if bits[a] else 1.0 - bounds[a][2] for a in range(3)]
        linear_index = (idx[0] * height + idx[1]) * width + idx[2]
        corners.append((bits, linear_index.reshape(n, -1), factors))

    out = np.zeros((n, channels, depth * height * width))
    for _, linear_index, factors in corners:
        weight = (factors[0] * factors[1] * factors[2]).reshape(n, 1, -1)
        out += weight * np.take_along_axis(flat_src, linear_index[:, None, :].repeat(channels, axis=1), axis=2)
    out = out.reshape(src.shape)

    def backward_fn(g):
        flat_g = g.reshape(n, channels, -1)
        grad_src = np.zeros_like(flat_src)
        grad_flow = np.zeros_like(flow.data).reshape(n, 3, -1)
        for bits, linear_index, factors in corners:
            weight = (factors[0] * factors[1] * factors[2]).reshape(n, -1)
            values = np.take_along_axis(
                flat_src, linear_index[:, None, :].repeat(channels, axis=1), axis=2
            )
            upstream = (flat_g * values).sum(axis=1)
            for batch in range(n):
                for channel in range(channels):
                    grad_src[batch, channel] += np.bincount(
                        linear_index[batch],
                        weights=weight[batch] * flat_g[batch, channel],
                        minlength=flat_src.shape[2],
                    )
            for a in range(3):
                others = np.ones_like(weight)
                for b_axis in range(3):
                    if b_axis != a:
                        others = others * np.asarray(factors[b_axis]).reshape(n, -1)
                sign = 1.0 if bits[a] else -1.0
                inside = bounds[a][3].reshape(n, -1)
                grad_flow[:, a] += sign * others * upstream * inside
        return grad_src.reshape(src.shape), grad_flow.reshape(flow.shape)

    return record("warp3d", out, (src, flow), backward_fn)
