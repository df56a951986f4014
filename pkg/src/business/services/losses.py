"""
Registration loss terms.

All functions take [N,1,D,H,W] intensity tensors and a [N,3,D,H,W]
displacement tensor and return scalar tensors on the gradient tape.
"""

from typing import Tuple

import numpy as np

from src.business.autodiff import Tensor, no_grad, ops
from src.business.services.transform import spatial_transform
from src.data.schemas import LossBreakdown, NetworkConfig
from src.errors import ConfigException, ShapeException

LNCC_EPS = 1e-5


def _check_pair(fixed: Tensor, warped: Tensor) -> None:
    if fixed.shape != warped.shape or fixed.ndim != 5:
        raise ShapeException(f"Volumes must share a [N,C,D,H,W] shape, got {fixed.shape} and {warped.shape}")


def mse(fixed: Tensor, warped: Tensor) -> Tensor:
    _check_pair(fixed, warped)
    return ops.mean(ops.square(ops.sub(fixed, warped)))


def lncc(fixed: Tensor, warped: Tensor, window: int = 9) -> Tensor:
    """
    Mean windowed Pearson correlation over every window that fits inside the volume.

    Windows where either volume has variance <= 1e-5 contribute 0.
    """
    _check_pair(fixed, warped)
    if window < 1 or window % 2 == 0:
        raise ConfigException(f"LNCC window must be a positive odd integer, got {window}")
    if window > min(fixed.shape[2:]):
        raise ConfigException(f"LNCC window {window} exceeds volume dims {fixed.shape[2:]}")

    count = float(window**3)
    sum_f = ops.window_sum3d(fixed, window)
    sum_w = ops.window_sum3d(warped, window)
    sum_ff = ops.window_sum3d(ops.square(fixed), window)
    sum_ww = ops.window_sum3d(ops.square(warped), window)
    sum_fw = ops.window_sum3d(ops.mul(fixed, warped), window)

    cross = ops.sub(sum_fw, ops.mul(ops.mul(sum_f, sum_w), 1.0 / count))
    var_f = ops.sub(sum_ff, ops.mul(ops.square(sum_f), 1.0 / count))
    var_w = ops.sub(sum_ww, ops.mul(ops.square(sum_w), 1.0 / count))

    valid = (var_f.data / count > LNCC_EPS) & (var_w.data / count > LNCC_EPS)
    denominator = ops.sqrt(ops.where(valid, ops.mul(var_f, var_w), 1.0))
    corr = ops.where(valid, ops.div(cross, denominator), 0.0)
    return ops.mean(corr)


def sim_loss(fixed: Tensor, warped: Tensor, kind: str = "lncc", window: int = 9) -> Tensor:
    if kind == "lncc":
        return ops.sub(1.0, lncc(fixed, warped, window))
    if kind == "mse":
        return mse(fixed, warped)
    raise ConfigException(f"Unknown similarity kind '{kind}', expected 'lncc' or 'mse'")


def reg_loss(flow: Tensor) -> Tensor:
    """Sum of squared forward differences of every component along every axis, over |Omega|."""
    if flow.ndim != 5 or flow.shape[1] != 3:
        raise ShapeException(f"Displacement must be [N,3,D,H,W], got {flow.shape}")
    total = None
    for axis in (2, 3, 4):
        if flow.shape[axis] < 2:
            continue
        head = [slice(None)] * 5
        tail = [slice(None)] * 5
        head[axis] = slice(1, None)
        tail[axis] = slice(None, -1)
        term = ops.sum(ops.square(ops.sub(flow[tuple(head)], flow[tuple(tail)])))
        total = term if total is None else ops.add(total, term)
    voxels = flow.shape[0] * int(np.prod(flow.shape[2:]))
    if total is None:
        return ops.mul(ops.sum(flow), 0.0)
    return ops.mul(total, 1.0 / voxels)


def loss_terms(
    fixed: Tensor, warped: Tensor, flow: Tensor, config: NetworkConfig
) -> Tuple[Tensor, Tensor, Tensor]:
    """(total, sim, reg) tensors for an already warped moving volume."""
    sim = sim_loss(fixed, warped, config.sim_kind, config.lncc_window)
    reg = reg_loss(flow)
    total = ops.add(sim, ops.mul(reg, config.lambda_reg))
    return total, sim, reg


def total_loss(
    fixed: Tensor,
    moving: Tensor,
    flow: Tensor,
    lambda_reg: float = 1.0,
    kind: str = "lncc",
    window: int = 9,
) -> LossBreakdown:
    """L = L_sim(F, M o phi) + lambda * L_reg(phi)."""
    with no_grad():
        warped = spatial_transform(moving, flow)
        sim = sim_loss(fixed, warped, kind, window).item()
        reg = reg_loss(flow).item()
    return LossBreakdown(sim=sim, reg=reg, total=sim + lambda_reg * reg, lambda_=lambda_reg)
