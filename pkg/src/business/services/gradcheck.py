"""
Central finite-difference checks of the analytic gradients.

Every check builds a scalar loss as a fixed random projection of a block's
output, backpropagates once, then perturbs parameter entries one at a time.
"""

from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.business.autodiff import Tensor, backward, no_grad, ops
from src.business.models import (
    FFNParams,
    GrapherParams,
    RegistrationModel,
    SSAFormerParams,
    SSAParams,
    ffn,
    forward,
    grapher,
    make_graph_spec,
    ssa,
    ssaformer_block,
)
from src.business.services.losses import loss_terms
from src.config import Config, logger
from src.data.schemas import GradCheckResult, GradCheckTarget, NetworkConfig
from src.errors import GradientCheckFailure

gradcheck_logger = logger.getChild("gradcheck")

LossFn = Callable[[], Tensor]


def relative_error(analytic: float, numeric: float, atol: Optional[float] = None) -> float:
    atol = Config.GRADCHECK_ATOL if atol is None else atol
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), atol)


def check_gradients(
    name: str,
    loss_fn: LossFn,
    params: Sequence[Tensor],
    max_entries: Optional[int] = None,
    seed: int = 0,
    eps: Optional[float] = None,
    tol: Optional[float] = None,
) -> GradCheckResult:
    """
    Compare backward() against central differences.

    Args:
        name: Label used in logs and the result
        loss_fn: Rebuilds the scalar loss from the current parameter values
        params: Leaves to check
        max_entries: Check this many randomly drawn entries in total instead of every entry
        seed: Seed for the entry sample
        eps: Finite-difference step
        tol: Maximum accepted relative error

    Returns:
        The worst relative error over the checked entries
    """
    eps = Config.GRADCHECK_EPS if eps is None else eps
    tol = Config.GRADCHECK_TOL if tol is None else tol
    for param in params:
        param.requires_grad = True
    grads = backward(loss_fn())

    entries = [(i, idx) for i, p in enumerate(params) for idx in np.ndindex(*p.shape)]
    if max_entries is not None and max_entries < len(entries):
        rng = np.random.default_rng(seed)
        entries = [entries[j] for j in sorted(rng.choice(len(entries), size=max_entries, replace=False))]

    worst = 0.0
    with no_grad():
        for i, idx in entries:
            param = params[i]
            original = param.data[idx]
            param.data[idx] = original + eps
            plus = loss_fn().item()
            param.data[idx] = original - eps
            minus = loss_fn().item()
            param.data[idx] = original
            numeric = (plus - minus) / (2.0 * eps)
            analytic = float(grads[param][idx]) if param in grads else 0.0
            error = relative_error(analytic, numeric)
            if error > worst:
                worst = error
                gradcheck_logger.debug(
                    f"{name}: {param.name or i}{list(idx)} analytic={analytic:.6e} numeric={numeric:.6e}"
                )
    result = GradCheckResult(name=name, checked=len(entries), max_rel_error=worst, tolerance=tol)
    gradcheck_logger.info(
        f"{name}: {result.checked} entries, max rel err {worst:.3e} ({'ok' if result.passed else 'FAIL'})"
    )
    return result


def _projection(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape)


def projected_loss(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.sum(ops.mul(out, weights))


def check_ops(seed: int = 0) -> List[GradCheckResult]:
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((1, 2, 4, 4, 4)), requires_grad=True)
    y = Tensor(rng.standard_normal((1, 2, 4, 4, 4)), requires_grad=True)
    w = Tensor(rng.standard_normal((3, 2, 3, 3, 3)) * 0.3, requires_grad=True)
    dw = Tensor(rng.standard_normal((2, 1, 3, 3, 3)) * 0.3, requires_grad=True)
    b = Tensor(rng.standard_normal(3), requires_grad=True)
    gamma = Tensor(rng.uniform(0.5, 1.5, 2), requires_grad=True)
    beta = Tensor(rng.standard_normal(2), requires_grad=True)
    flow = Tensor(rng.uniform(-1.3, 1.3, (1, 3, 4, 4, 4)), requires_grad=True)
    lin_w = Tensor(rng.standard_normal((2, 5)), requires_grad=True)
    logits = Tensor(rng.standard_normal((3, 5)), requires_grad=True)

    cases: Dict[str, tuple] = {
        "conv3d": (lambda: ops.conv3d(x, w, b, stride=1, padding=1), [x, w, b]),
        "conv3d_strided": (lambda: ops.conv3d(x, w, b, stride=2, padding=1), [x, w, b]),
        "conv3d_depthwise": (lambda: ops.conv3d(x, dw, None, padding=1, groups=2), [x, dw]),
        "instance_norm": (lambda: ops.instance_norm(x, gamma, beta), [x, gamma, beta]),
        "gelu": (lambda: ops.gelu(x), [x]),
        "softmax": (lambda: ops.softmax(logits, axis=-1), [logits]),
        "roll3d": (lambda: ops.roll3d(x, "height", 3), [x]),
        "elem_max": (lambda: ops.elem_max(x, y), [x, y]),
        "channel_linear": (lambda: ops.channel_linear(x, lin_w), [x, lin_w]),
        "window_sum3d": (lambda: ops.window_sum3d(x, 3), [x]),
        "upsample_trilinear": (lambda: ops.upsample_trilinear(x, 2), [x]),
        "warp3d": (lambda: ops.warp3d(x, flow), [x, flow]),
    }
    results = []
    for name, (build, params) in cases.items():
        with no_grad():
            shape = build().shape
        weights = _projection(rng, shape)
        results.append(check_gradients(name, lambda build=build: projected_loss(build(), weights), params))
    return results


def check_sga(seed: int = 0) -> List[GradCheckResult]:
    rng = np.random.default_rng(seed)
    channels = 3
    x = Tensor(rng.standard_normal((1, channels, 4, 4, 4)))
    spec = make_graph_spec(2, (4, 4, 4))
    grapher_params = GrapherParams(channels, rng)
    ffn_params = FFNParams(channels, rng, expansion=2)
    weights = _projection(rng, x.shape)
    return [
        check_gradients(
            "grapher",
            lambda: projected_loss(grapher(x, grapher_params, spec), weights),
            [x] + grapher_params.parameters(),
        ),
        check_gradients(
            "ffn", lambda: projected_loss(ffn(x, ffn_params), weights), [x] + ffn_params.parameters()
        ),
    ]


def check_ssa(seed: int = 0) -> List[GradCheckResult]:
    rng = np.random.default_rng(seed)
    d = 4
    tokens = Tensor(rng.standard_normal((6, d)))
    ssa_params = SSAParams(d, rng)
    block = SSAFormerParams(d, rng)
    x = Tensor(rng.standard_normal((1, d, 2, 2, 2)))
    token_weights = _projection(rng, (6, d))
    block_weights = _projection(rng, x.shape)
    return [
        check_gradients(
            "ssa",
            lambda: projected_loss(ssa(tokens, ssa_params), token_weights),
            [tokens] + ssa_params.parameters(),
        ),
        check_gradients(
            "ssaformer_block",
            lambda: projected_loss(ssaformer_block(x, block), block_weights),
            [x] + block.parameters(),
        ),
    ]


def gradcheck_network_config(seed: int = 0) -> NetworkConfig:
    """Two-stage network small enough for 8^3 inputs; the flow head starts non-zero."""
    return NetworkConfig(
        stages=2,
        channels=[4, 8],
        stride_k=[2, 1],
        bottleneck_d=4,
        lncc_window=3,
        zero_flow_init=False,
        ffn_expansion=2,
        seed=seed,
    )


def check_network(seed: int = 0, entries: int = 20) -> List[GradCheckResult]:
    rng = np.random.default_rng(seed)
    config = gradcheck_network_config(seed)
    model = RegistrationModel(config)
    moving = Tensor(rng.uniform(0.0, 1.0, (1, 1, 8, 8, 8)))
    fixed = Tensor(rng.uniform(0.0, 1.0, (1, 1, 8, 8, 8)))

    def loss_fn() -> Tensor:
        warped, flow = forward(model, moving, fixed)
        return loss_terms(fixed, warped, flow, config)[0]

    return [check_gradients("network", loss_fn, model.parameters(), max_entries=entries, seed=seed)]


def run_grad_checks(target: GradCheckTarget = GradCheckTarget.ALL, seed: int = 0) -> List[GradCheckResult]:
    """Run the requested suite; raises GradientCheckFailure naming every failed check."""
    target = GradCheckTarget(target)
    suites = {
        GradCheckTarget.SGA: [check_sga],
        GradCheckTarget.SSA: [check_ssa],
        GradCheckTarget.NETWORK: [check_network],
        GradCheckTarget.ALL: [check_ops, check_sga, check_ssa, check_network],
    }[target]
    results = [result for suite in suites for result in suite(seed)]
    failed = [r for r in results if not r.passed]
    if failed:
        summary = ", ".join(f"{r.name} ({r.max_rel_error:.2e})" for r in failed)
        raise GradientCheckFailure(f"Gradient check failed for: {summary}")
    return results
