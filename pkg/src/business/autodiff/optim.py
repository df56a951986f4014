from typing import Dict, Sequence

import numpy as np

from src.business.autodiff.tensor import Tensor
from src.config import logger
from src.data.schemas.optim import AdamState
from src.errors import GradientException, ShapeException

optim_logger = logger.getChild("optim")


def init_adam_state(params: Sequence[Tensor], lr: float = 1e-4) -> AdamState:
    """Zero first/second moments for every parameter, in parameter order."""
    return AdamState(
        lr=lr,
        m=[np.zeros_like(p.data) for p in params],
        v=[np.zeros_like(p.data) for p in params],
    )


def adam_step(
    params: Sequence[Tensor], grads: Dict[Tensor, np.ndarray], state: AdamState
) -> AdamState:
    """
    Apply one bias-corrected Adam update to every parameter in place.

    Args:
        params: Parameters in the same order the state was created with
        grads: Gradient map returned by backward()
        state: Moment estimates; step is advanced by exactly one

    Returns:
        The same state object, updated
    """
    if len(params) != len(state.m):
        raise ShapeException(
            f"Adam state tracks {len(state.m)} parameters but {len(params)} were given"
        )
    for position, param in enumerate(params):
        if param not in grads:
            label = param.name or f"#{position}"
            raise GradientException(f"Missing gradient for parameter {label}")
        if grads[param].shape != param.shape or state.m[position].shape != param.shape:
            raise ShapeException(
                f"Gradient/moment shape mismatch for parameter {param.name or position}: "
                f"param {param.shape}, grad {grads[param].shape}, moment {state.m[position].shape}"
            )

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for position, param in enumerate(params):
        grad = grads[param]
        state.m[position] = state.beta1 * state.m[position] + (1.0 - state.beta1) * grad
        state.v[position] = state.beta2 * state.v[position] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[position] / correction1
        v_hat = state.v[position] / correction2
        param.data = param.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

    optim_logger.debug(f"Adam step {state.step} applied to {len(params)} parameters")
    return state
