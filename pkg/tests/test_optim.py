import numpy as np
import pytest

from src.business.autodiff import Tensor, adam_step, backward, init_adam_state, ops
from src.errors import GradientException, ShapeException


def test_zero_gradient_leaves_parameters_unchanged():
    param = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    state = init_adam_state([param])
    adam_step([param], {param: np.zeros(3)}, state)
    np.testing.assert_array_equal(param.data, [1.0, -2.0, 3.0])
    assert state.step == 1


def test_first_step_with_unit_gradient():
    param = Tensor(np.zeros(4), requires_grad=True)
    state = init_adam_state([param], lr=1e-4)
    adam_step([param], {param: np.ones(4)}, state)
    np.testing.assert_allclose(param.data, np.full(4, -1e-4 / (1.0 + 1e-8)), rtol=1e-12)
    np.testing.assert_allclose(state.m[0], np.full(4, 0.1))
    np.testing.assert_allclose(state.v[0], np.full(4, 0.001))


def test_quadratic_bowl_norm_strictly_decreases():
    param = Tensor(np.array([5.0, -3.0, 4.0]), requires_grad=True)
    state = init_adam_state([param], lr=1e-2)
    norms = [np.linalg.norm(param.data)]
    for _ in range(100):
        grads = backward(ops.sum(ops.square(param)))
        adam_step([param], grads, state)
        norms.append(np.linalg.norm(param.data))
    assert all(later < earlier for earlier, later in zip(norms, norms[1:]))
    assert state.step == 100


def test_missing_gradient_is_rejected():
    used = Tensor(np.ones(2), requires_grad=True)
    unused = Tensor(np.ones(2), requires_grad=True, name="encoder.unused")
    state = init_adam_state([used, unused])
    grads = backward(ops.sum(used))
    with pytest.raises(GradientException, match="encoder.unused"):
        adam_step([used, unused], grads, state)
    assert state.step == 0


def test_parameter_count_mismatch_is_rejected():
    param = Tensor(np.ones(2), requires_grad=True)
    state = init_adam_state([param])
    with pytest.raises(ShapeException):
        adam_step([param, param], {param: np.ones(2)}, state)
