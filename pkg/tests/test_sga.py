import itertools

import numpy as np
import pytest

from src.business.autodiff import Tensor, backward, ops
from src.business.models import (
    FFNParams,
    GrapherParams,
    PoolBlock,
    SGABlock,
    ffn,
    grapher,
    make_graph_spec,
    relative_max,
    sga_block,
    sga_neighbors,
    sga_oracle,
)
from src.errors import ConfigException, ShapeException


class TestNeighbors:
    def test_stride_equal_to_extent_keeps_only_self(self):
        spec = make_graph_spec(4, (4, 4, 4))
        assert sga_neighbors(spec, (1, 2, 3)) == [(1, 2, 3)]

    def test_width_line_of_a_thin_volume(self):
        spec = make_graph_spec(2, (1, 1, 9))
        assert set(sga_neighbors(spec, (0, 0, 0))) == {(0, 0, w) for w in (0, 2, 4, 6, 8)}

    def test_dense_stride_connects_whole_lines(self):
        spec = make_graph_spec(1, (3, 3, 3))
        neighbours = sga_neighbors(spec, (0, 0, 0))
        assert len(neighbours) == 7
        assert neighbours[0] == (0, 0, 0)

    def test_neighbours_wrap_around(self):
        spec = make_graph_spec(2, (4, 4, 4))
        assert set(sga_neighbors(spec, (3, 3, 3))) == {(3, 3, 3), (3, 3, 1), (3, 1, 3), (1, 3, 3)}

    def test_every_neighbour_differs_along_one_axis(self):
        spec = make_graph_spec(3, (5, 6, 7))
        for q in sga_neighbors(spec, (2, 4, 1)):
            assert sum(a != b for a, b in zip(q, (2, 4, 1))) <= 1

    def test_voxel_outside_volume_is_rejected(self):
        with pytest.raises(ShapeException):
            sga_neighbors(make_graph_spec(2, (4, 4, 4)), (4, 0, 0))

    def test_invalid_stride_is_a_config_error(self):
        with pytest.raises(ConfigException):
            make_graph_spec(0, (4, 4, 4))


class TestRelativeMax:
    def test_constant_input_gives_zero(self):
        x = Tensor(np.full((1, 3, 4, 4, 4), 2.5))
        np.testing.assert_array_equal(relative_max(x, make_graph_spec(1, (4, 4, 4))).data, 0.0)

    def test_stride_at_least_extent_gives_zero(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 4, 4, 4)))
        np.testing.assert_array_equal(relative_max(x, make_graph_spec(4, (4, 4, 4))).data, 0.0)

    def test_output_is_non_negative(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 4, 6, 5)))
        assert relative_max(x, make_graph_spec(2, (4, 6, 5))).data.min() >= 0.0

    @pytest.mark.parametrize("stride_k, expected", [(2, 1.0), (4, 0.0)])
    def test_single_hot_voxel(self, stride_k, expected):
        data = np.zeros((1, 1, 4, 4, 4))
        data[0, 0, 1, 2, 3] = 1.0
        x_j = relative_max(Tensor(data), make_graph_spec(stride_k, (4, 4, 4))).data
        assert x_j[0, 0, 1, 2, 3] == expected
        x_j[0, 0, 1, 2, 3] = 0.0
        np.testing.assert_array_equal(x_j, 0.0)

    @pytest.mark.parametrize(
        "stride_k, size", list(itertools.product((1, 2, 4), (4, 6, 8)))
    )
    def test_matches_oracle(self, rng, stride_k, size):
        spec = make_graph_spec(stride_k, (size, size, size))
        for _ in range(2):
            x = Tensor(rng.standard_normal((1, 2, size, size, size)))
            np.testing.assert_array_equal(relative_max(x, spec).data, sga_oracle(x, spec).data)

    def test_matches_oracle_on_anisotropic_dims(self, rng):
        spec = make_graph_spec(3, (5, 7, 4))
        x = Tensor(rng.standard_normal((2, 3, 5, 7, 4)))
        np.testing.assert_array_equal(relative_max(x, spec).data, sga_oracle(x, spec).data)

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "stride_k, size", list(itertools.product((1, 2, 4), (4, 6, 8)))
    )
    def test_matches_oracle_on_many_inputs(self, rng, stride_k, size):
        spec = make_graph_spec(stride_k, (size, size, size))
        for _ in range(20):
            x = Tensor(rng.standard_normal((1, 4, size, size, size)))
            np.testing.assert_array_equal(relative_max(x, spec).data, sga_oracle(x, spec).data)

    def test_translation_equivariance(self, rng):
        spec = make_graph_spec(2, (6, 6, 6))
        data = rng.standard_normal((1, 2, 6, 6, 6))
        shift = (1, 2, 3)
        shifted = np.roll(data, shift, axis=(2, 3, 4))
        expected = np.roll(relative_max(Tensor(data), spec).data, shift, axis=(2, 3, 4))
        np.testing.assert_array_equal(relative_max(Tensor(shifted), spec).data, expected)

    def test_dims_mismatch_is_rejected(self, rng):
        with pytest.raises(ShapeException):
            relative_max(Tensor(rng.standard_normal((1, 1, 4, 4, 4))), make_graph_spec(2, (4, 4, 6)))

    def test_oracle_refuses_large_volumes(self):
        spec = make_graph_spec(2, (17, 4, 4))
        with pytest.raises(ConfigException):
            sga_oracle(Tensor(np.zeros((1, 1, 17, 4, 4))), spec)

    def test_gradient_flows_to_input(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 4, 4, 4)), requires_grad=True)
        grads = backward(ops.sum(relative_max(x, make_graph_spec(2, (4, 4, 4)))))
        assert grads[x].shape == x.shape
        assert np.abs(grads[x]).sum() > 0.0


class TestBlocks:
    def test_grapher_with_zero_output_projection_is_identity(self, rng):
        params = GrapherParams(4, rng)
        params.fc_out.weight.data[...] = 0.0
        params.fc_out.bias.data[...] = 0.0
        x = Tensor(rng.standard_normal((1, 4, 4, 4, 4)))
        np.testing.assert_array_equal(grapher(x, params, make_graph_spec(2, (4, 4, 4))).data, x.data)

    def test_ffn_with_zero_second_projection_is_identity(self, rng):
        params = FFNParams(4, rng, expansion=2)
        params.fc2.weight.data[...] = 0.0
        params.fc2.bias.data[...] = 0.0
        x = Tensor(rng.standard_normal((1, 4, 4, 4, 4)))
        np.testing.assert_array_equal(ffn(x, params).data, x.data)

    def test_block_preserves_shape(self, rng):
        x = Tensor(rng.standard_normal((1, 4, 4, 6, 8)))
        out = sga_block(x, make_graph_spec(2, (4, 6, 8)), GrapherParams(4, rng), FFNParams(4, rng))
        assert out.shape == x.shape

    def test_grapher_without_fc_has_no_linear_layers(self, rng):
        with_fc = GrapherParams(4, rng, fc=True)
        without_fc = GrapherParams(4, rng, fc=False)
        assert with_fc.param_count() - without_fc.param_count() == 2 * (4 * 4 + 4) + 2 * (2 * 4)
        x = Tensor(rng.standard_normal((1, 4, 4, 4, 4)))
        assert grapher(x, without_fc, make_graph_spec(2, (4, 4, 4))).shape == x.shape

    def test_sga_module_builds_graph_from_input(self, rng):
        block = SGABlock(4, 2, rng, use_ffn=False)
        assert block.ffn is None
        assert block(Tensor(rng.standard_normal((1, 4, 4, 4, 8)))).shape == (1, 4, 4, 4, 8)

    def test_sga_module_rejects_bad_stride(self, rng):
        with pytest.raises(ConfigException):
            SGABlock(4, 0, rng)

    def test_pool_block_preserves_shape(self, rng):
        block = PoolBlock(4, rng, ffn_expansion=2)
        assert block(Tensor(rng.standard_normal((1, 4, 4, 4, 4)))).shape == (1, 4, 4, 4, 4)

    def test_channel_mismatch_is_rejected(self, rng):
        params = GrapherParams(4, rng)
        with pytest.raises(ShapeException):
            grapher(Tensor(np.zeros((1, 3, 4, 4, 4))), params, make_graph_spec(2, (4, 4, 4)))
