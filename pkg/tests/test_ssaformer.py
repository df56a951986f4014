import math
import time

import numpy as np
import pytest

from src.business.autodiff import Tensor
from src.business.models import (
    DCSParams,
    MHAParams,
    SSAFormerParams,
    SSAParams,
    context_scores,
    context_vector,
    count_mixer_flops,
    dcs,
    mha_reference,
    mixer_flop_terms,
    ssa,
    ssaformer_block,
)
from src.data.schemas import MixerKind
from src.errors import ConfigException, ShapeException


def literal_ssa(tokens, w_i, w_k, w_v, w_o):
    """Token-by-token transcription of separable self-attention."""
    k, d = tokens.shape
    raw = np.array([tokens[i] @ w_i / math.sqrt(d) for i in range(k)])
    raw = np.exp(raw - raw.max())
    c_s = raw / raw.sum()
    c_v = np.zeros(d)
    for i in range(k):
        c_v += c_s[i] * (tokens[i] @ w_k)
    out = np.zeros((k, w_o.shape[1]))
    for i in range(k):
        out[i] = (c_v * np.maximum(tokens[i] @ w_v, 0.0)) @ w_o
    return out


def single_head_attention(tokens, w_q, w_k, w_v, w_o):
    q, key, v = tokens @ w_q, tokens @ w_k, tokens @ w_v
    scores = q @ key.T / math.sqrt(tokens.shape[1])
    weights = np.exp(scores - scores.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ v @ w_o


class TestContext:
    def test_single_token_gets_full_score(self, rng):
        p = SSAParams(5, rng)
        np.testing.assert_array_equal(context_scores(Tensor(rng.standard_normal((1, 5))), p).data, [1.0])

    def test_identical_tokens_get_uniform_scores(self, rng):
        p = SSAParams(4, rng)
        tokens = Tensor(np.tile(rng.standard_normal(4), (6, 1)))
        np.testing.assert_allclose(context_scores(tokens, p).data, np.full(6, 1 / 6), atol=1e-15)

    def test_two_token_hand_example(self, rng):
        p = SSAParams(1, rng)
        p.w_i.data[...] = 1.0
        scores = context_scores(Tensor(np.array([[0.0], [1.0]])), p).data
        expected = np.exp([0.0, 1.0]) / np.exp([0.0, 1.0]).sum()
        np.testing.assert_allclose(scores, expected, atol=1e-15)

    def test_scores_sum_to_one(self, rng):
        p = SSAParams(8, rng)
        scores = context_scores(Tensor(rng.standard_normal((50, 8)) * 10.0), p).data
        assert scores.sum() == pytest.approx(1.0, abs=1e-12)
        assert scores.min() >= 0.0

    def test_one_hot_scores_pick_a_key(self, rng):
        p = SSAParams(4, rng)
        tokens = rng.standard_normal((5, 4))
        c_s = np.zeros(5)
        c_s[2] = 1.0
        c_v = context_vector(Tensor(tokens), Tensor(c_s), p).data
        np.testing.assert_allclose(c_v, tokens[2] @ p.w_k.data, atol=1e-12)

    def test_uniform_scores_with_identity_keys_give_token_mean(self, rng):
        p = SSAParams(4, rng)
        p.w_k.data[...] = np.eye(4)
        tokens = rng.standard_normal((7, 4))
        c_v = context_vector(Tensor(tokens), Tensor(np.full(7, 1 / 7)), p).data
        np.testing.assert_allclose(c_v, tokens.mean(axis=0), atol=1e-12)

    def test_score_length_mismatch_is_rejected(self, rng):
        p = SSAParams(4, rng)
        with pytest.raises(ShapeException):
            context_vector(Tensor(np.zeros((3, 4))), Tensor(np.full(2, 0.5)), p)


class TestSSA:
    def test_matches_literal_transcription(self, rng):
        p = SSAParams(6, rng)
        tokens = rng.standard_normal((20, 6))
        expected = literal_ssa(tokens, p.w_i.data, p.w_k.data, p.w_v.data, p.w_o.data)
        np.testing.assert_allclose(ssa(Tensor(tokens), p).data, expected, atol=1e-12)

    def test_zero_value_map_gives_zero_output(self, rng):
        p = SSAParams(4, rng)
        p.w_v.data[...] = 0.0
        np.testing.assert_array_equal(ssa(Tensor(rng.standard_normal((9, 4))), p).data, 0.0)

    def test_single_token(self, rng):
        p = SSAParams(3, rng)
        token = rng.standard_normal((1, 3))
        expected = ((token @ p.w_k.data) * np.maximum(token @ p.w_v.data, 0.0)) @ p.w_o.data
        np.testing.assert_allclose(ssa(Tensor(token), p).data, expected, atol=1e-12)

    def test_token_permutation_permutes_output(self, rng):
        p = SSAParams(4, rng)
        tokens = rng.standard_normal((10, 4))
        order = rng.permutation(10)
        out = ssa(Tensor(tokens), p).data
        np.testing.assert_allclose(ssa(Tensor(tokens[order]), p).data, out[order], atol=1e-12)

    def test_output_dim_follows_output_map(self, rng):
        p = SSAParams(4, rng, d_out=6)
        assert ssa(Tensor(rng.standard_normal((5, 4))), p).shape == (5, 6)

    def test_wrong_token_dim_is_rejected(self, rng):
        with pytest.raises(ShapeException):
            ssa(Tensor(np.zeros((5, 3))), SSAParams(4, rng))


class TestMHA:
    def test_single_token_passes_values_through(self, rng):
        p = MHAParams(4, 2, rng)
        token = rng.standard_normal((1, 4))
        np.testing.assert_allclose(
            mha_reference(Tensor(token), p).data, token @ p.w_v.data @ p.w_o.data, atol=1e-12
        )

    def test_identical_tokens_get_uniform_weights(self, rng):
        p = MHAParams(4, 2, rng)
        tokens = Tensor(np.tile(rng.standard_normal(4), (5, 1)))
        _, weights = mha_reference(tokens, p, return_weights=True)
        assert weights.shape == (2, 5, 5)
        np.testing.assert_allclose(weights, 0.2, atol=1e-15)

    def test_single_head_matches_direct_formula(self, rng):
        p = MHAParams(4, 1, rng)
        tokens = rng.standard_normal((3, 4))
        expected = single_head_attention(tokens, p.w_q.data, p.w_k.data, p.w_v.data, p.w_o.data)
        np.testing.assert_allclose(mha_reference(Tensor(tokens), p).data, expected, atol=1e-12)

    def test_indivisible_heads_are_rejected(self, rng):
        with pytest.raises(ConfigException):
            MHAParams(6, 4, rng)


class TestBlock:
    def test_dcs_with_identity_convolutions(self, rng):
        p = DCSParams(3, rng)
        p.depthwise.weight.data[...] = 0.0
        p.depthwise.weight.data[:, 0, 1, 1, 1] = 1.0
        p.depthwise.bias.data[...] = 0.0
        p.pointwise.weight.data[...] = np.eye(3).reshape(3, 3, 1, 1, 1)
        p.pointwise.bias.data[...] = 0.0
        x = Tensor(rng.standard_normal((1, 3, 4, 4, 4)))
        np.testing.assert_allclose(dcs(x, p, activation=False).data, x.data, atol=1e-14)

    @pytest.mark.parametrize("mixer", [MixerKind.SSA, MixerKind.MHA])
    def test_zeroed_output_maps_make_block_identity(self, rng, mixer):
        params = SSAFormerParams(4, rng, mixer=mixer, heads=2)
        params.mixer.w_o.data[...] = 0.0
        params.dcs.pointwise.weight.data[...] = 0.0
        params.dcs.pointwise.bias.data[...] = 0.0
        x = Tensor(rng.standard_normal((2, 4, 2, 2, 2)))
        np.testing.assert_array_equal(ssaformer_block(x, params).data, x.data)

    def test_block_preserves_shape(self, rng):
        x = Tensor(rng.standard_normal((1, 4, 2, 3, 2)))
        assert ssaformer_block(x, SSAFormerParams(4, rng)).shape == x.shape

    def test_block_channel_mismatch_is_rejected(self, rng):
        with pytest.raises(ShapeException):
            ssaformer_block(Tensor(np.zeros((1, 3, 2, 2, 2))), SSAFormerParams(4, rng))


class TestFlops:
    def test_ssa_is_linear_in_tokens(self):
        assert count_mixer_flops("ssa", 1024, 32) == 2 * count_mixer_flops("ssa", 512, 32)

    def test_attention_scores_are_quadratic_in_tokens(self):
        small = mixer_flop_terms("mha", 512, 32)
        large = mixer_flop_terms("mha", 1024, 32)
        assert large["scores"] == 4 * small["scores"]

    def test_closed_forms(self):
        k, d = 256, 64
        assert count_mixer_flops(MixerKind.SSA, k, d) == k * (3 * d + 2 * d * d + d * d)
        assert count_mixer_flops(MixerKind.MHA, k, d) == 3 * k * d * d + 2 * k * k * d + k * d * d

    def test_non_positive_sizes_are_rejected(self):
        with pytest.raises(ConfigException):
            count_mixer_flops("ssa", 0, 8)


@pytest.mark.slow
def test_ssa_is_faster_than_attention_on_long_sequences(rng):
    tokens = Tensor(rng.standard_normal((4096, 64)))
    ssa_params, mha_params = SSAParams(64, rng), MHAParams(64, 1, rng)

    def best_of(fn, repeats=3):
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            times.append(time.perf_counter() - start)
        return min(times)

    ssa_time = best_of(lambda: ssa(tokens, ssa_params))
    mha_time = best_of(lambda: mha_reference(tokens, mha_params))
    assert mha_time / ssa_time >= 5.0
