import numpy as np
import pytest

from src.business.services import (
    dice,
    folding_free_field,
    label_transform,
    make_pair,
    make_phantom,
    mean_dice,
    njd_percent,
    random_smooth_field,
    warp_volume,
)
from src.errors import ConfigException


class TestPhantom:
    def test_same_seed_same_phantom(self):
        first = make_phantom(5, (16, 16, 16), num_labels=3)
        second = make_phantom(5, (16, 16, 16), num_labels=3)
        np.testing.assert_array_equal(first.volume, second.volume)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_different_seeds_differ(self):
        assert not np.array_equal(make_phantom(1, (16, 16, 16)).labels, make_phantom(2, (16, 16, 16)).labels)

    @pytest.mark.parametrize("num_labels", [1, 3, 6])
    def test_every_label_covers_one_percent(self, num_labels):
        phantom = make_phantom(11, (32, 32, 32), num_labels=num_labels)
        counts = np.bincount(phantom.labels.ravel(), minlength=num_labels + 1)
        assert len(counts) == num_labels + 1
        assert counts.min() >= 0.01 * phantom.labels.size

    def test_intensities_stay_in_unit_range(self):
        phantom = make_phantom(3, (16, 16, 16), noise=0.2)
        assert phantom.volume.min() >= 0.0
        assert phantom.volume.max() <= 1.0

    def test_background_is_dark(self):
        phantom = make_phantom(4, (32, 32, 32), num_labels=2)
        assert phantom.volume[phantom.labels == 0].mean() < phantom.volume[phantom.labels > 0].mean()

    @pytest.mark.parametrize("dims", [(1, 16, 16), (16, 16)])
    def test_bad_dims_are_rejected(self, dims):
        with pytest.raises(ConfigException):
            make_phantom(0, dims)


class TestSmoothField:
    def test_zero_amplitude_gives_zero_field(self):
        field = random_smooth_field(0, (8, 8, 8), amplitude=0.0)
        np.testing.assert_array_equal(field.u, 0.0)

    def test_peak_displacement_equals_amplitude(self):
        field = random_smooth_field(1, (16, 16, 16), amplitude=2.5, smoothness=3.0)
        assert field.u.shape == (3, 16, 16, 16)
        assert np.sqrt((field.u**2).sum(axis=0)).max() == pytest.approx(2.5, abs=1e-9)

    def test_is_deterministic(self):
        np.testing.assert_array_equal(
            random_smooth_field(9, (8, 8, 8)).u, random_smooth_field(9, (8, 8, 8)).u
        )

    def test_default_field_is_folding_free(self):
        field = folding_free_field(0, (32, 32, 32), amplitude=2.0, smoothness=4.0)
        assert njd_percent(field.u) == 0.0
        assert 0.0 < field.amplitude <= 2.0

    def test_violent_field_is_shrunk_until_it_unfolds(self):
        field = folding_free_field(0, (16, 16, 16), amplitude=12.0, smoothness=1.0)
        assert njd_percent(field.u) == 0.0
        assert field.amplitude < 12.0

    def test_negative_amplitude_is_rejected(self):
        with pytest.raises(ConfigException):
            random_smooth_field(0, (8, 8, 8), amplitude=-1.0)


class TestPair:
    def test_fixed_is_moving_warped_by_ground_truth(self):
        pair = make_pair(7, (16, 16, 16), num_labels=3)
        np.testing.assert_array_equal(pair.fixed, warp_volume(pair.moving, pair.gt_field))
        np.testing.assert_array_equal(pair.fixed_labels, label_transform(pair.moving_labels, pair.gt_field))

    def test_perturbed_field_misses_fixed_labels(self):
        pair = make_pair(8, (16, 16, 16), num_labels=3)
        perturbed = pair.gt_field + np.array([2.0, -2.0, 2.0])[:, None, None, None]
        exact = mean_dice(dice(pair.fixed_labels, label_transform(pair.moving_labels, pair.gt_field)))
        shifted = mean_dice(dice(pair.fixed_labels, label_transform(pair.moving_labels, perturbed)))
        assert exact == 1.0
        assert shifted < 0.95

    def test_baseline_dice_is_recorded(self):
        pair = make_pair(2, (16, 16, 16), num_labels=3, pair_id="case")
        assert pair.pair_id == "case"
        assert pair.baseline_dice == pytest.approx(mean_dice(dice(pair.fixed_labels, pair.moving_labels)))
        assert 0.0 < pair.baseline_dice < 1.0

    def test_default_pair_id_uses_seed(self):
        assert make_pair(4, (8, 8, 8), num_labels=2).pair_id == "pair_004"
