"""Background-model generators: contracts, convergence, determinism."""

import numpy as np
import pytest

from fuselab.bgs import GmmModel, MedianModel, SampleModel, run_bgs


def _static_video(n, value=90, shape=(24, 24)):
    return [np.full(shape, value, np.uint8)] * n


class TestGmm:
    def test_constant_video_all_background(self):
        model = GmmModel((16, 16))
        mask = None
        for frame in _static_video(100, shape=(16, 16)):
            mask = model.step(frame)
        np.testing.assert_array_equal(mask, 0)

    def test_jump_beyond_band_is_foreground(self):
        model = GmmModel((8, 8))
        for frame in _static_video(100, value=90, shape=(8, 8)):
            model.step(frame)
        jump = np.full((8, 8), 90, np.uint8)
        sigma = np.sqrt(model.var[0, 4, 4])
        jump[4, 4] = min(255, int(90 + 10 * model.match_sigmas * sigma))
        mask = model.step(jump)
        assert mask[4, 4] == 255
        assert mask[0, 0] == 0

    def test_weights_normalized_every_step(self):
        model = GmmModel((12, 12))
        rng = np.random.default_rng(0)
        for _ in range(50):
            model.step(rng.integers(0, 256, (12, 12)).astype(np.uint8))
            np.testing.assert_allclose(model.weight.sum(axis=0), 1.0, atol=1e-6)

    def test_variance_floor(self):
        model = GmmModel((8, 8), var_floor=4.0)
        for frame in _static_video(200, shape=(8, 8)):
            model.step(frame)
        assert (model.var >= 4.0).all()

    def test_dimension_mismatch(self):
        model = GmmModel((8, 8))
        with pytest.raises(ValueError, match="does not match"):
            model.step(np.zeros((9, 8), np.uint8))


class TestSampleConsensus:
    def test_value_matching_all_samples_is_background(self):
        model = SampleModel((10, 10), seed=1)
        frame = np.full((10, 10), 120, np.uint8)
        model.initialize(frame)
        np.testing.assert_array_equal(model.step(frame), 0)

    def test_value_far_from_all_samples_is_foreground(self):
        model = SampleModel((10, 10), radius=20, seed=1)
        model.initialize(np.full((10, 10), 120, np.uint8))
        mask = model.step(np.full((10, 10), 200, np.uint8))
        np.testing.assert_array_equal(mask, 255)

    def test_sample_count_invariant(self):
        model = SampleModel((6, 6), samples=20, seed=2)
        model.initialize(np.full((6, 6), 50, np.uint8))
        rng = np.random.default_rng(3)
        for _ in range(30):
            model.step(rng.integers(0, 256, (6, 6)).astype(np.uint8))
            assert model.samples.shape == (20, 6, 6)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(4)
        video = [rng.integers(0, 256, (12, 12)).astype(np.uint8) for _ in range(20)]
        a = run_bgs(video, "sc", seed=7)
        b = run_bgs(video, "sc", seed=7)
        for ma, mb in zip(a, b):
            np.testing.assert_array_equal(ma, mb)

    def test_step_before_initialize(self):
        with pytest.raises(ValueError, match="initialize"):
            SampleModel((4, 4)).step(np.zeros((4, 4), np.uint8))


class TestMedian:
    def test_constant_video_from_frame_two(self):
        model = MedianModel((8, 8))
        masks = [model.step(f) for f in _static_video(5, shape=(8, 8))]
        for mask in masks[1:]:
            np.testing.assert_array_equal(mask, 0)

    def test_single_frame_spike(self):
        model = MedianModel((4, 4), tau=30.0)
        for frame in _static_video(10, value=100, shape=(4, 4)):
            model.step(frame)
        spike = np.full((4, 4), 160, np.uint8)  # amplitude 2 * tau
        np.testing.assert_array_equal(model.step(spike), 255)
        after = model.step(np.full((4, 4), 100, np.uint8))
        np.testing.assert_array_equal(after, 0)

    def test_buffer_bounded(self):
        model = MedianModel((4, 4), buffer=7)
        for frame in _static_video(20, shape=(4, 4)):
            model.step(frame)
        assert model.count <= 7


class TestRunBgs:
    def test_one_mask_per_frame(self):
        rng = np.random.default_rng(5)
        video = [rng.integers(0, 256, (20, 30)).astype(np.uint8) for _ in range(100)]
        masks = run_bgs(video, "median")
        assert len(masks) == 100
        for m in masks:
            assert m.shape == (20, 30)
            assert set(np.unique(m)) <= {0, 255}

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            run_bgs([np.zeros((4, 4), np.uint8)], "xyz")

    def test_empty_video(self):
        with pytest.raises(ValueError, match="empty"):
            run_bgs([], "gmm")

    @pytest.mark.parametrize("algo,burn_in", [("gmm", 100), ("sc", 1), ("median", 2)])
    def test_static_convergence_within_burn_in(self, algo, burn_in):
        masks = run_bgs(_static_video(burn_in + 10), algo, seed=0)
        for m in masks[burn_in - 1:]:
            np.testing.assert_array_equal(m, 0)

    def test_parameter_overrides(self):
        video = _static_video(5, shape=(8, 8))
        masks = run_bgs(video, "median", params={"buffer": 3, "tau": 10.0})
        np.testing.assert_array_equal(masks[-1], 0)
