"""Forward contracts and gradient checks for the tensor layers."""

import numpy as np
import pytest

from fuselab.nn import (
    concat_channels,
    concat_channels_backward,
    concat_channels_forward,
    conv2d,
    conv2d_backward,
    conv2d_forward,
    deconv2,
    deconv2_backward,
    deconv2_forward,
    grad_check,
    maxpool2,
    maxpool2_backward,
    maxpool2_forward,
    relu,
    relu_forward,
    relu_backward,
    softmax_channels,
    softmax_channels_backward,
    softmax_channels_forward,
)


class TestConv2d:
    def test_ones_kernel_counts_valid_taps(self):
        x = np.ones((1, 1, 3, 3))
        out = conv2d(x, np.ones((1, 1, 3, 3)), np.zeros(1))
        expected = np.array([[4, 6, 4], [6, 9, 6], [4, 6, 4]], dtype=float)
        np.testing.assert_array_equal(out[0, 0], expected)

    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 3, 5, 5))
        w = np.zeros((3, 3, 3, 3))
        for c in range(3):
            w[c, c, 1, 1] = 1.0
        np.testing.assert_allclose(conv2d(x, w, np.zeros(3)), x, rtol=0, atol=1e-14)

    def test_preserves_spatial_size(self):
        rng = np.random.default_rng(1)
        out = conv2d(rng.standard_normal((2, 4, 6, 10)),
                     rng.standard_normal((7, 4, 3, 3)), rng.standard_normal(7))
        assert out.shape == (2, 7, 6, 10)

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channel mismatch"):
            conv2d(np.zeros((1, 2, 4, 4)), np.zeros((1, 3, 3, 3)), np.zeros(1))

    def test_kernel_not_3x3(self):
        with pytest.raises(ValueError, match="3, 3"):
            conv2d(np.zeros((1, 2, 4, 4)), np.zeros((1, 2, 5, 5)), np.zeros(1))

    def test_gradient(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 3, 6, 6))
        w = rng.standard_normal((4, 3, 3, 3))
        b = rng.standard_normal(4)

        def fwd(x, w, b):
            out, cache = conv2d_forward(x, w, b)
            return out, lambda d: conv2d_backward(cache, d)

        assert grad_check(fwd, [x, w, b]) < 1e-4

    def test_linear_in_x_for_fixed_kernel(self):
        rng = np.random.default_rng(2)
        x1 = rng.standard_normal((1, 2, 4, 4))
        x2 = rng.standard_normal((1, 2, 4, 4))
        w = rng.standard_normal((3, 2, 3, 3))
        b = np.zeros(3)
        lhs = conv2d(2.5 * x1 + x2, w, b)
        rhs = 2.5 * conv2d(x1, w, b) + conv2d(x2, w, b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestRelu:
    def test_basic(self):
        np.testing.assert_array_equal(
            relu(np.array([[[[-1.0, 0.0, 2.0]]]])), np.array([[[[0.0, 0.0, 2.0]]]]))

    def test_idempotent(self):
        x = np.random.default_rng(3).standard_normal((2, 3, 4, 4))
        np.testing.assert_array_equal(relu(relu(x)), relu(x))

    def test_gradient_away_from_zero(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((2, 3, 5, 5))
        x[np.abs(x) < 0.1] += 0.5  # keep clear of the kink

        def fwd(x):
            out, cache = relu_forward(x)
            return out, lambda d: (relu_backward(cache, d),)

        assert grad_check(fwd, [x]) < 1e-4

    def test_zero_input_gets_zero_gradient(self):
        x = np.array([[[[0.0, -1.0, 1.0]]]])
        out, cache = relu_forward(x)
        dx = relu_backward(cache, np.ones_like(out))
        np.testing.assert_array_equal(dx, np.array([[[[0.0, 0.0, 1.0]]]]))


class TestMaxpool2:
    def test_window(self):
        out = maxpool2(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
        assert out.shape == (1, 1, 1, 1) and out[0, 0, 0, 0] == 4.0

    def test_constant_halves(self):
        x = np.full((1, 2, 8, 6), 3.25)
        out = maxpool2(x)
        assert out.shape == (1, 2, 4, 3)
        np.testing.assert_array_equal(out, np.full((1, 2, 4, 3), 3.25))

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError, match="even"):
            maxpool2(np.zeros((1, 1, 5, 4)))

    def test_tie_goes_to_first_in_scan_order(self):
        x = np.full((1, 1, 2, 2), 7.0)
        out, cache = maxpool2_forward(x)
        dx = maxpool2_backward(cache, np.ones_like(out))
        np.testing.assert_array_equal(dx[0, 0], np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_gradient(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((2, 3, 6, 6))  # continuous draw: ties have measure zero

        def fwd(x):
            out, cache = maxpool2_forward(x)
            return out, lambda d: (maxpool2_backward(cache, d),)

        assert grad_check(fwd, [x]) < 1e-4


class TestDeconv2:
    def test_single_pixel_paints_block(self):
        out = deconv2(np.full((1, 1, 1, 1), 5.0), np.ones((1, 1, 2, 2)), np.zeros(1))
        np.testing.assert_array_equal(out[0, 0], np.full((2, 2), 5.0))

    def test_bottleneck_upsample_doubles(self):
        rng = np.random.default_rng(6)
        out = deconv2(rng.standard_normal((1, 4, 7, 7)),
                      rng.standard_normal((4, 2, 2, 2)), np.zeros(2))
        assert out.shape == (1, 2, 14, 14)

    def test_kernel_shape_rejected(self):
        with pytest.raises(ValueError, match="2, 2"):
            deconv2(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 3, 3)), np.zeros(1))

    def test_blocks_are_disjoint(self):
        # one input pixel must only influence its own 2x2 output block
        x = np.zeros((1, 1, 3, 3))
        x[0, 0, 1, 1] = 1.0
        out = deconv2(x, np.ones((1, 1, 2, 2)), np.zeros(1))
        expected = np.zeros((6, 6))
        expected[2:4, 2:4] = 1.0
        np.testing.assert_array_equal(out[0, 0], expected)

    def test_gradient(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 3, 4, 4))
        w = rng.standard_normal((3, 5, 2, 2))
        b = rng.standard_normal(5)

        def fwd(x, w, b):
            out, cache = deconv2_forward(x, w, b)
            return out, lambda d: deconv2_backward(cache, d)

        assert grad_check(fwd, [x, w, b]) < 1e-4


class TestConcatChannels:
    def test_shapes(self):
        out = concat_channels(np.zeros((1, 2, 4, 4)), np.zeros((1, 3, 4, 4)))
        assert out.shape == (1, 5, 4, 4)

    def test_round_trip(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((2, 2, 3, 3))
        b = rng.standard_normal((2, 4, 3, 3))
        out, ca = concat_channels_forward(a, b)
        da, db = concat_channels_backward(ca, out)
        np.testing.assert_array_equal(da, a)
        np.testing.assert_array_equal(db, b)

    def test_zero_fill_keeps_first_slice(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((1, 3, 4, 4))
        out = concat_channels(a, np.zeros((1, 2, 4, 4)))
        np.testing.assert_array_equal(out[:, :3], a)

    def test_spatial_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            concat_channels(np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 5, 4)))


class TestSoftmaxChannels:
    def test_equal_logits(self):
        p = softmax_channels(np.zeros((1, 2, 2, 2)))
        np.testing.assert_allclose(p, 0.5)

    def test_shift_invariance(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((1, 2, 4, 4))
        shift = rng.standard_normal((1, 1, 4, 4))
        np.testing.assert_allclose(softmax_channels(x + shift), softmax_channels(x),
                                   atol=1e-12)

    def test_normalized_even_for_huge_logits(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((1, 2, 8, 8)) * 1e4
        p = softmax_channels(x)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
        assert np.isfinite(p).all()

    def test_channel_count_enforced(self):
        with pytest.raises(ValueError, match="2 channels"):
            softmax_channels(np.zeros((1, 3, 2, 2)))

    def test_gradient(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((1, 2, 4, 4))

        def fwd(x):
            out, cache = softmax_channels_forward(x)
            return out, lambda d: (softmax_channels_backward(cache, d),)

        assert grad_check(fwd, [x]) < 1e-4


def test_shape_algebra_pool_then_deconv_restores_dims():
    rng = np.random.default_rng(14)
    x = rng.standard_normal((1, 3, 8, 8))
    pooled = maxpool2(x)
    restored = deconv2(pooled, rng.standard_normal((3, 3, 2, 2)), np.zeros(3))
    assert restored.shape[2:] == x.shape[2:]


def test_forward_passes_stay_finite():
    rng = np.random.default_rng(15)
    x = rng.standard_normal((2, 3, 8, 8)) * 100
    out = conv2d(x, rng.standard_normal((4, 3, 3, 3)), rng.standard_normal(4))
    out = relu(out)
    out = maxpool2(out)
    out = deconv2(out, rng.standard_normal((4, 2, 2, 2)), rng.standard_normal(2))
    out = softmax_channels(out)
    assert np.isfinite(out).all()
