"""The finite-difference checker itself."""

import numpy as np
import pytest

from fuselab.nn import (
    balanced_ce_loss,
    conv2d_backward,
    conv2d_forward,
    grad_check,
    relu_backward,
    relu_forward,
    softmax_channels_forward,
)


def test_linear_op_is_near_exact():
    """Central differences are exact for linear maps up to rounding."""
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1, 2, 5, 5))
    w = rng.standard_normal((3, 2, 3, 3))

    def fwd(x, w):
        out, cache = conv2d_forward(x, w, np.zeros(3))
        return out, lambda d: conv2d_backward(cache, d)[:2]

    assert grad_check(fwd, [x, w]) < 1e-7


def test_relu_bounded_away_from_zero():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 2, 4, 4))
    x[np.abs(x) < 0.2] += 0.5

    def fwd(x):
        out, cache = relu_forward(x)
        return out, lambda d: (relu_backward(cache, d),)

    assert grad_check(fwd, [x]) < 1e-4


def test_full_loss_pipeline():
    rng = np.random.default_rng(2)
    logits = rng.standard_normal((1, 2, 4, 4))
    label = rng.integers(0, 2, (4, 4))
    label[0, 0], label[0, 1] = 0, 1  # guarantee both classes

    def fwd(z):
        p, _ = softmax_channels_forward(z)
        lt = balanced_ce_loss(p, label)
        return np.float64(lt.loss), lambda d: (lt.grad * d,)

    assert grad_check(fwd, [logits]) < 1e-4


def test_detects_a_wrong_gradient():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((1, 1, 4, 4))

    def fwd(x):
        out, cache = relu_forward(x)
        return out, lambda d: (relu_backward(cache, d) * 1.5,)  # deliberately off

    assert grad_check(fwd, [x]) > 0.1


def test_rejects_nonfinite_forward():
    def fwd(x):
        out = x.copy()
        out[0, 0] = np.inf
        return out, lambda d: (d,)

    with pytest.raises(ValueError, match="non-finite"):
        grad_check(fwd, [np.ones((2, 2))])
