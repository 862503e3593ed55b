"""Verify every differentiable layer against central finite differences.

The layer library ships its own checker: each forward returns (output,
cache) and the matching backward consumes the cache, so any layer can be
projected to a scalar and differenced numerically.  Run in float64;
linear layers with zero bias should be exact to rounding (~1e-8), the
rest comfortably under 1e-4.
"""

import numpy as np

from fuselab.nn import (
    balanced_ce_loss,
    conv2d_backward,
    conv2d_forward,
    deconv2_backward,
    deconv2_forward,
    grad_check,
    maxpool2_backward,
    maxpool2_forward,
    relu_backward,
    relu_forward,
    softmax_channels_backward,
    softmax_channels_forward,
)

rng = np.random.default_rng(7)

x = rng.standard_normal((2, 3, 6, 6))
w = rng.standard_normal((4, 3, 3, 3))
b = rng.standard_normal(4)


def conv_fwd(x, w, b):
    out, cache = conv2d_forward(x, w, b)
    return out, lambda d: conv2d_backward(cache, d)


print("3x3 convolution        ", grad_check(conv_fwd, [x, w, b]))


xl = rng.standard_normal((1, 2, 5, 5))
wl = rng.standard_normal((3, 2, 3, 3))


def conv_lin(x, w):
    out, cache = conv2d_forward(x, w, np.zeros(3))
    return out, lambda d: conv2d_backward(cache, d)[:2]


print("3x3 convolution (b = 0)", grad_check(conv_lin, [xl, wl]), "<- linear, near exact")

xr = rng.standard_normal((2, 3, 5, 5))
xr[np.abs(xr) < 0.2] += 0.5  # keep clear of the ReLU kink


def relu_fwd(x):
    out, cache = relu_forward(x)
    return out, lambda d: (relu_backward(cache, d),)


print("ReLU                   ", grad_check(relu_fwd, [xr]))


def pool_fwd(x):
    out, cache = maxpool2_forward(x)
    return out, lambda d: (maxpool2_backward(cache, d),)


print("2x2 max pool           ", grad_check(pool_fwd, [rng.standard_normal((2, 3, 6, 6))]))

xd = rng.standard_normal((2, 3, 4, 4))
wd = rng.standard_normal((3, 5, 2, 2))
bd = rng.standard_normal(5)


def deconv_fwd(x, w, b):
    out, cache = deconv2_forward(x, w, b)
    return out, lambda d: deconv2_backward(cache, d)


print("2x2 transposed conv    ", grad_check(deconv_fwd, [xd, wd, bd]))


def softmax_fwd(x):
    out, cache = softmax_channels_forward(x)
    return out, lambda d: (softmax_channels_backward(cache, d),)


print("2-class softmax        ", grad_check(softmax_fwd, [rng.standard_normal((1, 2, 4, 4))]))

# The full training objective: logits -> softmax -> class-balanced cross
# entropy.  The loss returns its own gradient with respect to the logits.
logits = rng.standard_normal((1, 2, 4, 4))
label = rng.integers(0, 2, (4, 4))
label[0, 0], label[0, 1] = 0, 1


def loss_fwd(z):
    p, _ = softmax_channels_forward(z)
    lt = balanced_ce_loss(p, label)
    return np.float64(lt.loss), lambda d: (lt.grad * d,)


print("softmax + balanced CE  ", grad_check(loss_fwd, [logits]))
