"""Minimal differentiable layer library backing the mask-fusion network."""

from fuselab.nn.layers import (
    concat_channels,
    concat_channels_backward,
    concat_channels_forward,
    conv2d,
    conv2d_backward,
    conv2d_forward,
    deconv2,
    deconv2_backward,
    deconv2_forward,
    maxpool2,
    maxpool2_backward,
    maxpool2_forward,
    relu,
    relu_backward,
    relu_forward,
    softmax_channels,
    softmax_channels_backward,
    softmax_channels_forward,
)
from fuselab.nn.loss import PROB_CLAMP, LossTerms, balanced_ce_loss
from fuselab.nn.optim import AdamState, Param, ParamStore, adam_step, he_init
from fuselab.nn.gradcheck import grad_check

__all__ = [
    "AdamState",
    "LossTerms",
    "PROB_CLAMP",
    "Param",
    "ParamStore",
    "adam_step",
    "balanced_ce_loss",
    "concat_channels",
    "concat_channels_backward",
    "concat_channels_forward",
    "conv2d",
    "conv2d_backward",
    "conv2d_forward",
    "deconv2",
    "deconv2_backward",
    "deconv2_forward",
    "grad_check",
    "he_init",
    "maxpool2",
    "maxpool2_backward",
    "maxpool2_forward",
    "relu",
    "relu_backward",
    "relu_forward",
    "softmax_channels",
    "softmax_channels_backward",
    "softmax_channels_forward",
]
