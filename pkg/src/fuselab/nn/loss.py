"""Class-balanced cross-entropy over a two-class probability map.

The foreground sum is weighted by beta = |background| / |all| and the
background sum by 1 - beta, both computed over the non-ignored pixels of
the label, so the rarer class carries the larger weight.  Channel 0 holds
the background probability, channel 1 the foreground probability.
"""

from dataclasses import dataclass

import numpy as np

PROB_CLAMP = 1e-7  # probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] before log


@dataclass
class LossTerms:
    """Scalar loss, the balancing fraction beta, and dLoss/dlogits."""

    loss: float
    beta: float
    grad: np.ndarray  # (1, 2, h, w), gradient w.r.t. the pre-softmax logits


def balanced_ce_loss(prob, label, ignore=None):
    """Evaluate the class-balanced cross entropy for one sample.

    Parameters
    ----------
    prob : (1, 2, h, w) softmax output; channel 1 is the foreground probability.
    label : (h, w) with values in {0, 1} on non-ignored pixels.
    ignore : optional (h, w); nonzero marks pixels excluded from both sums
        and from beta.

    Returns
    -------
    LossTerms with loss >= 0, beta = |background| / |non-ignored|, and the
    gradient with respect to the logits that produced ``prob``.
    """
    prob = np.asarray(prob)
    label = np.asarray(label)
    if prob.ndim != 4 or prob.shape[0] != 1 or prob.shape[1] != 2:
        raise ValueError(f"prob must be (1, 2, h, w), got {prob.shape}")
    if label.shape != prob.shape[2:]:
        raise ValueError(f"label shape {label.shape} does not match prob {prob.shape}")
    if ignore is None:
        keep = np.ones(label.shape, dtype=bool)
    else:
        ignore = np.asarray(ignore)
        if ignore.shape != label.shape:
            raise ValueError(f"ignore shape {ignore.shape} does not match label {label.shape}")
        keep = ignore == 0

    lab = label[keep]
    bad = (lab != 0) & (lab != 1)
    if bad.any():
        raise ValueError("label values outside {0, 1} on non-ignored pixels")

    total = lab.size
    grad = np.zeros_like(prob)
    if total == 0:
        return LossTerms(loss=0.0, beta=1.0, grad=grad)

    fg = keep & (label == 1)
    bg = keep & (label == 0)
    beta = float(bg.sum()) / total

    p = np.clip(prob, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = -beta * np.log(p[0, 1][fg]).sum() - (1.0 - beta) * np.log(p[0, 0][bg]).sum()

    # softmax + cross entropy collapse: dL/dz = weight * (p - onehot)
    grad[0, 0][fg] = beta * prob[0, 0][fg]
    grad[0, 1][fg] = beta * (prob[0, 1][fg] - 1.0)
    grad[0, 0][bg] = (1.0 - beta) * (prob[0, 0][bg] - 1.0)
    grad[0, 1][bg] = (1.0 - beta) * prob[0, 1][bg]
    return LossTerms(loss=float(loss), beta=beta, grad=grad)
