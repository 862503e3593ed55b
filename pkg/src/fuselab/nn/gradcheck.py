"""Finite-difference verification of analytic gradients.

Works on any forward function of the ``(out, backward)`` convention used
in :mod:`fuselab.nn.layers`.  The (possibly tensor-valued) output is
projected onto a fixed random direction so a single scalar can be
differentiated; run in float64, float32 rounding drowns the comparison.
The projection is accumulated with math.fsum, otherwise summation error
dominates the difference quotient for linear layers.
"""

import math

import numpy as np


def grad_check(forward, inputs, eps=1e-5, seed=0):
    """Compare analytic gradients against central finite differences.

    Parameters
    ----------
    forward : callable(*inputs) -> (out, backward) where backward(dout)
        returns one gradient array per entry of ``inputs``.
    inputs : sequence of float64 arrays, all treated as differentiable.
    eps : central-difference step.

    Returns the worst relative error over all input coordinates, where the
    relative error of analytic a vs numeric n is |a - n| / max(|a|, |n|)
    (zero when both vanish).
    """
    inputs = [np.array(x, dtype=np.float64) for x in inputs]
    out, backward = forward(*inputs)
    out = np.asarray(out)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite values in forward output")

    rng = np.random.default_rng(seed)
    proj = rng.standard_normal(out.shape)
    analytic = backward(proj)
    if len(analytic) != len(inputs):
        raise ValueError("backward must return one gradient per input")

    def scalar(args):
        return math.fsum((np.asarray(forward(*args)[0]) * proj).ravel())

    worst = 0.0
    for xi, grad in zip(inputs, analytic):
        grad = np.asarray(grad)
        if not np.all(np.isfinite(grad)):
            raise ValueError("non-finite values in analytic gradient")
        flat = xi.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            fp = scalar(inputs)
            flat[j] = orig - eps
            fm = scalar(inputs)
            flat[j] = orig
            num = (fp - fm) / (2.0 * eps)
            if not np.isfinite(num):
                raise ValueError("non-finite values in finite-difference estimate")
            denom = max(abs(gflat[j]), abs(num))
            if denom > 0:
                worst = max(worst, abs(gflat[j] - num) / denom)
    return worst
