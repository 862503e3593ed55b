"""Differentiable tensor operations for the mask-fusion network.

All tensors are dense numpy arrays in (batch, channel, height, width)
order.  Every operation comes as a ``*_forward`` / ``*_backward`` pair:
forward returns ``(output, cache)``, backward consumes the cache plus the
upstream gradient and returns gradients for each differentiable input.
Plain convenience wrappers (``conv2d``, ``relu``, ...) return the output
only.

Computations follow the dtype of their inputs: float32 for training,
float64 when verifying gradients against finite differences.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _check_4d(x, name="x"):
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValueError(f"{name} must be 4-D (n, c, h, w), got shape {x.shape}")
    return x


# ---------------------------------------------------------------------------
# 3x3 convolution, padding 1, stride 1
# ---------------------------------------------------------------------------

def conv2d_forward(x, w, b):
    """3x3 convolution with padding 1 and stride 1.

    x: (n, cin, h, w); w: (cout, cin, 3, 3); b: (cout,).
    Output keeps the spatial size: (n, cout, h, w).
    """
    x = _check_4d(x)
    w = np.asarray(w)
    b = np.asarray(b)
    if w.ndim != 4 or w.shape[2:] != (3, 3):
        raise ValueError(f"conv2d kernel must be (cout, cin, 3, 3), got {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ValueError(
            f"channel mismatch: input has {x.shape[1]} channels, kernel expects {w.shape[1]}"
        )
    if b.shape != (w.shape[0],):
        raise ValueError(f"bias must have shape ({w.shape[0]},), got {b.shape}")

    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (n, cin, h, w, 3, 3)
    out = np.einsum("nihwkl,oikl->nohw", windows, w, optimize=True)
    out += b[None, :, None, None]
    cache = (windows, w, x.shape)
    return out, cache


def conv2d_backward(cache, dout):
    """Gradients of conv2d_forward: returns (dx, dw, db)."""
    windows, w, x_shape = cache
    dout = np.asarray(dout)
    db = dout.sum(axis=(0, 2, 3))
    dw = np.einsum("nihwkl,nohw->oikl", windows, dout, optimize=True)
    dp = np.pad(dout, ((0, 0), (0, 0), (1, 1), (1, 1)))
    dwin = sliding_window_view(dp, (3, 3), axis=(2, 3))
    dx = np.einsum("nohwkl,oikl->nihw", dwin, w[:, :, ::-1, ::-1], optimize=True)
    return dx, dw, db


def conv2d(x, w, b):
    return conv2d_forward(x, w, b)[0]


# ---------------------------------------------------------------------------
# ReLU
# ---------------------------------------------------------------------------

def relu_forward(x):
    x = np.asarray(x)
    out = np.maximum(x, 0)
    return out, x > 0


def relu_backward(cache, dout):
    return np.asarray(dout) * cache


def relu(x):
    return relu_forward(x)[0]


# ---------------------------------------------------------------------------
# 2x2 max pooling, stride 2
# ---------------------------------------------------------------------------

def maxpool2_forward(x):
    """2x2 max pooling with stride 2; requires even height and width.

    Gradient is routed to the window argmax; on ties the first element in
    row-major scan order of the window wins.
    """
    x = _check_4d(x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    win = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = win.reshape(n, c, h // 2, w // 2, 4)
    idx = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    return out, (idx, x.shape)


def maxpool2_backward(cache, dout):
    idx, x_shape = cache
    n, c, h, w = x_shape
    dout = np.asarray(dout)
    g = np.zeros((n, c, h // 2, w // 2, 4), dtype=dout.dtype)
    np.put_along_axis(g, idx[..., None], dout[..., None], axis=-1)
    dx = g.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return dx.reshape(n, c, h, w)


def maxpool2(x):
    return maxpool2_forward(x)[0]


# ---------------------------------------------------------------------------
# 2x2 transposed convolution, stride 2 (exact spatial doubling)
# ---------------------------------------------------------------------------

def deconv2_forward(x, w, b):
    """Transposed convolution, kernel 2x2, stride 2.

    x: (n, cin, h, w); w: (cin, cout, 2, 2); b: (cout,).
    Each input pixel paints one disjoint 2x2 block of the (n, cout, 2h, 2w)
    output, so the spatial size doubles exactly.
    """
    x = _check_4d(x)
    w = np.asarray(w)
    b = np.asarray(b)
    if w.ndim != 4 or w.shape[2:] != (2, 2):
        raise ValueError(f"deconv2 kernel must be (cin, cout, 2, 2), got {w.shape}")
    if x.shape[1] != w.shape[0]:
        raise ValueError(
            f"channel mismatch: input has {x.shape[1]} channels, kernel expects {w.shape[0]}"
        )
    if b.shape != (w.shape[1],):
        raise ValueError(f"bias must have shape ({w.shape[1]},), got {b.shape}")

    n, cin, h, ww = x.shape
    cout = w.shape[1]
    blocks = np.einsum("nihw,iokl->nohwkl", x, w, optimize=True)
    out = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(n, cout, 2 * h, 2 * ww)
    out += b[None, :, None, None]
    return out, (x, w)


def deconv2_backward(cache, dout):
    """Gradients of deconv2_forward: returns (dx, dw, db)."""
    x, w = cache
    dout = np.asarray(dout)
    n, cout, h2, w2 = dout.shape
    h, ww = h2 // 2, w2 // 2
    db = dout.sum(axis=(0, 2, 3))
    blocks = dout.reshape(n, cout, h, 2, ww, 2).transpose(0, 1, 2, 4, 3, 5)
    dx = np.einsum("nohwkl,iokl->nihw", blocks, w, optimize=True)
    dw = np.einsum("nihw,nohwkl->iokl", x, blocks, optimize=True)
    return dx, dw, db


def deconv2(x, w, b):
    return deconv2_forward(x, w, b)[0]


# ---------------------------------------------------------------------------
# Channel concatenation
# ---------------------------------------------------------------------------

def concat_channels_forward(a, b):
    """Concatenate along the channel axis, a's channels first."""
    a = _check_4d(a, "a")
    b = _check_4d(b, "b")
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ValueError(f"batch/spatial mismatch: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=1), a.shape[1]


def concat_channels_backward(cache, dout):
    ca = cache
    dout = np.asarray(dout)
    return dout[:, :ca], dout[:, ca:]


def concat_channels(a, b):
    return concat_channels_forward(a, b)[0]


# ---------------------------------------------------------------------------
# Two-class softmax over the channel axis
# ---------------------------------------------------------------------------

def softmax_channels_forward(x):
    """Per-pixel softmax over exactly 2 channels, max-subtracted for stability."""
    x = _check_4d(x)
    if x.shape[1] != 2:
        raise ValueError(f"softmax_channels expects 2 channels, got {x.shape[1]}")
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    return p, p


def softmax_channels_backward(cache, dout):
    p = cache
    dout = np.asarray(dout)
    dot = (dout * p).sum(axis=1, keepdims=True)
    return p * (dout - dot)


def softmax_channels(x):
    return softmax_channels_forward(x)[0]
