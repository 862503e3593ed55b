"""Parameter storage, He initialization, and the Adam optimizer."""

import numpy as np


class Param:
    """One named parameter tensor with a matching gradient buffer."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        self.name = name
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.value.shape})"


class ParamStore:
    """Ordered collection of uniquely named parameters.

    Iteration order is insertion order, which the network builder and the
    checkpoint format both rely on.
    """

    def __init__(self):
        self._params = {}

    def add(self, name, value):
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Param(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def zero_grad(self):
        for p in self._params.values():
            p.grad[...] = 0


def he_init(shape, seed, dtype=np.float32):
    """Zero-mean normal tensor with variance 2 / fan_in.

    fan_in is prod(shape[1:]) for rank >= 2 tensors and shape[0] otherwise.
    ``seed`` is anything ``np.random.default_rng`` accepts.
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0 or any(s <= 0 for s in shape):
        raise ValueError(f"invalid shape {shape}")
    fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
    rng = np.random.default_rng(seed)
    out = rng.standard_normal(shape, dtype=dtype)
    out *= np.sqrt(2.0 / fan_in)
    return out


class AdamState:
    """First/second moment buffers plus hyperparameters for Adam."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in params}
        self.v = {p.name: np.zeros_like(p.value) for p in params}


def adam_step(params, state):
    """One Adam update with bias correction; mutates params and state in place."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p in params:
        m = state.m[p.name]
        v = state.v[p.name]
        if m.shape != p.value.shape or p.grad.shape != p.value.shape:
            raise ValueError(f"moment/parameter shape mismatch for {p.name!r}")
        m *= b1
        m += (1.0 - b1) * p.grad
        v *= b2
        v += (1.0 - b2) * np.square(p.grad)
        p.value -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state
