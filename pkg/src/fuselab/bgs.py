"""Classic per-pixel background models producing candidate foreground masks.

Three independent generators with complementary error behaviour:

* ``GmmModel``: per-pixel mixture of Gaussians in the Stauffer-Grimson
  style. Components are ranked by weight/sigma and matched within a
  sigma band; background is the smallest component prefix whose
  cumulative weight exceeds a fraction T.
* ``SampleModel``: sample-consensus model. A pixel is background when
  enough stored intensity samples lie within a radius of the new value;
  background pixels stochastically refresh their own and a neighbor's
  samples.
* ``MedianModel``: running median over a bounded history with a fixed
  difference threshold.

All models process 2-D uint8 grayscale frames and emit {0, 255} masks.
"""

import numpy as np

FOREGROUND = 255
BACKGROUND = 0


def _check_frame(frame, shape):
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {frame.shape}")
    if frame.shape != shape:
        raise ValueError(f"frame shape {frame.shape} does not match model {shape}")
    return frame.astype(np.float32)


class GmmModel:
    """Per-pixel mixture of K Gaussians over intensity."""

    def __init__(self, shape, components=5, alpha=0.01, match_sigmas=2.5,
                 bg_fraction=0.7, var_floor=4.0, var_init=225.0, w_init=0.05):
        self.shape = tuple(shape)
        self.k = int(components)
        self.alpha = float(alpha)
        self.match_sigmas = float(match_sigmas)
        self.bg_fraction = float(bg_fraction)
        self.var_floor = float(var_floor)
        self.var_init = float(var_init)
        self.w_init = float(w_init)
        h, w = self.shape
        self.mean = np.zeros((self.k, h, w), np.float32)
        self.var = np.full((self.k, h, w), self.var_init, np.float32)
        self.weight = np.zeros((self.k, h, w), np.float32)
        self.weight[0] = 1.0
        self._initialized = False

    def step(self, frame):
        """Classify one frame against the current model, then update it."""
        f = _check_frame(frame, self.shape)
        if not self._initialized:
            self.mean[0] = f
            self._initialized = True

        # rank components by weight / sigma (descending), the classic fitness order
        fitness = self.weight / np.sqrt(self.var)
        order = np.argsort(-fitness, axis=0)
        mean_r = np.take_along_axis(self.mean, order, axis=0)
        var_r = np.take_along_axis(self.var, order, axis=0)
        w_r = np.take_along_axis(self.weight, order, axis=0)

        dist = np.abs(f[None] - mean_r)
        match = dist < self.match_sigmas * np.sqrt(var_r)
        any_match = match.any(axis=0)
        first = match.argmax(axis=0)  # first (best-ranked) matching component

        # background = matched component lies in the smallest prefix whose
        # cumulative weight exceeds bg_fraction
        cum = np.cumsum(w_r, axis=0)
        n_bg = 1 + np.argmax(cum > self.bg_fraction, axis=0)
        mask = np.where(any_match & (first < n_bg), BACKGROUND, FOREGROUND).astype(np.uint8)

        # update matched component (rate alpha), decay the others
        sel = np.arange(self.k)[:, None, None] == first[None]
        hit = sel & any_match[None]
        w_r += self.alpha * (hit.astype(np.float32) - w_r * any_match[None])
        delta = f[None] - mean_r
        mean_r += np.where(hit, self.alpha * delta, 0.0)
        delta = f[None] - mean_r
        var_r += np.where(hit, self.alpha * (delta * delta - var_r), 0.0)

        # no match: weakest-ranked component restarts at the observation
        refresh = (~any_match)[None] & (np.arange(self.k)[:, None, None] == self.k - 1)
        mean_r = np.where(refresh, f[None], mean_r)
        var_r = np.where(refresh, self.var_init, var_r)
        w_r = np.where(refresh, self.w_init, w_r)

        w_r /= w_r.sum(axis=0, keepdims=True)
        np.maximum(var_r, self.var_floor, out=var_r)

        np.put_along_axis(self.mean, order, mean_r, axis=0)
        np.put_along_axis(self.var, order, var_r, axis=0)
        np.put_along_axis(self.weight, order, w_r, axis=0)
        return mask


class SampleModel:
    """Sample-consensus model keeping S raw intensity samples per pixel."""

    def __init__(self, shape, samples=20, radius=20, min_matches=2,
                 subsample=16, seed=0):
        self.shape = tuple(shape)
        self.s = int(samples)
        self.radius = float(radius)
        self.min_matches = int(min_matches)
        self.subsample = int(subsample)
        self.rng = np.random.default_rng(seed)
        self.samples = None

    _NEIGHBORS = np.array([(-1, -1), (-1, 0), (-1, 1), (0, -1),
                           (0, 1), (1, -1), (1, 0), (1, 1)])

    def initialize(self, frame):
        """Fill every pixel's sample set from its 8-neighborhood in ``frame``."""
        f = _check_frame(frame, self.shape)
        h, w = self.shape
        ys, xs = np.mgrid[0:h, 0:w]
        picks = self.rng.integers(0, 8, size=(self.s, h, w))
        dy = self._NEIGHBORS[picks, 0]
        dx = self._NEIGHBORS[picks, 1]
        ny = np.clip(ys[None] + dy, 0, h - 1)
        nx = np.clip(xs[None] + dx, 0, w - 1)
        self.samples = f[ny, nx].astype(np.float32)

    def step(self, frame):
        if self.samples is None:
            raise ValueError("SampleModel.step called before initialize")
        f = _check_frame(frame, self.shape)
        h, w = self.shape
        matches = (np.abs(self.samples - f[None]) < self.radius).sum(axis=0)
        bg = matches >= self.min_matches
        mask = np.where(bg, BACKGROUND, FOREGROUND).astype(np.uint8)

        # per-frame randomness is drawn as full fields so the stream layout
        # is fixed regardless of scene content
        upd_own = bg & (self.rng.integers(0, self.subsample, (h, w)) == 0)
        slot = self.rng.integers(0, self.s, (h, w))
        upd_nb = bg & (self.rng.integers(0, self.subsample, (h, w)) == 0)
        nb_pick = self.rng.integers(0, 8, (h, w))
        nb_slot = self.rng.integers(0, self.s, (h, w))

        ys, xs = np.nonzero(upd_own)
        self.samples[slot[ys, xs], ys, xs] = f[ys, xs]

        ys, xs = np.nonzero(upd_nb)
        ny = np.clip(ys + self._NEIGHBORS[nb_pick[ys, xs], 0], 0, h - 1)
        nx = np.clip(xs + self._NEIGHBORS[nb_pick[ys, xs], 1], 0, w - 1)
        self.samples[nb_slot[ys, xs], ny, nx] = f[ys, xs]
        return mask


class MedianModel:
    """Running median over a circular buffer of recent intensities."""

    def __init__(self, shape, buffer=51, tau=30.0):
        self.shape = tuple(shape)
        self.capacity = int(buffer)
        self.tau = float(tau)
        self.buffer = np.zeros((self.capacity, *self.shape), np.float32)
        self.count = 0
        self._next = 0

    def step(self, frame):
        f = _check_frame(frame, self.shape)
        if self.count == 0:
            mask = np.full(self.shape, BACKGROUND, np.uint8)
        else:
            med = np.median(self.buffer[:self.count], axis=0)
            mask = np.where(np.abs(f - med) > self.tau, FOREGROUND, BACKGROUND).astype(np.uint8)
        self.buffer[self._next] = f
        self._next = (self._next + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)
        return mask


ALGORITHMS = ("gmm", "sc", "median")


def run_bgs(frames, algo, params=None, seed=0):
    """Run one background model over a frame sequence; one mask per frame."""
    frames = list(frames)
    if not frames:
        raise ValueError("empty video")
    params = dict(params or {})
    shape = np.asarray(frames[0]).shape
    try:
        if algo == "gmm":
            model = GmmModel(shape, **params)
        elif algo == "sc":
            model = SampleModel(shape, seed=seed, **params)
        elif algo == "median":
            model = MedianModel(shape, **params)
        else:
            raise ValueError(
                f"unknown algorithm {algo!r} (choose from {', '.join(ALGORITHMS)})")
    except TypeError as exc:
        raise ValueError(f"bad {algo} parameters: {exc}") from exc
    if algo == "sc":
        model.initialize(frames[0])
    return [model.step(f) for f in frames]
