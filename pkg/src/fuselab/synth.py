"""Synthetic moving-rectangle scenes with exact ground truth.

Besides frames and labels, the generator emits three corrupted copies of
the ground truth that mimic the complementary error characteristics of
three distinct background-subtraction algorithms: one over-segments
(dilation), one under-segments (erosion), one suffers salt-and-pepper
flips plus occasional whole-frame dropouts.  Everything is a pure
function of the seed.
"""

from dataclasses import dataclass

import numpy as np

from fuselab.bgs import BACKGROUND, FOREGROUND

CANDIDATE_NAMES = ("dilate", "erode", "flip")


@dataclass
class SyntheticConfig:
    size: tuple = (64, 64)            # (h, w)
    frames: int = 200
    object_count: int = 1
    object_size: tuple = (16, 16)     # (h, w), same for every object
    object_level: int = 200
    background_level: int = 60
    speed: tuple = (0.8, 2.0)         # per-axis velocity magnitude range, px/frame
    positions: tuple = None           # optional explicit (y, x) start per object
    velocities: tuple = None          # optional explicit (vy, vx) per object
    noise_sigma: float = 0.0
    dilate_radius: int = 1
    erode_radius: int = 1
    flip_prob: float = 0.02
    dropout_prob: float = 0.0
    seed: int = 0

    def validate(self):
        h, w = self.size
        oh, ow = self.object_size
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.object_count < 1:
            raise ValueError("object_count must be >= 1")
        if oh > h or ow > w:
            raise ValueError(f"object {self.object_size} larger than frame {self.size}")
        if not (0.0 <= self.flip_prob <= 1.0 and 0.0 <= self.dropout_prob <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        for field_name in ("positions", "velocities"):
            value = getattr(self, field_name)
            if value is not None and len(value) != self.object_count:
                raise ValueError(f"{field_name} must list one (y, x) pair per object")


def dilate_mask(mask, radius):
    """Binary dilation with a (2r+1) square element."""
    if radius <= 0:
        return np.asarray(mask, np.uint8).copy()
    b = np.asarray(mask) == FOREGROUND
    h, w = b.shape
    padded = np.pad(b, radius)
    out = np.zeros((h, w), bool)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out |= padded[dy:dy + h, dx:dx + w]
    return np.where(out, FOREGROUND, BACKGROUND).astype(np.uint8)


def erode_mask(mask, radius):
    """Binary erosion with a (2r+1) square element."""
    if radius <= 0:
        return np.asarray(mask, np.uint8).copy()
    b = np.asarray(mask) == FOREGROUND
    h, w = b.shape
    padded = np.pad(b, radius, constant_values=False)
    out = np.ones((h, w), bool)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out &= padded[dy:dy + h, dx:dx + w]
    return np.where(out, FOREGROUND, BACKGROUND).astype(np.uint8)


def flip_mask(mask, prob, rng):
    """Flip each pixel independently with probability ``prob``."""
    b = np.asarray(mask) == FOREGROUND
    flips = rng.random(b.shape) < prob
    return np.where(b ^ flips, FOREGROUND, BACKGROUND).astype(np.uint8)


def synth_generate(cfg):
    """Generate (frames, gts, candidates).

    frames and gts are (T, h, w) uint8 arrays; candidates is a dict
    mapping each name in CANDIDATE_NAMES to a (T, h, w) uint8 array.
    Rectangles bounce off the frame borders, so the exact foreground area
    per frame equals object_count * prod(object_size) as long as objects
    do not overlap.
    """
    cfg.validate()
    h, w = cfg.size
    oh, ow = cfg.object_size
    rng = np.random.default_rng(cfg.seed)

    if cfg.positions is not None:
        pos = np.array(cfg.positions, dtype=np.float64).reshape(cfg.object_count, 2)
    else:
        pos = np.column_stack([rng.uniform(0, h - oh, cfg.object_count),
                               rng.uniform(0, w - ow, cfg.object_count)])
    if cfg.velocities is not None:
        vel = np.array(cfg.velocities, dtype=np.float64).reshape(cfg.object_count, 2)
    else:
        speed = rng.uniform(cfg.speed[0], cfg.speed[1], (cfg.object_count, 2))
        vel = speed * rng.choice([-1.0, 1.0], (cfg.object_count, 2))

    frames = np.empty((cfg.frames, h, w), np.uint8)
    gts = np.empty((cfg.frames, h, w), np.uint8)
    cands = {name: np.empty((cfg.frames, h, w), np.uint8) for name in CANDIDATE_NAMES}

    for t in range(cfg.frames):
        gt = np.zeros((h, w), np.uint8)
        for k in range(cfg.object_count):
            y, x = int(round(pos[k, 0])), int(round(pos[k, 1]))
            gt[y:y + oh, x:x + ow] = FOREGROUND
        img = np.full((h, w), cfg.background_level, np.float32)
        img[gt == FOREGROUND] = cfg.object_level
        if cfg.noise_sigma > 0:
            img += rng.normal(0.0, cfg.noise_sigma, (h, w))
        frames[t] = np.clip(np.rint(img), 0, 255).astype(np.uint8)
        gts[t] = gt

        cands["dilate"][t] = dilate_mask(gt, cfg.dilate_radius)
        cands["erode"][t] = erode_mask(gt, cfg.erode_radius)
        if cfg.dropout_prob > 0 and rng.random() < cfg.dropout_prob:
            cands["flip"][t] = np.zeros((h, w), np.uint8)
        else:
            cands["flip"][t] = flip_mask(gt, cfg.flip_prob, rng)

        # advance with reflection at the borders
        pos += vel
        for k in range(cfg.object_count):
            for axis, limit in ((0, h - oh), (1, w - ow)):
                if pos[k, axis] < 0:
                    pos[k, axis] = -pos[k, axis]
                    vel[k, axis] = -vel[k, axis]
                elif pos[k, axis] > limit:
                    pos[k, axis] = 2 * limit - pos[k, axis]
                    vel[k, axis] = -vel[k, axis]

    return frames, gts, cands


def write_synthetic_dataset(cfg, root, category="synthetic", video="rects"):
    """Write a generated scene in the benchmark directory layout.

    Produces input/in%06d.png, groundtruth/gt%06d.png, temporalROI.txt,
    and candidates/<name>/bin%06d.png, all 1-based frame numbers.
    Returns the video directory path.
    """
    from pathlib import Path

    from fuselab.data import save_mask

    frames, gts, cands = synth_generate(cfg)
    vdir = Path(root) / category / video
    (vdir / "input").mkdir(parents=True, exist_ok=True)
    (vdir / "groundtruth").mkdir(parents=True, exist_ok=True)
    for name in cands:
        (vdir / "candidates" / name).mkdir(parents=True, exist_ok=True)
    for t in range(cfg.frames):
        n = t + 1
        save_mask(frames[t], vdir / "input" / f"in{n:06d}.png")
        save_mask(gts[t], vdir / "groundtruth" / f"gt{n:06d}.png")
        for name, arr in cands.items():
            save_mask(arr[t], vdir / "candidates" / name / f"bin{n:06d}.png")
    (vdir / "temporalROI.txt").write_text(f"1 {cfg.frames}\n")
    return vdir
