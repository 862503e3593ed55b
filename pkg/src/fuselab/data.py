"""Dataset ingestion and image I/O.

Understands the change-detection benchmark layout
(``root/category/video/{input,groundtruth,temporalROI.txt}`` with frames
named ``in%06d.jpg`` and labels ``gt%06d.png``) and reads/writes 8-bit
grayscale images.  Ground-truth files use the 5-value encoding
{0 background, 50 shadow, 85 outside ROI, 170 unknown, 255 foreground}.
"""

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

GT_BACKGROUND = 0
GT_SHADOW = 50
GT_OUTSIDE_ROI = 85
GT_UNKNOWN = 170
GT_FOREGROUND = 255

_FRAME_RE = re.compile(r"^in(\d+)\.(jpg|jpeg|png|pgm)$", re.IGNORECASE)
_GT_RE = re.compile(r"^gt(\d+)\.(png|pgm)$", re.IGNORECASE)


class DatasetError(ValueError):
    """Raised when a dataset tree is malformed."""


@dataclass
class VideoEntry:
    category: str
    name: str
    path: Path
    frames: dict = field(default_factory=dict)   # frame number -> input path
    gts: dict = field(default_factory=dict)      # frame number -> gt path
    roi: tuple = (0, 0)                          # (first, last) evaluable frame

    def evaluable_frames(self):
        first, last = self.roi
        return [n for n in sorted(self.frames) if first <= n <= last]


def _index_dir(path, pattern):
    out = {}
    for entry in sorted(os.listdir(path)):
        m = pattern.match(entry)
        if m:
            out[int(m.group(1))] = Path(path) / entry
    return out


def scan_cdnet(root):
    """Index a benchmark tree; returns {category: {video: VideoEntry}}.

    Every video directory must contain input/, groundtruth/, and a
    temporalROI.txt with two integers; within the temporal ROI each input
    frame must have a matching ground-truth file.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist")
    index = {}
    for cat in sorted(p for p in root.iterdir() if p.is_dir()):
        videos = {}
        for vid in sorted(p for p in cat.iterdir() if p.is_dir()):
            input_dir = vid / "input"
            gt_dir = vid / "groundtruth"
            if not input_dir.is_dir():
                continue  # not a video directory
            if not gt_dir.is_dir():
                raise DatasetError(f"{cat.name}/{vid.name}: missing groundtruth directory")
            roi_file = vid / "temporalROI.txt"
            try:
                first, last = map(int, roi_file.read_text().split()[:2])
            except (OSError, ValueError) as exc:
                raise DatasetError(f"{cat.name}/{vid.name}: unreadable temporalROI.txt ({exc})") from exc
            entry = VideoEntry(category=cat.name, name=vid.name, path=vid,
                               frames=_index_dir(input_dir, _FRAME_RE),
                               gts=_index_dir(gt_dir, _GT_RE), roi=(first, last))
            if not entry.frames:
                raise DatasetError(f"{cat.name}/{vid.name}: no input frames")
            if not (1 <= first <= last <= max(entry.frames)):
                raise DatasetError(f"{cat.name}/{vid.name}: temporal ROI {entry.roi} out of range")
            missing = [n for n in entry.evaluable_frames() if n not in entry.gts]
            if missing:
                raise DatasetError(
                    f"{cat.name}/{vid.name}: frames {missing[:5]} lack ground truth"
                )
            videos[vid.name] = entry
        if videos:
            index[cat.name] = videos
    if not index:
        raise DatasetError(f"no videos found under {root}")
    return index


def load_image(path):
    """Load an 8-bit image as a 2-D grayscale array.

    Color inputs are converted with the usual luma weights
    (0.299 R + 0.587 G + 0.114 B).
    """
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                img = img.convert("L")
            return np.asarray(img, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise ValueError(f"unsupported or corrupt image file {path}") from exc


def save_mask(mask, path):
    """Write a 2-D uint8 mask as PNG or PGM (by extension)."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in (".png", ".pgm"):
        raise ValueError(f"unsupported mask format {ext!r} (use .png or .pgm)")
    Image.fromarray(mask.astype(np.uint8), mode="L").save(path)


def resize_mask_nn(mask, target):
    """Nearest-neighbor resize; output values are a subset of input values."""
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.size == 0:
        raise ValueError(f"mask must be a nonempty 2-D array, got shape {mask.shape}")
    th, tw = int(target[0]), int(target[1])
    if th <= 0 or tw <= 0:
        raise ValueError(f"target dims must be positive, got {(th, tw)}")
    h, w = mask.shape
    rows = (np.arange(th) * h) // th
    cols = (np.arange(tw) * w) // tw
    return mask[rows[:, None], cols[None, :]]


def foreground_fraction(gt):
    """Foreground share of the non-ignored pixels of a 5-value label mask."""
    gt = np.asarray(gt)
    keep = (gt != GT_OUTSIDE_ROI) & (gt != GT_UNKNOWN)
    total = int(keep.sum())
    if total == 0:
        return 0.0
    return float((gt[keep] == GT_FOREGROUND).sum()) / total


def select_training_frames(gts, min_fg_fraction=0.005):
    """Indices of label masks with enough foreground to be worth training on."""
    return [i for i, gt in enumerate(gts) if foreground_fraction(gt) >= min_fg_fraction]
