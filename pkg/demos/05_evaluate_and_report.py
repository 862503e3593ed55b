"""Score mask streams into the video -> category -> overall tree.

Two synthetic "categories" are written to disk in the benchmark layout,
a detector (here: majority vote over the bundled candidate masks) is
scored per video, and the per-metric means roll up to category rows and
one overall row, rendered as CSV and markdown.
"""

import tempfile
from pathlib import Path

from fuselab.data import load_image, scan_cdnet
from fuselab.fusion import majority_vote
from fuselab.metrics import ConfusionCounts, aggregate, confusion, metrics_from_counts, report
from fuselab.synth import CANDIDATE_NAMES, SyntheticConfig, write_synthetic_dataset

workdir = Path(tempfile.mkdtemp(prefix="fuselab_demo_"))
for category, seed in (("easy", 1), ("noisy", 2)):
    flip = 0.02 if category == "easy" else 0.10
    cfg = SyntheticConfig(size=(48, 48), frames=40, object_size=(12, 12),
                          flip_prob=flip, seed=seed)
    write_synthetic_dataset(cfg, workdir, category=category, video=f"vid{seed}")
print(f"dataset written under {workdir}")

index = scan_cdnet(workdir)
per_video = {}
for category, videos in index.items():
    for name, entry in videos.items():
        counts = ConfusionCounts()
        for n in entry.evaluable_frames():
            cands = [load_image(entry.path / "candidates" / c / f"bin{n:06d}.png")
                     for c in CANDIDATE_NAMES]
            counts = counts + confusion(majority_vote(cands), load_image(entry.gts[n]))
        per_video.setdefault(category, {})[name] = metrics_from_counts(counts)

tree = aggregate(per_video)
print("\nCSV report:\n")
print(report(tree, "csv"))
print("markdown report:\n")
print(report(tree, "markdown"))
