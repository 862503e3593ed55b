"""Change-detection scoring: confusion counts, the seven standard
metrics, and the video -> category -> overall aggregation.

Ground truth uses the 5-value encoding: 255 counts as positive, 0 and 50
(shadow) as negative, 85 and 170 are excluded from every count.  A video
is scored from its accumulated counts; category scores are unweighted
means of their videos, the overall score the unweighted mean of the
categories.
"""

import json
from dataclasses import dataclass

import numpy as np

from fuselab.data import GT_FOREGROUND, GT_OUTSIDE_ROI, GT_SHADOW, GT_UNKNOWN

METRIC_NAMES = ("Re", "Sp", "FPR", "FNR", "PWC", "Pr", "FM")


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class MetricVector:
    re: float
    sp: float
    fpr: float
    fnr: float
    pwc: float
    pr: float
    fm: float

    def as_tuple(self):
        return (self.re, self.sp, self.fpr, self.fnr, self.pwc, self.pr, self.fm)

    @classmethod
    def from_tuple(cls, values):
        return cls(*(float(v) for v in values))


def confusion(pred, gt):
    """Count TP/FP/TN/FN for one frame.

    pred must be binary {0, 255}; gt values 85 and 170 are ignored, 50
    counts as background.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"pred shape {pred.shape} does not match gt {gt.shape}")
    if not np.isin(pred, (0, 255)).all():
        raise ValueError("pred must contain only {0, 255}")
    if not np.isin(gt, (0, GT_SHADOW, GT_OUTSIDE_ROI, GT_UNKNOWN, GT_FOREGROUND)).all():
        raise ValueError("gt contains values outside the 5-value encoding")

    keep = (gt != GT_OUTSIDE_ROI) & (gt != GT_UNKNOWN)
    p = pred == 255
    t = gt == GT_FOREGROUND
    return ConfusionCounts(
        tp=int((keep & p & t).sum()),
        fp=int((keep & p & ~t).sum()),
        tn=int((keep & ~p & ~t).sum()),
        fn=int((keep & ~p & t).sum()),
    )


def _ratio(num, den):
    return num / den if den else 0.0


def metrics_from_counts(c):
    """The seven metrics; zero-denominator ratios evaluate to 0."""
    if c.total == 0:
        raise ValueError("all confusion counts are zero")
    re = _ratio(c.tp, c.tp + c.fn)
    sp = _ratio(c.tn, c.tn + c.fp)
    fpr = _ratio(c.fp, c.fp + c.tn)
    fnr = _ratio(c.fn, c.tp + c.fn)
    pwc = 100.0 * (c.fn + c.fp) / c.total
    pr = _ratio(c.tp, c.tp + c.fp)
    fm = _ratio(2.0 * re * pr, re + pr)
    return MetricVector(re, sp, fpr, fnr, pwc, pr, fm)


def _mean_vector(vectors):
    cols = np.array([v.as_tuple() for v in vectors], dtype=np.float64)
    return MetricVector.from_tuple(cols.mean(axis=0))


@dataclass
class ScoreTree:
    """Per-video metrics with category and overall means."""

    videos: dict       # {category: {video: MetricVector}}
    categories: dict   # {category: MetricVector}
    overall: MetricVector

    def to_json(self):
        def enc(v):
            return {n: x for n, x in zip(METRIC_NAMES, v.as_tuple())}

        doc = {
            "videos": {c: {v: enc(m) for v, m in sorted(vids.items())}
                       for c, vids in sorted(self.videos.items())},
            "categories": {c: enc(m) for c, m in sorted(self.categories.items())},
            "overall": enc(self.overall),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)

        def dec(d):
            return MetricVector.from_tuple(d[n] for n in METRIC_NAMES)

        return cls(
            videos={c: {v: dec(m) for v, m in vids.items()}
                    for c, vids in doc["videos"].items()},
            categories={c: dec(m) for c, m in doc["categories"].items()},
            overall=dec(doc["overall"]),
        )


def aggregate(per_video):
    """Build a ScoreTree from {category: {video: MetricVector}}.

    Each level is the unweighted per-metric mean of its children.
    """
    if not per_video:
        raise ValueError("no categories to aggregate")
    categories = {}
    for cat, vids in per_video.items():
        if not vids:
            raise ValueError(f"category {cat!r} has no videos")
        categories[cat] = _mean_vector(list(vids.values()))
    overall = _mean_vector(list(categories.values()))
    return ScoreTree(videos={c: dict(v) for c, v in per_video.items()},
                     categories=categories, overall=overall)


def report(tree, fmt="csv"):
    """Render category rows plus the overall row, 4 decimal places.

    Columns are Re, Sp, FPR, FNR, PWC, Pr, FM; categories sort by name
    and Overall comes last.  Output is byte-deterministic.
    """
    rows = [(name, tree.categories[name]) for name in sorted(tree.categories)]
    rows.append(("Overall", tree.overall))
    if fmt == "csv":
        lines = ["category," + ",".join(METRIC_NAMES)]
        for name, v in rows:
            lines.append(name + "," + ",".join(f"{x:.4f}" for x in v.as_tuple()))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = ["| category | " + " | ".join(METRIC_NAMES) + " |",
                 "|" + " --- |" * (len(METRIC_NAMES) + 1)]
        for name, v in rows:
            lines.append("| " + name + " | "
                         + " | ".join(f"{x:.4f}" for x in v.as_tuple()) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


# metrics where smaller is better, for rank averaging
_LOWER_IS_BETTER = {"FPR", "FNR", "PWC"}


def average_ranks(methods):
    """Mean rank of each method across the seven metrics (1 = best).

    ``methods`` maps a method name to its MetricVector; ties share the
    average of the tied rank positions.
    """
    if not methods:
        raise ValueError("no methods to rank")
    names = sorted(methods)
    ranks = {n: [] for n in names}
    for i, metric in enumerate(METRIC_NAMES):
        vals = {n: methods[n].as_tuple()[i] for n in names}
        sign = 1.0 if metric in _LOWER_IS_BETTER else -1.0
        ordered = sorted(names, key=lambda n: (sign * vals[n], n))
        pos = 0
        while pos < len(ordered):
            end = pos
            while end + 1 < len(ordered) and vals[ordered[end + 1]] == vals[ordered[pos]]:
                end += 1
            shared = (pos + end) / 2.0 + 1.0
            for j in range(pos, end + 1):
                ranks[ordered[j]].append(shared)
            pos = end + 1
    return {n: float(np.mean(r)) for n, r in ranks.items()}
