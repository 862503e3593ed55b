"""fuselab: generate, fuse, and score video foreground masks.

Candidate masks come from classic background-subtraction models
(:mod:`fuselab.bgs`) or precomputed files; fusion is either non-learned
(:mod:`fuselab.fusion`) or a trained encoder-decoder network
(:mod:`fuselab.network` on top of :mod:`fuselab.nn`); scoring follows the
standard seven change-detection metrics (:mod:`fuselab.metrics`).
"""

from fuselab.bgs import GmmModel, MedianModel, SampleModel, run_bgs
from fuselab.data import (
    load_image,
    resize_mask_nn,
    save_mask,
    scan_cdnet,
    select_training_frames,
)
from fuselab.fusion import eval_expr, majority_vote, median_filter3, parse_expr
from fuselab.metrics import (
    ConfusionCounts,
    MetricVector,
    ScoreTree,
    aggregate,
    confusion,
    metrics_from_counts,
    report,
)
from fuselab.network import (
    NetConfig,
    TrainConfig,
    TrainingSample,
    build_network,
    forward,
    load_checkpoint,
    predict_mask,
    save_checkpoint,
    train,
)
from fuselab.synth import SyntheticConfig, synth_generate, write_synthetic_dataset

__version__ = "0.1.0"

__all__ = [
    "ConfusionCounts",
    "GmmModel",
    "MedianModel",
    "MetricVector",
    "NetConfig",
    "SampleModel",
    "ScoreTree",
    "SyntheticConfig",
    "TrainConfig",
    "TrainingSample",
    "aggregate",
    "build_network",
    "confusion",
    "eval_expr",
    "forward",
    "load_checkpoint",
    "load_image",
    "majority_vote",
    "median_filter3",
    "metrics_from_counts",
    "parse_expr",
    "predict_mask",
    "report",
    "resize_mask_nn",
    "run_bgs",
    "save_checkpoint",
    "save_mask",
    "scan_cdnet",
    "select_training_frames",
    "synth_generate",
    "train",
    "write_synthetic_dataset",
]
