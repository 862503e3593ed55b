"""Synthetic scene generation and the corruption models."""

import numpy as np
import pytest

from fuselab.data import scan_cdnet
from fuselab.metrics import confusion, metrics_from_counts
from fuselab.synth import (
    CANDIDATE_NAMES,
    SyntheticConfig,
    dilate_mask,
    erode_mask,
    flip_mask,
    synth_generate,
    write_synthetic_dataset,
)


def test_same_seed_bitwise_identical():
    cfg = SyntheticConfig(frames=20, noise_sigma=2.0, dropout_prob=0.1, seed=5)
    f1, g1, c1 = synth_generate(cfg)
    f2, g2, c2 = synth_generate(cfg)
    np.testing.assert_array_equal(f1, f2)
    np.testing.assert_array_equal(g1, g2)
    for name in CANDIDATE_NAMES:
        np.testing.assert_array_equal(c1[name], c2[name])


def test_gt_foreground_fraction_exact():
    cfg = SyntheticConfig(size=(64, 64), frames=50, object_count=1,
                          object_size=(16, 16), seed=1)
    _, gts, _ = synth_generate(cfg)
    expected = 16 * 16 / (64 * 64)
    for gt in gts:
        assert (gt == 255).mean() == pytest.approx(expected)


def test_gt_scores_perfectly_against_itself():
    _, gts, _ = synth_generate(SyntheticConfig(frames=10, seed=2))
    m = metrics_from_counts(confusion(gts[0], gts[0]))
    assert m.fm == 1.0


def test_flip_rate_statistics():
    rng = np.random.default_rng(0)
    mask = np.zeros((1000, 1000), np.uint8)
    flipped = flip_mask(mask, 0.05, rng)
    rate = (flipped != mask).mean()
    assert abs(rate - 0.05) < 0.01


def test_dilate_erode_shapes():
    m = np.zeros((9, 9), np.uint8)
    m[4, 4] = 255
    assert (dilate_mask(m, 1) == 255).sum() == 9
    square = np.zeros((9, 9), np.uint8)
    square[2:7, 2:7] = 255
    assert (erode_mask(square, 1) == 255).sum() == 9  # 5x5 erodes to 3x3


def test_candidates_imperfect_and_pairwise_distinct():
    cfg = SyntheticConfig(frames=30, seed=3)
    _, gts, cands = synth_generate(cfg)
    pooled = {name: confusion(np.concatenate(list(arr)), np.concatenate(list(gts)))
              for name, arr in cands.items()}
    fms = {name: metrics_from_counts(c).fm for name, c in pooled.items()}
    for name, fm in fms.items():
        assert fm < 1.0, name
    names = list(cands)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            assert not np.array_equal(cands[names[i]], cands[names[j]])


def test_dropout_produces_blank_frames():
    cfg = SyntheticConfig(frames=60, dropout_prob=0.5, flip_prob=0.0, seed=4)
    _, gts, cands = synth_generate(cfg)
    blanks = sum(1 for t in range(60) if (cands["flip"][t] == 0).all())
    assert 10 <= blanks <= 50  # ~30 expected


def test_object_larger_than_frame_rejected():
    cfg = SyntheticConfig(size=(32, 32), object_size=(40, 8))
    with pytest.raises(ValueError, match="larger than frame"):
        synth_generate(cfg)


def test_explicit_positions_and_velocities():
    cfg = SyntheticConfig(size=(32, 64), frames=10, object_size=(8, 8),
                          positions=((12, 0),), velocities=((0.0, 2.0),), seed=0)
    _, gts, _ = synth_generate(cfg)
    ys, xs = np.nonzero(gts[0] == 255)
    assert ys.min() == 12 and xs.min() == 0
    ys, xs = np.nonzero(gts[5] == 255)
    assert xs.min() == 10  # moved 2 px/frame for 5 frames


def test_reflection_keeps_object_inside():
    cfg = SyntheticConfig(size=(24, 24), frames=200, object_size=(10, 10),
                          speed=(2.5, 3.0), seed=6)
    _, gts, _ = synth_generate(cfg)
    for gt in gts:
        assert (gt == 255).sum() == 100  # always fully inside the frame


def test_written_dataset_is_scannable(tmp_path):
    cfg = SyntheticConfig(frames=6, seed=7)
    vdir = write_synthetic_dataset(cfg, tmp_path, category="synthcat", video="vid0")
    index = scan_cdnet(tmp_path)
    entry = index["synthcat"]["vid0"]
    assert entry.evaluable_frames() == [1, 2, 3, 4, 5, 6]
    for name in CANDIDATE_NAMES:
        assert (vdir / "candidates" / name / "bin000001.png").exists()
