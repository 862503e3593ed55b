"""Train the encoder-decoder fusion network and compare it to voting.

The network ingests N candidate masks as channels and emits a per-pixel
two-class probability map.  Trained on the first 120 frames of a seeded
synthetic sequence, it is scored on the remaining held-out frames
against the individual candidates and the majority vote.
"""

import numpy as np

from fuselab.fusion import majority_vote
from fuselab.metrics import ConfusionCounts, confusion, metrics_from_counts
from fuselab.network import (
    NetConfig,
    TrainConfig,
    TrainingSample,
    build_network,
    predict_mask,
    train,
)
from fuselab.synth import SyntheticConfig, synth_generate

cfg = SyntheticConfig(size=(64, 64), frames=200, object_size=(16, 16),
                      dilate_radius=1, erode_radius=1, flip_prob=0.03,
                      dropout_prob=0.03, seed=42)
_, gts, cands = synth_generate(cfg)
names = list(cands)
SPLIT = 120

net_cfg = NetConfig.tiny(input_channels=3, input_size=64)
params = build_network(net_cfg, seed=42)
samples = [TrainingSample(
    input=np.stack([(cands[n][t] > 127).astype(np.float32) for n in names])[None],
    label=(gts[t] == 255).astype(np.uint8)) for t in range(0, SPLIT, 3)]
print(f"training on {len(samples)} samples "
      f"({net_cfg.stage_channels} channels, {net_cfg.input_size}px input)")

params, history = train(params, net_cfg, samples,
                        TrainConfig(epochs=35, batch_size=4, lr=1e-3, seed=42))
for e in (0, 5, 10, 20, 34):
    print(f"  epoch {e:3d}  mean loss {history[e]:10.4f}")


def pooled_fm(mask_at):
    counts = ConfusionCounts()
    for t in range(SPLIT, cfg.frames):
        counts = counts + confusion(mask_at(t), gts[t])
    return metrics_from_counts(counts).fm


print("\nheld-out F-measure:")
for n in names:
    print(f"  {n:8s} {pooled_fm(lambda t, n=n: cands[n][t]):.4f}")
print(f"  {'vote':8s} {pooled_fm(lambda t: majority_vote([cands[n][t] for n in names])):.4f}")
print(f"  {'network':8s} "
      f"{pooled_fm(lambda t: predict_mask(params, net_cfg, [cands[n][t] for n in names], (64, 64))):.4f}")
