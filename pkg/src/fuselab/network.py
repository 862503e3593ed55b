"""Encoder-decoder network that fuses N candidate foreground masks.

The encoder is built from five stages of 3x3 convolutions + ReLU, each
followed by 2x2 max pooling, so a square input of side s reaches a
bottleneck of side s/32.  The decoder runs five repetitions of
{stride-2 transposed convolution, concatenation with the matching
encoder stage's pre-pool feature map, 3x3 convolution back down to that
stage's width} and ends in a 3x3 convolution to 2 channels plus a
per-pixel softmax.  Channel 0 scores background, channel 1 foreground.
"""

import io
import struct
from dataclasses import dataclass

import numpy as np

from fuselab.nn import (
    AdamState,
    ParamStore,
    adam_step,
    balanced_ce_loss,
    concat_channels_backward,
    concat_channels_forward,
    conv2d_backward,
    conv2d_forward,
    deconv2_backward,
    deconv2_forward,
    he_init,
    maxpool2_backward,
    maxpool2_forward,
    relu_backward,
    relu_forward,
    softmax_channels,
)
from fuselab.data import resize_mask_nn

N_STAGES = 5
CHECKPOINT_MAGIC = b"MFZ1"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Raised for malformed, truncated, or incompatible checkpoint files."""


@dataclass
class NetConfig:
    """Architecture hyperparameters.

    input_channels is the number of fused candidate masks (3 for the
    usual three-algorithm ensemble).  input_size must be divisible by 32
    so five poolings land on an integer bottleneck side.
    """

    input_channels: int = 3
    stage_channels: tuple = (64, 128, 256, 512, 512)
    convs_per_stage: tuple = (2, 2, 3, 3, 3)
    input_size: int = 224

    def __post_init__(self):
        self.stage_channels = tuple(int(c) for c in self.stage_channels)
        self.convs_per_stage = tuple(int(c) for c in self.convs_per_stage)
        self.validate()

    def validate(self):
        if self.input_channels < 1:
            raise ValueError("input_channels must be >= 1")
        if len(self.stage_channels) != N_STAGES:
            raise ValueError(f"stage_channels must have {N_STAGES} entries")
        if len(self.convs_per_stage) != N_STAGES:
            raise ValueError(f"convs_per_stage must have {N_STAGES} entries")
        if any(c < 1 for c in self.stage_channels):
            raise ValueError("stage widths must be >= 1")
        if any(c < 1 for c in self.convs_per_stage):
            raise ValueError("convs_per_stage entries must be >= 1")
        if self.input_size < 32 or self.input_size % 32:
            raise ValueError(f"input_size must be a positive multiple of 32, got {self.input_size}")

    @classmethod
    def tiny(cls, input_channels=3, input_size=32):
        """Desk-scale configuration for tests and CPU experiments."""
        return cls(
            input_channels=input_channels,
            stage_channels=(8, 16, 32, 32, 32),
            convs_per_stage=(1, 1, 1, 1, 1),
            input_size=input_size,
        )


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 4
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    min_fg_fraction: float = 0.0

    def validate(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainingSample:
    """One training pair at network resolution.

    input: (1, N, s, s) float with mask values scaled to {0, 1};
    label: (s, s) with values in {0, 1}; ignore: optional (s, s), nonzero
    marks pixels excluded from the loss.
    """

    input: np.ndarray
    label: np.ndarray
    ignore: np.ndarray = None


def parameter_plan(config):
    """(name, shape) for every parameter, in build order.

    Build order is also checkpoint order, so this is the single source of
    truth shared by the builder, the loader, and the binary format.
    """
    config.validate()
    plan = []
    cin = config.input_channels
    for i in range(N_STAGES):
        width = config.stage_channels[i]
        for k in range(config.convs_per_stage[i]):
            plan.append((f"enc{i}_conv{k}_w", (width, cin, 3, 3)))
            plan.append((f"enc{i}_conv{k}_b", (width,)))
            cin = width
    prev = config.stage_channels[-1]
    for i in reversed(range(N_STAGES)):
        width = config.stage_channels[i]
        plan.append((f"dec{i}_deconv_w", (prev, width, 2, 2)))
        plan.append((f"dec{i}_deconv_b", (width,)))
        plan.append((f"dec{i}_conv_w", (width, 2 * width, 3, 3)))
        plan.append((f"dec{i}_conv_b", (width,)))
        prev = width
    plan.append(("head_w", (2, config.stage_channels[0], 3, 3)))
    plan.append(("head_b", (2,)))
    return plan


def build_network(config, seed=0, encoder_from=None):
    """He-initialized ParamStore for ``config``; biases start at zero.

    encoder_from optionally names a checkpoint whose encoder parameters
    (enc*) are copied over the fresh initialization, e.g. to reuse an
    encoder trained on another mask ensemble.
    """
    params = ParamStore()
    for idx, (name, shape) in enumerate(parameter_plan(config)):
        if name.endswith("_b"):
            params.add(name, np.zeros(shape, dtype=np.float32))
        else:
            params.add(name, he_init(shape, seed=(seed, idx)))
    if encoder_from is not None:
        src_params, _ = load_checkpoint(encoder_from)
        for p in src_params:
            if not p.name.startswith("enc"):
                continue
            if p.name not in params or params[p.name].value.shape != p.value.shape:
                raise ValueError(f"encoder parameter {p.name!r} does not fit this config")
            params[p.name].value[...] = p.value
    return params


def _forward(params, config, x, want_cache=False):
    """Run the network up to the logits; optionally record layer caches."""
    x = np.asarray(x)
    s = config.input_size
    if x.ndim != 4 or x.shape[1] != config.input_channels or x.shape[2:] != (s, s):
        raise ValueError(
            f"input must be (n, {config.input_channels}, {s}, {s}), got {x.shape}"
        )
    tape = []
    a = x
    skips = []
    for i in range(N_STAGES):
        for k in range(config.convs_per_stage[i]):
            a, cc = conv2d_forward(a, params[f"enc{i}_conv{k}_w"].value,
                                   params[f"enc{i}_conv{k}_b"].value)
            a, rc = relu_forward(a)
            if want_cache:
                tape.append(("conv", f"enc{i}_conv{k}", cc))
                tape.append(("relu", None, rc))
        skips.append(a)
        a, pc = maxpool2_forward(a)
        if want_cache:
            tape.append(("pool", i, pc))
    for i in reversed(range(N_STAGES)):
        a, dc = deconv2_forward(a, params[f"dec{i}_deconv_w"].value,
                                params[f"dec{i}_deconv_b"].value)
        a, sc = concat_channels_forward(a, skips[i])
        a, cc = conv2d_forward(a, params[f"dec{i}_conv_w"].value,
                               params[f"dec{i}_conv_b"].value)
        if want_cache:
            tape.append(("deconv", f"dec{i}_deconv", dc))
            tape.append(("concat", i, sc))
            tape.append(("conv", f"dec{i}_conv", cc))
    logits, hc = conv2d_forward(a, params["head_w"].value, params["head_b"].value)
    if want_cache:
        tape.append(("conv", "head", hc))
    return logits, tape


def _backward(params, tape, dlogits):
    """Walk the tape in reverse, accumulating parameter gradients."""
    d = dlogits
    dskips = {}
    for kind, ref, cache in reversed(tape):
        if kind == "conv":
            d, dw, db = conv2d_backward(cache, d)
            params[f"{ref}_w"].grad += dw
            params[f"{ref}_b"].grad += db
        elif kind == "relu":
            d = relu_backward(cache, d)
        elif kind == "pool":
            # the skip taken before this pool re-enters here
            d = maxpool2_backward(cache, d) + dskips.pop(ref)
        elif kind == "deconv":
            d, dw, db = deconv2_backward(cache, d)
            params[f"{ref}_w"].grad += dw
            params[f"{ref}_b"].grad += db
        elif kind == "concat":
            d, dskip = concat_channels_backward(cache, d)
            dskips[ref] = dskip
        else:  # pragma: no cover
            raise AssertionError(kind)
    return d


def forward(params, config, x):
    """Per-pixel two-class probability map for a batch of inputs."""
    logits, _ = _forward(params, config, x)
    return softmax_channels(logits)


def _usable(sample, min_fg_fraction):
    """Training uses only samples whose non-ignored label holds both classes."""
    keep = np.ones(sample.label.shape, bool) if sample.ignore is None else (np.asarray(sample.ignore) == 0)
    lab = np.asarray(sample.label)[keep]
    if lab.size == 0:
        return False
    fg = float((lab == 1).sum())
    if fg == 0 or fg == lab.size:
        return False  # beta would be 0 or 1: zero gradient
    return fg / lab.size >= min_fg_fraction


def train(params, config, samples, tc):
    """Mini-batch Adam training; returns (params, per-epoch mean loss).

    The per-sample loss follows the class-balanced cross entropy exactly
    (sums over pixels, per-sample beta); batch loss is the mean over the
    batch.  Shuffling, and therefore the whole run, is determined by
    tc.seed.
    """
    tc.validate()
    if not samples:
        raise ValueError("no training samples")
    s = config.input_size
    for smp in samples:
        x = np.asarray(smp.input)
        if x.shape != (1, config.input_channels, s, s):
            raise ValueError(f"sample input shape {x.shape} does not match config")
        if np.asarray(smp.label).shape != (s, s):
            raise ValueError(f"sample label shape {np.asarray(smp.label).shape} must be ({s}, {s})")
        if smp.ignore is not None and np.asarray(smp.ignore).shape != (s, s):
            raise ValueError(f"sample ignore shape {np.asarray(smp.ignore).shape} must be ({s}, {s})")
    usable = [smp for smp in samples if _usable(smp, tc.min_fg_fraction)]
    if not usable:
        raise ValueError("all samples were filtered out (single-class or below min_fg_fraction)")

    state = AdamState(params, lr=tc.lr, beta1=tc.beta1, beta2=tc.beta2, eps=tc.eps)
    rng = np.random.default_rng(tc.seed)
    history = []
    for _ in range(tc.epochs):
        order = rng.permutation(len(usable))
        batch_losses = []
        for start in range(0, len(order), tc.batch_size):
            batch = [usable[j] for j in order[start:start + tc.batch_size]]
            x = np.concatenate([np.asarray(b.input, dtype=np.float32) for b in batch], axis=0)
            logits, tape = _forward(params, config, x, want_cache=True)
            probs = softmax_channels(logits)
            dlogits = np.zeros_like(logits)
            losses = []
            for j, b in enumerate(batch):
                lt = balanced_ce_loss(probs[j:j + 1], b.label, b.ignore)
                losses.append(lt.loss)
                dlogits[j:j + 1] = lt.grad / len(batch)
            params.zero_grad()
            _backward(params, tape, dlogits)
            adam_step(params, state)
            batch_losses.append(float(np.mean(losses)))
        history.append(float(np.mean(batch_losses)))
    return params, history


def predict_mask(params, config, masks, out_size):
    """Fuse N candidate masks into one binary mask of shape ``out_size``.

    Masks are nearest-neighbor resized to the network input size, scaled
    to {0, 1}, and stacked channel-wise; a pixel is foreground iff its
    foreground probability strictly exceeds the background probability
    (exact ties resolve to background).
    """
    if len(masks) != config.input_channels:
        raise ValueError(f"expected {config.input_channels} masks, got {len(masks)}")
    s = config.input_size
    chans = []
    for m in masks:
        m = np.asarray(m)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("masks must be nonempty 2-D arrays")
        chans.append((resize_mask_nn(m, (s, s)) > 127).astype(np.float32))
    x = np.stack(chans)[None]
    probs = forward(params, config, x)
    fg = (probs[0, 1] > probs[0, 0]).astype(np.uint8) * 255
    return resize_mask_nn(fg, out_size)


def _config_words(config):
    return [config.input_channels, config.input_size,
            *config.stage_channels, *config.convs_per_stage]


def save_checkpoint(params, config, path):
    """Write the documented little-endian binary checkpoint format.

    Layout: magic "MFZ1"; u32 version; 12 u32 config words
    (input_channels, input_size, 5 stage widths, 5 conv counts); then
    each parameter in build order as u32 rank, u32 dims, raw float32.
    """
    expected = [name for name, _ in parameter_plan(config)]
    if params.names() != expected:
        raise ValueError("parameter store does not match the config's build order")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    buf.write(struct.pack(f"<{len(_config_words(config))}I", *_config_words(config)))
    for p in params:
        val = np.ascontiguousarray(p.value, dtype="<f4")
        buf.write(struct.pack("<I", val.ndim))
        buf.write(struct.pack(f"<{val.ndim}I", *val.shape))
        buf.write(val.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path):
    """Read a checkpoint; returns (params, config).

    Raises CheckpointError on bad magic, unsupported version, truncation,
    or tensors inconsistent with the stored config.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    view = memoryview(data)
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4, "magic")) != CHECKPOINT_MAGIC:
        raise CheckpointError("bad magic: not a fuselab checkpoint")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    words = struct.unpack("<12I", take(48, "config"))
    try:
        config = NetConfig(input_channels=words[0], input_size=words[1],
                           stage_channels=words[2:7], convs_per_stage=words[7:12])
    except ValueError as exc:
        raise CheckpointError(f"invalid stored config: {exc}") from exc

    params = ParamStore()
    for name, shape in parameter_plan(config):
        (rank,) = struct.unpack("<I", take(4, f"{name} rank"))
        if rank != len(shape):
            raise CheckpointError(f"{name}: rank {rank} inconsistent with config")
        dims = struct.unpack(f"<{rank}I", take(4 * rank, f"{name} dims"))
        if dims != shape:
            raise CheckpointError(f"{name}: shape {dims} inconsistent with config {shape}")
        count = int(np.prod(shape))
        raw = take(4 * count, f"{name} data")
        params.add(name, np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
    if pos != len(view):
        raise CheckpointError("trailing bytes after last parameter")
    return params, config
