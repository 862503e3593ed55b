"""Command-line pipelines over the library.

Subcommands: synth, bgs, vote, fuse-train, fuse-apply, eval, report.
Exit codes: 0 success, 2 usage error, 3 data/format error.  Every
subcommand accepts --config FILE with key=value lines (flags override the
file) and --threads N (worker cap for per-video work; 1 is bitwise
deterministic).  FUSELAB_SEED in the environment supplies the default
seed.
"""

import argparse
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from fuselab import bgs as bgs_mod
from fuselab import metrics as metrics_mod
from fuselab import network as net_mod
from fuselab import synth as synth_mod
from fuselab.data import (
    DatasetError,
    GT_FOREGROUND,
    GT_OUTSIDE_ROI,
    GT_UNKNOWN,
    load_image,
    resize_mask_nn,
    save_mask,
    scan_cdnet,
    select_training_frames,
)
from fuselab.fusion import eval_expr, majority_vote, median_filter3, parse_expr

_NUMBERED_RE = re.compile(r"^[A-Za-z]*?(\d+)\.(png|jpg|jpeg|pgm)$", re.IGNORECASE)


def _default_seed():
    try:
        return int(os.environ.get("FUSELAB_SEED", "0"))
    except ValueError:
        return 0


def _index_numbered(path):
    """Map frame number -> file path for any <prefix><digits>.<ext> files."""
    path = Path(path)
    if not path.is_dir():
        raise DatasetError(f"{path} is not a directory")
    out = {}
    for entry in sorted(os.listdir(path)):
        m = _NUMBERED_RE.match(entry)
        if m:
            out[int(m.group(1))] = path / entry
    if not out:
        raise DatasetError(f"no numbered image files in {path}")
    return out


def _frames_dir(path):
    """Accept either a directory of frames or a video directory with input/."""
    path = Path(path)
    if (path / "input").is_dir():
        return path / "input"
    return path


def _common_numbers(indexes):
    common = set(indexes[0])
    for idx in indexes[1:]:
        common &= set(idx)
    if not common:
        raise DatasetError("input directories share no frame numbers")
    return sorted(common)


def _size_pair(text):
    parts = text.lower().replace("x", ",").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")
    return int(parts[0]), int(parts[1])


def _kv_pair(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_synth(args):
    cfg = synth_mod.SyntheticConfig(
        size=args.size, frames=args.frames, object_count=args.objects,
        object_size=args.object_size, noise_sigma=args.noise,
        dilate_radius=args.dilate, erode_radius=args.erode,
        flip_prob=args.flip_prob, dropout_prob=args.dropout_prob, seed=args.seed)
    vdir = synth_mod.write_synthetic_dataset(cfg, args.out, args.category, args.video)
    print(f"wrote {cfg.frames} frames to {vdir}")
    return 0


def _parse_algo_opts(pairs):
    opts = {}
    for key, value in pairs or []:
        try:
            opts[key] = int(value)
        except ValueError:
            opts[key] = float(value)
    return opts


def _cmd_bgs(args):
    frames_idx = _index_numbered(_frames_dir(args.input))
    numbers = sorted(frames_idx)
    frames = [load_image(frames_idx[n]) for n in numbers]
    masks = bgs_mod.run_bgs(frames, args.algo, params=_parse_algo_opts(args.opt),
                            seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n, mask in zip(numbers, masks):
        save_mask(mask, out / f"bin{n:06d}.png")
    print(f"wrote {len(masks)} masks to {out}")
    return 0


def _mask_names(count):
    if count > 26:
        raise DatasetError("at most 26 input mask directories are supported")
    return [chr(ord("A") + i) for i in range(count)]


def _cmd_vote(args):
    indexes = [_index_numbered(d) for d in args.inputs]
    numbers = _common_numbers(indexes)
    expr = parse_expr(args.expr) if args.expr else None
    names = _mask_names(len(indexes))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n in numbers:
        masks = [load_image(idx[n]) for idx in indexes]
        if expr is None:
            fused = majority_vote(masks)
        else:
            fused = eval_expr(expr, dict(zip(names, masks)))
        if args.median_filter:
            fused = median_filter3(fused)
        save_mask(fused, out / f"bin{n:06d}.png")
    print(f"wrote {len(numbers)} masks to {out}")
    return 0


def _gt_to_label_ignore(gt, size):
    gt = resize_mask_nn(gt, size)
    ignore = (gt == GT_OUTSIDE_ROI) | (gt == GT_UNKNOWN)
    label = (gt == GT_FOREGROUND).astype(np.uint8)
    return label, ignore


def _net_config(args, n_inputs):
    if args.arch == "tiny":
        return net_mod.NetConfig.tiny(input_channels=n_inputs, input_size=args.input_size)
    # "full": the default five-stage widths (64, 128, 256, 512, 512)
    return net_mod.NetConfig(input_channels=n_inputs, input_size=args.input_size)


def _cmd_fuse_train(args):
    indexes = [_index_numbered(d) for d in args.inputs]
    gt_idx = _index_numbered(args.gt)
    numbers = _common_numbers(indexes + [gt_idx])

    gts = [load_image(gt_idx[n]) for n in numbers]
    selected = select_training_frames(gts, min_fg_fraction=args.min_fg)
    config = _net_config(args, len(indexes))
    s = config.input_size
    samples = []
    for i in selected:
        n = numbers[i]
        chans = [(resize_mask_nn(load_image(idx[n]), (s, s)) > 127).astype(np.float32)
                 for idx in indexes]
        label, ignore = _gt_to_label_ignore(gts[i], (s, s))
        samples.append(net_mod.TrainingSample(input=np.stack(chans)[None],
                                              label=label, ignore=ignore))
    if not samples:
        raise DatasetError("no usable training frames after selection")

    params = net_mod.build_network(config, seed=args.seed, encoder_from=args.encoder_from)
    tc = net_mod.TrainConfig(epochs=args.epochs, batch_size=args.batch,
                             lr=args.lr, seed=args.seed)
    params, history = net_mod.train(params, config, samples, tc)
    net_mod.save_checkpoint(params, config, args.out)
    print(f"trained on {len(samples)} samples for {args.epochs} epochs; "
          f"final loss {history[-1]:.6f}; checkpoint at {args.out}")
    return 0


def _cmd_fuse_apply(args):
    params, config = net_mod.load_checkpoint(args.checkpoint)
    indexes = [_index_numbered(d) for d in args.inputs]
    if len(indexes) != config.input_channels:
        raise DatasetError(
            f"checkpoint fuses {config.input_channels} masks, got {len(indexes)} directories")
    numbers = _common_numbers(indexes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n in numbers:
        masks = [load_image(idx[n]) for idx in indexes]
        fused = net_mod.predict_mask(params, config, masks, masks[0].shape)
        save_mask(fused, out / f"bin{n:06d}.png")
    print(f"wrote {len(numbers)} fused masks to {out}")
    return 0


def _score_mask_dir(pred_idx, gt_idx, numbers):
    counts = metrics_mod.ConfusionCounts()
    for n in numbers:
        if n not in pred_idx:
            raise DatasetError(f"missing prediction for frame {n}")
        counts = counts + metrics_mod.confusion(load_image(pred_idx[n]),
                                                load_image(gt_idx[n]))
    return metrics_mod.metrics_from_counts(counts)


def _cmd_eval(args):
    if (args.dataset is None) == (args.pred is None):
        raise DatasetError("use either --pred/--gt or --dataset/--pred-root")
    per_video = {}
    if args.dataset:
        if not args.pred_root:
            raise DatasetError("--dataset requires --pred-root")
        index = scan_cdnet(args.dataset)
        jobs = [(cat, vid, entry) for cat, vids in sorted(index.items())
                for vid, entry in sorted(vids.items())]

        def score(job):
            cat, vid, entry = job
            pred_idx = _index_numbered(Path(args.pred_root) / cat / vid)
            gt_idx = {n: p for n, p in entry.gts.items()}
            return cat, vid, _score_mask_dir(pred_idx, gt_idx, entry.evaluable_frames())

        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                results = list(pool.map(score, jobs))
        else:
            results = [score(j) for j in jobs]
        for cat, vid, vector in results:
            per_video.setdefault(cat, {})[vid] = vector
    else:
        if not args.gt:
            raise DatasetError("--pred requires --gt")
        pred_idx = _index_numbered(args.pred)
        gt_idx = _index_numbered(args.gt)
        numbers = _common_numbers([pred_idx, gt_idx])
        if args.roi:
            first, last = (int(v) for v in args.roi.split(":"))
            numbers = [n for n in numbers if first <= n <= last]
            if not numbers:
                raise DatasetError(f"no frames inside ROI {args.roi}")
        vector = _score_mask_dir(pred_idx, gt_idx, numbers)
        per_video = {args.category: {args.video or Path(args.pred).name: vector}}

    tree = metrics_mod.aggregate(per_video)
    Path(args.out).write_text(tree.to_json())
    print(f"overall FM {tree.overall.fm:.4f}; scores at {args.out}")
    return 0


def _cmd_report(args):
    tree = metrics_mod.ScoreTree.from_json(Path(args.scores).read_text())
    text = metrics_mod.report(tree, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap for per-video work (1 = deterministic)")

    parser = argparse.ArgumentParser(
        prog="fuselab",
        description="Generate, fuse, and score foreground masks.")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("synth", parents=[common],
                       help="write a synthetic dataset with candidate masks")
    p.add_argument("--out", required=True, help="dataset root directory")
    p.add_argument("--category", default="synthetic")
    p.add_argument("--video", default="rects")
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--size", type=_size_pair, default=(64, 64), help="frame HxW")
    p.add_argument("--objects", type=int, default=1)
    p.add_argument("--object-size", type=_size_pair, default=(16, 16))
    p.add_argument("--noise", type=float, default=0.0, help="background noise sigma")
    p.add_argument("--dilate", type=int, default=1)
    p.add_argument("--erode", type=int, default=1)
    p.add_argument("--flip-prob", type=float, default=0.02)
    p.add_argument("--dropout-prob", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_synth)
    subparsers["synth"] = p

    p = sub.add_parser("bgs", parents=[common],
                       help="run a background-subtraction generator over frames")
    p.add_argument("--algo", required=True, choices=bgs_mod.ALGORITHMS)
    p.add_argument("--input", required=True,
                   help="directory of frames, or a video directory with input/")
    p.add_argument("--out", required=True, help="output mask directory")
    p.add_argument("--opt", type=_kv_pair, action="append", metavar="KEY=VALUE",
                   help="algorithm parameter override (repeatable)")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_bgs)
    subparsers["bgs"] = p

    p = sub.add_parser("vote", parents=[common],
                       help="majority-vote or boolean-expression fusion")
    p.add_argument("--inputs", nargs="+", required=True, help="mask directories")
    p.add_argument("--out", required=True)
    p.add_argument("--expr", help="boolean expression over names A, B, C, ... "
                                  "bound to --inputs in order; default majority vote")
    p.add_argument("--median-filter", action="store_true",
                   help="apply a 3x3 median post-filter")
    p.set_defaults(func=_cmd_vote)
    subparsers["vote"] = p

    p = sub.add_parser("fuse-train", parents=[common],
                       help="train the fusion network from mask + ground-truth directories")
    p.add_argument("--inputs", nargs="+", required=True, help="candidate mask directories")
    p.add_argument("--gt", required=True, help="ground-truth directory")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--arch", choices=("tiny", "full"), default="tiny")
    p.add_argument("--input-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--min-fg", type=float, default=0.005,
                   help="minimum foreground fraction for a training frame")
    p.add_argument("--encoder-from", help="checkpoint whose encoder weights seed this one")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_fuse_train)
    subparsers["fuse-train"] = p

    p = sub.add_parser("fuse-apply", parents=[common],
                       help="fuse candidate masks with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse_apply)
    subparsers["fuse-apply"] = p

    p = sub.add_parser("eval", parents=[common],
                       help="score predictions against ground truth")
    p.add_argument("--pred", help="predicted mask directory (single-video mode)")
    p.add_argument("--gt", help="ground-truth directory (single-video mode)")
    p.add_argument("--roi", help="FIRST:LAST frame range (single-video mode)")
    p.add_argument("--category", default="default")
    p.add_argument("--video", help="video name for the score tree")
    p.add_argument("--dataset", help="dataset root (dataset mode)")
    p.add_argument("--pred-root", help="predictions root mirroring category/video")
    p.add_argument("--out", required=True, help="score-tree JSON output path")
    p.set_defaults(func=_cmd_eval)
    subparsers["eval"] = p

    p = sub.add_parser("report", parents=[common],
                       help="render a score tree as CSV or markdown")
    p.add_argument("--scores", required=True, help="score-tree JSON from eval")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out", help="output file; stdout when omitted")
    p.set_defaults(func=_cmd_report)
    subparsers["report"] = p

    return parser, subparsers


def _read_config_file(path, sub):
    valid = {}
    for action in sub._actions:
        if action.dest not in ("help",):
            valid[action.dest] = action
    overrides = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in valid:
            raise DatasetError(f"{path}:{lineno}: unknown option {key!r}")
        action = valid[dest]
        if isinstance(action, argparse._StoreTrueAction):
            overrides[dest] = value.lower() in ("1", "true", "yes", "on")
        else:
            overrides[dest] = value
    return overrides


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            sub = subparsers[args.command]
            sub.set_defaults(**_read_config_file(args.config, sub))
            args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
