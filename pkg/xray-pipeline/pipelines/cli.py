"""
Command-line workflow: synth -> split -> train -> eval -> predict, plus inspect.

    python -m pipelines.cli synth --out data/synthetic --classes 3 --per-class 8 --size 64
    python -m pipelines.cli split --manifest data/synthetic/manifest.csv --out data/split.csv --seed 1
    python -m pipelines.cli train --manifest data/split.csv --arch wnet --classes 3 \
        --input-size 64 --depth 2 --base-channels 8 --epochs 30 --out models/wnet.xrn
    python -m pipelines.cli eval --model models/wnet.xrn --manifest data/split.csv \
        --report reports/wnet.json --roc reports/wnet_roc.csv
    python -m pipelines.cli predict --model models/wnet.xrn --image some.png --heatmap heat.png
    python -m pipelines.cli inspect --arch wnet --classes 2

Every command prints its resolved configuration as one `config:` JSON line
before acting. Exit codes: 0 success, 1 usage, 2 data, 3 I/O, 4 numerical.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

# Add project root to sys.path to allow imports from src directory
project_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(project_root))

import numpy as np  # noqa: E402

from src.architectures import (  # noqa: E402
    ModelConfig,
    build_model,
    describe,
    forward_classify,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
)
from src.autodiff.rng import Rng  # noqa: E402
from src.config import (  # noqa: E402
    CLASS_VOCABULARY,
    DEFAULT_BASE_CHANNELS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DEPTH,
    DEFAULT_INPUT_CHANNELS,
    DEFAULT_INPUT_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_TRAIN_FRACTION,
    REFERENCE_RUNS,
    settings,
)
from src.explain import gradcam, occlusion_map, render_heatmap, write_heatmap_csv  # noqa: E402
from src.ingestion.manifest import (  # noqa: E402
    DatasetManifest,
    class_histogram,
    load_manifest,
    manifest_summary,
    save_manifest,
)
from src.ingestion.synthetic import generate_synthetic  # noqa: E402
from src.metrics import build_report, render_tables, write_report  # noqa: E402
from src.preprocessing.images import decode_and_resize, load_samples  # noqa: E402
from src.preprocessing.split import ClassCounts, SplitSpec, stratified_split  # noqa: E402
from src.training import evaluate_accuracy, preset, train, train_config_from  # noqa: E402
from src.utils.errors import DataError, UsageError, XrayNetError, validate_record  # noqa: E402
from src.utils.logger import setup_logger  # noqa: E402

logger = logging.getLogger("pipelines.cli")

EXIT_OK = 0
EXIT_IO = 3


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports bad flags as UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _formatter(prog: str) -> argparse.HelpFormatter:
    return argparse.ArgumentDefaultsHelpFormatter(prog, max_help_position=36)


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(
        prog="xraynet",
        description="U-Net / W-Net chest X-ray classification workflow",
        formatter_class=_formatter,
    )
    parser.add_argument("--log-level", default=None, help="Log level for the run log and console (default: settings)")
    parser.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliArgumentParser)
    sub.required = True

    p = sub.add_parser("split", help="Stratified train/test split of a manifest", formatter_class=_formatter)
    p.add_argument("--manifest", required=True, help="Input manifest CSV (path,label[,split])")
    p.add_argument("--train-fraction", type=float, default=DEFAULT_TRAIN_FRACTION, help="Per-class train share, in (0, 1)")
    p.add_argument("--seed", type=int, default=settings.default_seed, help="Shuffle seed")
    p.add_argument("--out", required=True, help="Output manifest CSV with split column")
    p.add_argument("--overwrite", action="store_true", help="Replace existing split assignments")
    p.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="CLASS=TRAIN:TEST",
        help="Exact per-class counts, repeatable",
    )

    p = sub.add_parser("train", help="Train a classifier and write a checkpoint", formatter_class=_formatter)
    p.add_argument("--manifest", required=True, help="Manifest; rows with split=train are used when splits exist")
    p.add_argument("--preset", choices=sorted(REFERENCE_RUNS), default=None, help="Published run (explicit flags win)")
    p.add_argument("--arch", choices=["unet", "wnet"], default=None, help="Network family (default: unet)")
    p.add_argument("--classes", type=int, choices=[2, 3], default=None, help="Class count (default: 2)")
    p.add_argument("--input-size", type=int, default=DEFAULT_INPUT_SIZE, help="Square input side")
    p.add_argument("--base-channels", type=int, default=DEFAULT_BASE_CHANNELS, help="Channels of the top stage")
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="Pooling stages per U")
    p.add_argument("--epochs", type=int, default=None, help="Training epochs (required without --preset)")
    p.add_argument("--batch-size", type=int, default=None, help=f"Samples per step (default: {DEFAULT_BATCH_SIZE})")
    p.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=settings.default_seed, help="Initialization and shuffle seed")
    p.add_argument("--out", required=True, help="Checkpoint path")
    p.add_argument("--log", default=None, help="JSONL training log path")
    p.add_argument("--timing", action="store_true", help="Record per-batch wall time in the log (default: ms=0)")

    p = sub.add_parser("eval", help="Evaluate a checkpoint on the test split", formatter_class=_formatter)
    p.add_argument("--model", required=True, help="Checkpoint path")
    p.add_argument("--manifest", required=True, help="Manifest; rows with split=test are used when splits exist")
    p.add_argument("--report", required=True, help="Report JSON path")
    p.add_argument("--roc", required=True, help="ROC points CSV path")

    p = sub.add_parser("predict", help="Classify one image, optionally with a heat map", formatter_class=_formatter)
    p.add_argument("--model", required=True, help="Checkpoint path")
    p.add_argument("--image", required=True, help="Raster image (PNG, PGM, ...)")
    p.add_argument("--heatmap", default=None, help="Overlay PNG path")
    p.add_argument("--heatmap-csv", default=None, help="Raw heat values CSV path")
    p.add_argument("--heatmap-method", choices=["gradcam", "occlusion"], default="gradcam", help="Attribution method")
    p.add_argument("--target-class", type=int, default=None, help="Class to explain (default: predicted class)")
    p.add_argument("--patch-size", type=int, default=None, help="Occlusion patch side (default: input size / 8)")
    p.add_argument("--stride", type=int, default=None, help="Occlusion stride (default: patch size / 2)")

    p = sub.add_parser("synth", help="Generate a synthetic planted-feature dataset", formatter_class=_formatter)
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--classes", type=int, choices=[2, 3], default=3, help="Class count")
    p.add_argument("--per-class", type=int, default=8, help="Images per class")
    p.add_argument("--size", type=int, default=64, help="Image side")
    p.add_argument("--seed", type=int, default=settings.default_seed, help="Generator seed")

    p = sub.add_parser("inspect", help="Print the stage ladder and parameter inventory", formatter_class=_formatter)
    p.add_argument("--model", default=None, help="Checkpoint path (otherwise the flags below describe the model)")
    p.add_argument("--arch", choices=["unet", "wnet"], default="unet", help="Network family")
    p.add_argument("--classes", type=int, choices=[2, 3], default=2, help="Class count")
    p.add_argument("--input-size", type=int, default=DEFAULT_INPUT_SIZE, help="Square input side")
    p.add_argument("--base-channels", type=int, default=DEFAULT_BASE_CHANNELS, help="Channels of the top stage")
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="Pooling stages per U")
    return parser


def echo_config(command: str, values: Dict[str, Any]) -> None:
    print("config: " + json.dumps({"command": command, **values}, sort_keys=True, default=str))


def vocabulary_for(num_classes: int):
    return CLASS_VOCABULARY[:num_classes]


def load_task_manifest(path: str, num_classes: int) -> DatasetManifest:
    """Load a manifest and check its classes against the model's class count."""
    manifest = load_manifest(path)
    expected = vocabulary_for(num_classes)
    if manifest.class_vocabulary != expected:
        raise DataError(
            f"Manifest classes {list(manifest.class_vocabulary)} do not match the "
            f"{num_classes}-class vocabulary {list(expected)}"
        )
    return manifest


def parse_overrides(items: Sequence[str]) -> Optional[Dict[str, ClassCounts]]:
    if not items:
        return None
    overrides = {}
    for item in items:
        try:
            name, counts = item.split("=", 1)
            n_train, n_test = counts.split(":", 1)
            overrides[name.strip().lower()] = ClassCounts(train=int(n_train), test=int(n_test))
        except ValueError:
            raise UsageError(f"Override '{item}' must look like CLASS=TRAIN:TEST") from None
    return overrides


# ----- commands -----

def cmd_split(args: argparse.Namespace) -> int:
    spec = validate_record(
        SplitSpec,
        {
            "train_fraction": args.train_fraction,
            "per_class_override": parse_overrides(args.override),
            "seed": args.seed,
            "overwrite": args.overwrite,
        },
    )
    echo_config("split", {"manifest": args.manifest, "out": args.out, **spec.model_dump()})
    manifest = load_manifest(args.manifest)
    result = stratified_split(manifest, spec)
    save_manifest(result, args.out)
    print(f"train: {json.dumps(class_histogram(result, 'train'))}")
    print(f"test: {json.dumps(class_histogram(result, 'test'))}")
    return EXIT_OK


def resolve_train_settings(args: argparse.Namespace) -> Dict[str, Any]:
    resolved: Dict[str, Any] = {"arch": "unet", "num_classes": 2, "epochs": None, "batch_size": DEFAULT_BATCH_SIZE}
    if args.preset:
        resolved.update(preset(args.preset))
    explicit = {"arch": args.arch, "num_classes": args.classes, "epochs": args.epochs, "batch_size": args.batch_size}
    resolved.update({k: v for k, v in explicit.items() if v is not None})
    return resolved


def cmd_train(args: argparse.Namespace, progress: bool) -> int:
    resolved = resolve_train_settings(args)
    model_cfg = validate_record(
        ModelConfig,
        {
            "arch": resolved["arch"],
            "input_size": args.input_size,
            "base_channels": args.base_channels,
            "depth": args.depth,
            "num_classes": resolved["num_classes"],
            "seed": args.seed,
        },
    )
    train_cfg = train_config_from(
        {
            "epochs": resolved["epochs"],
            "batch_size": resolved["batch_size"],
            "learning_rate": args.lr,
            "seed": args.seed,
        }
    )
    echo_config(
        "train",
        {
            "manifest": args.manifest,
            "preset": args.preset,
            "model": model_cfg.model_dump(),
            "training": train_cfg.model_dump(),
            "out": args.out,
            "log": args.log,
            "timing": args.timing,
        },
    )

    logger.info("=" * 60)
    logger.info(f"Training {model_cfg.arch} ({model_cfg.num_classes} classes)")
    logger.info("=" * 60)

    logger.info("Step 1/3: Loading training images")
    manifest = load_task_manifest(args.manifest, model_cfg.num_classes)
    split = "train" if manifest.has_splits else None
    if split is None:
        logger.warning("Manifest has no split column; training on every row")
    samples = load_samples(manifest, split, model_cfg.input_size, progress=progress)
    logger.info(f"✓ Loaded {len(samples)} samples")

    logger.info("Step 2/3: Training")
    model = build_model(model_cfg, Rng(model_cfg.seed))
    model, records = train(model, samples, train_cfg, log_path=args.log, timing=args.timing, progress=progress)
    last_epoch = [r for r in records if r.epoch == train_cfg.epochs]
    final_loss = float(np.mean([r.loss for r in last_epoch]))
    final_acc = last_epoch[-1].running_accuracy
    logger.info(f"✓ Trained {len(records)} batches")

    logger.info("Step 3/3: Writing checkpoint")
    out = save_checkpoint(model, args.out)
    logger.info(f"✓ Checkpoint: {out}")

    print(f"batches: {len(records)}")
    print(f"final epoch: loss {final_loss:.4f} accuracy {final_acc:.4f}")
    print(f"checkpoint: {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, progress: bool) -> int:
    echo_config("eval", {"model": args.model, "manifest": args.manifest, "report": args.report, "roc": args.roc})
    model = load_checkpoint(args.model)
    cfg = model.config
    manifest = load_task_manifest(args.manifest, cfg.num_classes)
    split = "test" if manifest.has_splits else None
    if split is None:
        logger.warning("Manifest has no split column; evaluating every row")
    samples = load_samples(manifest, split, cfg.input_size, progress=progress)
    if not samples:
        raise DataError("No rows to evaluate")

    probabilities = predict_batch(model, [s.image for s in samples])
    actual = [s.label_index for s in samples]
    identifiers = {"checkpoint": str(args.model), "split": split or "all", **cfg.model_dump()}
    report = build_report(actual, probabilities, list(manifest.class_vocabulary), identifiers)
    write_report(report, args.report, args.roc)
    print(render_tables(report), end="")
    return EXIT_OK


def default_patch(size: int, patch: Optional[int], stride: Optional[int]):
    patch = patch or max(size // 8, 1)
    stride = stride or max(patch // 2, 1)
    return patch, stride


def cmd_predict(args: argparse.Namespace, progress: bool) -> int:
    occlusion = args.heatmap_method == "occlusion"
    # unset patch and stride default from the checkpoint's input size below
    echo_config(
        "predict",
        {
            "model": args.model,
            "image": args.image,
            "heatmap": args.heatmap,
            "heatmap_csv": args.heatmap_csv,
            "heatmap_method": args.heatmap_method,
            "target_class": args.target_class,
            "patch_size": args.patch_size if occlusion else None,
            "stride": args.stride if occlusion else None,
        },
    )
    model = load_checkpoint(args.model)
    cfg = model.config
    patch, stride = default_patch(cfg.input_size, args.patch_size, args.stride)
    image = decode_and_resize(args.image, cfg.input_size)
    probs = forward_classify(model, image).numpy().astype(np.float64)
    vocabulary = vocabulary_for(cfg.num_classes)
    predicted = int(np.argmax(probs))
    for name, p in zip(vocabulary, probs):
        print(f"{name}: {p:.4f}")
    print(f"prediction: {vocabulary[predicted]}")

    if args.heatmap or args.heatmap_csv:
        target = predicted if args.target_class is None else args.target_class
        if args.heatmap_method == "gradcam":
            heat = gradcam(model, image, target)
        else:
            heat = occlusion_map(model, image, target, patch, stride, progress=progress)
        if args.heatmap:
            print(f"heatmap: {render_heatmap(heat, image, args.heatmap)}")
        if args.heatmap_csv:
            print(f"heatmap csv: {write_heatmap_csv(heat, args.heatmap_csv)}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, progress: bool) -> int:
    echo_config(
        "synth",
        {"out": args.out, "classes": args.classes, "per_class": args.per_class, "size": args.size, "seed": args.seed},
    )
    manifest = generate_synthetic(args.out, args.per_class, args.size, args.classes, args.seed, progress=progress)
    for line in manifest_summary(manifest):
        print(line)
    print(f"manifest: {Path(args.out) / 'manifest.csv'}")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    if args.model:
        echo_config("inspect", {"model": args.model})
        cfg = load_checkpoint(args.model).config
    else:
        cfg = validate_record(
            ModelConfig,
            {
                "arch": args.arch,
                "num_classes": args.classes,
                "input_size": args.input_size,
                "base_channels": args.base_channels,
                "depth": args.depth,
                "input_channels": DEFAULT_INPUT_CHANNELS,
            },
        )
        echo_config("inspect", {"model": cfg.model_dump()})
    print(describe(cfg))
    return EXIT_OK


def dispatch(args: argparse.Namespace) -> int:
    progress = sys.stderr.isatty() and not args.no_progress
    if args.command == "split":
        return cmd_split(args)
    if args.command == "train":
        return cmd_train(args, progress)
    if args.command == "eval":
        return cmd_eval(args, progress)
    if args.command == "predict":
        return cmd_predict(args, progress)
    if args.command == "synth":
        return cmd_synth(args, progress)
    return cmd_inspect(args)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    setup_logger("", log_level=args.log_level, console_level=args.log_level)
    try:
        return dispatch(args)
    except XrayNetError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}", exc_info=settings.debug)
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=settings.debug)
        return EXIT_IO
    except Exception:
        logger.error(f"{args.command} failed unexpectedly", exc_info=True)
        raise


if __name__ == "__main__":
    sys.exit(main())
