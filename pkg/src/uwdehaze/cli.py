"""
Command-line entry point.

Exit codes: 0 on success, 2 on invalid input (flags, files, configs) and 3 when training
diverges.
"""

import argparse
import json
import logging
import os
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from uwdehaze.artifacts import emit_artifacts
from uwdehaze.checkpoint import load_checkpoint
from uwdehaze.config import TrainConfig, load_train_config, write_config_file
from uwdehaze.datasets import (
    DatasetKind,
    DatasetManifest,
    ManifestImages,
    UnpairedSplit,
    build_manifest,
    holdout_split,
    unpaired_split,
)
from uwdehaze.degradation import (
    DegradationParams,
    synthesize_pairs,
    synthesize_underwater,
    write_paired_dataset,
)
from uwdehaze.errors import DivergenceError, UwDehazeError
from uwdehaze.evaluation import (
    disentanglement_diagnostics,
    evaluate,
    restore_image,
    separate_haze,
)
from uwdehaze.images import is_image_file, load_image, save_image
from uwdehaze.networks import ArchitectureConfig
from uwdehaze.training import LossTrace, train

logger = logging.getLogger(__name__)

OUT_ENV = "UWDEHAZE_OUT"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3

type Handler = Callable[[argparse.Namespace], int]

# flag name, TrainConfig field, type
TRAIN_OVERRIDES: tuple[tuple[str, str, type], ...] = (
    ("--patch", "patch", int),
    ("--batch", "batch", int),
    ("--learning-rate", "learning_rate", float),
    ("--beta1", "beta1", float),
    ("--beta2", "beta2", float),
    ("--epochs", "epochs", int),
    ("--seed", "seed", int),
    ("--max-steps", "max_steps", int),
    ("--log-every", "log_every", int),
    ("--checkpoint-every", "checkpoint_every", int),
    ("--device", "device", str),
)

ARCHITECTURE_OVERRIDES: tuple[tuple[str, str, type], ...] = (
    ("--base-width", "base_width", int),
    ("--residual-blocks", "residual_blocks", int),
    ("--discriminator-width", "discriminator_width", int),
)


def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _image_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]

    if path.is_dir():
        return sorted(item for item in path.iterdir() if item.is_file() and is_image_file(item))

    raise FileNotFoundError(f'The input "{path}" does not exist.')


def prepare_data(args: argparse.Namespace) -> int:
    manifest = build_manifest(args.root, args.kind)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    if args.train_count is not None:
        manifest, test_manifest = holdout_split(manifest, args.train_count, args.seed)
        test_manifest.save(out / "test_manifest.jsonl")
        logger.info("Held out %d records for testing", len(test_manifest))

    split = unpaired_split(manifest, args.seed)
    manifest.save(out / "manifest.jsonl")
    split.save(out / "split.json")
    print(f"underwater={len(split.underwater_ids)} clean={len(split.clean_ids)}")

    return EXIT_OK


def _train_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {
        field: getattr(args, field) for _, field, _ in TRAIN_OVERRIDES
    }
    overrides["architecture"] = {
        field: getattr(args, field) for _, field, _ in ARCHITECTURE_OVERRIDES
    } | {"activation": args.activation}

    if args.no_progress:
        overrides["progress"] = False

    if args.no_haze_reinjection:
        overrides["haze_reinjection"] = False

    return overrides


def train_command(args: argparse.Namespace) -> int:
    config = load_train_config(args.config, _train_overrides(args))
    data: Path = args.data
    manifest = DatasetManifest.load(data / "manifest.jsonl")
    split = UnpairedSplit.load(data / "split.json")
    split.verify(manifest)

    out: Path = args.out
    write_config_file(config, out / "config.yaml")

    try:
        result = train(config, split, ManifestImages(manifest), out, resume_from=args.resume)
    except DivergenceError as error:
        logger.error("%s", error)

        if error.last_checkpoint is not None:
            print(f"last_checkpoint={error.last_checkpoint}")

        return EXIT_DIVERGED

    emit_artifacts(result.trace, None, out)
    print(f"steps={result.state.step} checkpoint={result.last_checkpoint}")

    return EXIT_OK


def restore_command(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.checkpoint)
    out: Path = args.out
    paths = _image_files(args.input)
    failures = 0

    for path in paths:
        try:
            image = load_image(path)
            content, restored = restore_image(state.hdn, state.restoration, image)
            save_image(separate_haze(state.hdn, image), out / f"{path.stem}_haze.png")
            save_image(content, out / f"{path.stem}_content.png")
            save_image(restored, out / f"{path.stem}_restored.png")
        except (UwDehazeError, OSError) as error:
            failures += 1
            logger.error('Failed to restore "%s": %s', path, error)

    logger.info("Restored %d image(s) into %s", len(paths) - failures, out)

    return EXIT_INVALID if failures else EXIT_OK


def evaluate_command(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.checkpoint)
    manifest = DatasetManifest.load(args.manifest)
    report = evaluate(state, manifest, keep_samples=args.keep_samples)
    report.write(args.out)
    trace = LossTrace.from_csv(args.trace) if args.trace is not None else LossTrace()
    emit_artifacts(trace, report, args.out)

    means = {name: report.mean(name) for name in ("psnr_db", "ssim")}
    print(
        f"count={report.count} skipped={len(report.skipped)} "
        + " ".join(
            f"mean_{name}=" + ("n/a" if value is None else f"{value:.4f}")
            for name, value in means.items()
        )
    )

    return EXIT_OK


def diagnose_command(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.checkpoint)
    diagnostics = disentanglement_diagnostics(state, DatasetManifest.load(args.manifest))
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnostics.json").write_text(
        json.dumps(diagnostics.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    ratio = f"{diagnostics.ratio:.4f}" if diagnostics.ratio_defined else "undefined"
    print(
        f"clean={diagnostics.mean_abs_haze_response_clean:.6f} "
        f"underwater={diagnostics.mean_abs_haze_response_underwater:.6f} ratio={ratio}"
    )

    return EXIT_OK


def synthesize_command(args: argparse.Namespace) -> int:
    out: Path = args.out

    if args.generate is not None:
        images = synthesize_pairs(args.generate, args.size, args.seed)
        write_paired_dataset(images, out)
        print(f"pairs={len(images)}")

        return EXIT_OK

    if args.input is None:
        raise ValueError('Either "--input" or "--generate" is required.')

    params = DegradationParams(
        attenuation=tuple(args.attenuation),
        background=tuple(args.background),
        transmission_smoothness=args.smoothness,
        seed=args.seed,
        transmission_range=(args.transmission_low, args.transmission_high),
    )
    paths = _image_files(args.input)

    for path in paths:
        save_image(synthesize_underwater(load_image(path), params), out / f"{path.stem}.png")

    print(f"images={len(paths)}")

    return EXIT_OK


def _with_default(text: str) -> str:
    return f"{text} (default: %(default)s)"


def _required(text: str) -> str:
    return f"{text} (required)"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--verbose", action="store_true", help=_with_default("log at DEBUG level")
    )
    common.add_argument(
        "--out",
        type=Path,
        default=_default_out(),
        help=_with_default(f"output directory; ${OUT_ENV} sets the default"),
    )

    parser = argparse.ArgumentParser(
        prog="uwdehaze",
        description="Unsupervised underwater haze removal with haze/content disentanglement.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    prepare = commands.add_parser(
        "prepare-data", parents=[common], help="build a manifest and an unpaired split"
    )
    prepare.add_argument(
        "--root", type=Path, required=True, help=_required("dataset root directory")
    )
    prepare.add_argument(
        "--kind",
        choices=[kind.value for kind in DatasetKind],
        required=True,
        help=_required("which dataset the root holds"),
    )
    prepare.add_argument("--seed", type=int, default=0, help=_with_default("split seed"))
    prepare.add_argument(
        "--train-count",
        type=int,
        default=None,
        help=_with_default("hold out all but this many records for testing"),
    )
    prepare.set_defaults(handler=prepare_data)

    defaults = TrainConfig()
    training = commands.add_parser(
        "train",
        parents=[common],
        help="train the disentanglement and restoration networks",
        description="Flags override the config file, which overrides the built-in defaults.",
    )
    training.add_argument(
        "--config", type=Path, default=None, help=_with_default("YAML config file")
    )
    training.add_argument(
        "--data",
        type=Path,
        required=True,
        help=_required("directory with manifest.jsonl and split.json"),
    )
    training.add_argument(
        "--resume",
        type=Path,
        default=None,
        help=_with_default("checkpoint to continue training from"),
    )

    for flag, field, kind in TRAIN_OVERRIDES:
        training.add_argument(
            flag, dest=field, type=kind, default=None, help=f"default: {getattr(defaults, field)}"
        )

    for flag, field, kind in ARCHITECTURE_OVERRIDES:
        training.add_argument(
            flag,
            dest=field,
            type=kind,
            default=None,
            help=f"default: {getattr(defaults.architecture, field)}",
        )

    training.add_argument(
        "--activation",
        choices=["leaky_relu", "silu"],
        default=None,
        help=f"default: {ArchitectureConfig().activation}",
    )
    training.add_argument(
        "--no-progress", action="store_true", help=_with_default("hide the progress bar")
    )
    training.add_argument(
        "--no-haze-reinjection",
        action="store_true",
        help=_with_default("regenerate underwater images without haze features"),
    )
    training.set_defaults(handler=train_command)

    restore = commands.add_parser(
        "restore", parents=[common], help="restore underwater images with a checkpoint"
    )
    restore.add_argument(
        "--checkpoint", type=Path, required=True, help=_required("checkpoint file")
    )
    restore.add_argument(
        "--input", type=Path, required=True, help=_required("image file or directory")
    )
    restore.set_defaults(handler=restore_command)

    evaluation = commands.add_parser(
        "evaluate", parents=[common], help="score a checkpoint on a paired test manifest"
    )
    evaluation.add_argument(
        "--checkpoint", type=Path, required=True, help=_required("checkpoint file")
    )
    evaluation.add_argument(
        "--manifest", type=Path, required=True, help=_required("test manifest file")
    )
    evaluation.add_argument(
        "--trace",
        type=Path,
        default=None,
        help=_with_default("loss_trace.csv to plot alongside"),
    )
    evaluation.add_argument(
        "--keep-samples", type=int, default=4, help=_with_default("rows in the comparison grid")
    )
    evaluation.set_defaults(handler=evaluate_command)

    diagnose = commands.add_parser(
        "diagnose", parents=[common], help="measure haze-encoder responses per domain"
    )
    diagnose.add_argument(
        "--checkpoint", type=Path, required=True, help=_required("checkpoint file")
    )
    diagnose.add_argument(
        "--manifest", type=Path, required=True, help=_required("paired manifest file")
    )
    diagnose.set_defaults(handler=diagnose_command)

    synthesize = commands.add_parser(
        "synthesize", parents=[common], help="degrade clean images or generate a paired set"
    )
    source = synthesize.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", type=Path, default=None, help="clean image file or directory")
    source.add_argument(
        "--generate", type=int, default=None, help="write this many synthetic pairs"
    )
    synthesize.add_argument(
        "--size", type=int, default=128, help=_with_default("side of generated scenes")
    )
    synthesize.add_argument("--seed", type=int, default=0, help=_with_default("random seed"))
    synthesize.add_argument(
        "--attenuation",
        type=float,
        nargs=3,
        default=[0.3, 0.75, 0.85],
        metavar=("R", "G", "B"),
        help=_with_default("per-channel attenuation"),
    )
    synthesize.add_argument(
        "--background",
        type=float,
        nargs=3,
        default=[0.05, 0.45, 0.55],
        metavar=("R", "G", "B"),
        help=_with_default("veiling background colour"),
    )
    synthesize.add_argument(
        "--smoothness", type=float, default=16.0, help=_with_default("transmission cell size")
    )
    synthesize.add_argument(
        "--transmission-low", type=float, default=0.2, help=_with_default("lowest transmission")
    )
    synthesize.add_argument(
        "--transmission-high", type=float, default=1.0, help=_with_default("highest transmission")
    )
    synthesize.set_defaults(handler=synthesize_command)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, force=True
    )
    handler: Handler = args.handler

    try:
        return handler(args)
    except DivergenceError as error:
        logger.error("%s", error)

        return EXIT_DIVERGED
    except (UwDehazeError, ValueError, FileNotFoundError) as error:
        logger.error("%s", error)

        return EXIT_INVALID
