"""
Command-line interface: ``ripeness <command> [options]``.

Exit codes: 0 on success, 1 on a usage error (usage text on stderr), 2 when the command fails
(the message names the failing file or operation).
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Callable, Dict, List, NoReturn, Optional

from . import model as M
from .common.paths import RipenessPaths, sidecar, split_outputs
from .common.types import Stage, Style, Subset
from .data.augment import augment_rotations, originals, parse_turns
from .data.dataset import Dataset
from .data.ingest import ingest_real
from .data.split import split
from .dto.configs import GridSpec, TrainConfig
from .errors import ConfigError, DatasetIOError, RipenessError
from .evaluate import benchmark, evaluate
from .grid import run_analog, run_grid
from .logger import Log, set_log_level
from .settings import load_settings
from .synth.generate import generate_dataset, load_generated
from .train import build_from_config, train, transfer_from

DEFAULT_SEED = 0


class UsageError(Exception):
    """Raised instead of exiting when the command line cannot be parsed."""


class Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors to :func:`main` instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n")


def _seed(args: argparse.Namespace, fallback: int = DEFAULT_SEED) -> int:
    return fallback if args.seed is None else args.seed


def _print_json(text: str) -> None:
    sys.stdout.write(text + "\n")


# --- commands ---


def cmd_gen(args: argparse.Namespace) -> None:
    entries = generate_dataset(
        args.per_level,
        args.out,
        _seed(args),
        image_size=args.image_size,
        style=Style(args.style),
        fmt=args.format,
        workers=args.workers,
    )
    if args.cache is not None:
        load_generated(args.out).save(args.cache)
    _print_json(json.dumps({"images": len(entries), "out": str(args.out)}))


def cmd_ingest(args: argparse.Namespace) -> None:
    skip_report = args.skip_report or sidecar(args.out, RipenessPaths.dataset.skipSuffix)
    ds = ingest_real(args.root, args.exclusions, args.image_size, skip_report)
    ds.save(args.out)
    _print_json(json.dumps({"samples": len(ds), "skipped": len(ds.skipped), "classes": ds.class_counts}))


def cmd_split(args: argparse.Namespace) -> None:
    out, table = split_outputs(args.dataset, args.out)
    if out.resolve() == Path(args.dataset).resolve():
        raise ConfigError(f"Refusing to overwrite the input cache {args.dataset}; choose another --out")
    turns = parse_turns(args.augment or "")
    ds = split(originals(Dataset.load(args.dataset)), _seed(args))
    if turns:
        ds = augment_rotations(ds, turns, subset=Subset.TRAIN)
    ds.save(out)
    ds.write_split_csv(table)
    counts = {subset.value: int(ds.subset_indices(subset).size) for subset in Subset}
    _print_json(json.dumps(counts))


def _config(args: argparse.Namespace, stage: Optional[Stage] = None) -> TrainConfig:
    config = TrainConfig.from_file(args.config)
    changes: Dict[str, object] = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if stage is not None:
        changes["stage"] = stage
    return config.with_overrides(**changes) if changes else config


def _log_path(args: argparse.Namespace) -> Path:
    return args.log or sidecar(args.out, ".runlog.csv")


def cmd_train(args: argparse.Namespace) -> None:
    config = _config(args)
    _, log = train(build_from_config(config), Dataset.load(args.dataset), config, args.out, _log_path(args))
    sys.stdout.write(log.to_csv_text())


def cmd_transfer(args: argparse.Namespace) -> None:
    config = _config(args, Stage.CNN2)
    start = transfer_from(M.load(args.checkpoint), config)
    _, log = train(start, Dataset.load(args.dataset), config, args.out, _log_path(args))
    sys.stdout.write(log.to_csv_text())


def cmd_eval(args: argparse.Namespace) -> None:
    net = M.load(args.checkpoint)
    report = evaluate(net, Dataset.load(args.dataset), Subset(args.subset), runs=args.runs)
    text = report.model_dump_json(indent=2)
    if args.out is not None:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as e:
            raise DatasetIOError(f"Cannot write report {args.out}: {e}") from e
    _print_json(text)


def cmd_grid(args: argparse.Namespace) -> None:
    grid = GridSpec.from_file(args.spec)
    if args.seed is not None:
        grid = GridSpec(cells=[cell.with_overrides(seed=args.seed) for cell in grid.cells])
    stage1 = M.load(args.stage1_checkpoint) if args.stage1_checkpoint else None
    stage1_config = None
    if args.stage1_config is not None:
        stage1_config = TrainConfig.from_file(args.stage1_config).with_overrides(stage=Stage.CNN1)
    workers = args.workers or load_settings().grid_workers
    report = asyncio.run(
        run_grid(
            grid,
            Dataset.load(args.synthetic),
            Dataset.load(args.real),
            args.out,
            stage1=stage1,
            stage1_config=stage1_config,
            workers=workers,
            latency_runs=args.runs,
        )
    )
    sys.stdout.write((Path(args.out) / RipenessPaths.grid.summaryText).read_text(encoding="utf-8"))
    if report.best is None:
        raise RipenessError("Every grid cell failed; see the per-cell reports")


def cmd_bench(args: argparse.Namespace) -> None:
    latency, size = benchmark(M.load(args.checkpoint), args.runs, args.warmup)
    _print_json(json.dumps({"mean_latency_ms": latency, "model_size_mb": size}))


def cmd_analog(args: argparse.Namespace) -> None:
    comparison = run_analog(
        args.out, args.per_level, args.real_per_level, args.image_size, _seed(args), workers=args.workers
    )
    _print_json(comparison.model_dump_json(indent=2))


# --- parser ---


def build_parser() -> Parser:
    """The argument parser of every command."""
    parser = Parser(prog="ripeness", description="Banana ripeness classification pipeline.")
    parser.add_argument("--seed", type=int, default=None, help="Seed of every random stream (default 0)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL")

    seeded = Parser(add_help=False)
    seeded.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, handler: Callable[[argparse.Namespace], None], help_text: str) -> Parser:
        sub = commands.add_parser(name, parents=[seeded], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    gen = add("gen", cmd_gen, "Render a synthetic dataset")
    gen.add_argument("--per-level", type=int, required=True)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--image-size", type=int, default=224)
    gen.add_argument("--style", choices=[s.value for s in Style], default=Style.CLEAN.value)
    gen.add_argument("--format", choices=["png", "ppm"], default="png")
    gen.add_argument("--cache", type=Path, default=None, help="Also write a dataset cache (.npz)")
    gen.add_argument("--workers", type=int, default=1)

    ingest = add("ingest", cmd_ingest, "Ingest a directory of real images")
    ingest.add_argument("--root", type=Path, required=True)
    ingest.add_argument("--out", type=Path, required=True, help="Dataset cache (.npz)")
    ingest.add_argument("--exclusions", type=Path, default=None)
    ingest.add_argument("--skip-report", type=Path, default=None)
    ingest.add_argument("--image-size", type=int, default=224)

    split_cmd = add("split", cmd_split, "Assign the 60/20/20 split")
    split_cmd.add_argument("--dataset", type=Path, required=True)
    split_cmd.add_argument("--out", type=Path, default=None, help="Split cache (default <dataset stem>.split.npz)")
    split_cmd.add_argument("--augment", default=None, help="Rotate the train split, e.g. 90,180,270")

    for name, handler, help_text in (
        ("train", cmd_train, "Train a fresh network"),
        ("transfer", cmd_transfer, "Fine-tune a transferred head on a stage-1 checkpoint"),
    ):
        sub = add(name, handler, help_text)
        if name == "transfer":
            sub.add_argument("--checkpoint", type=Path, required=True)
        sub.add_argument("--config", type=Path, required=True)
        sub.add_argument("--dataset", type=Path, required=True)
        sub.add_argument("--out", type=Path, required=True)
        sub.add_argument("--log", type=Path, default=None)

    ev = add("eval", cmd_eval, "Evaluate a checkpoint on one split")
    ev.add_argument("--checkpoint", type=Path, required=True)
    ev.add_argument("--dataset", type=Path, required=True)
    ev.add_argument("--subset", choices=[s.value for s in Subset], default=Subset.TEST.value)
    ev.add_argument("--out", type=Path, default=None)
    ev.add_argument("--runs", type=int, default=None, help="Timed latency runs (0 skips latency)")

    grid = add("grid", cmd_grid, "Run a hyperparameter grid")
    grid.add_argument("--spec", type=Path, required=True)
    grid.add_argument("--synthetic", type=Path, required=True)
    grid.add_argument("--real", type=Path, required=True)
    grid.add_argument("--out", type=Path, required=True)
    stage1 = grid.add_mutually_exclusive_group()
    stage1.add_argument("--stage1-config", type=Path, default=None)
    stage1.add_argument("--stage1-checkpoint", type=Path, default=None)
    grid.add_argument("--workers", type=int, default=None)
    grid.add_argument("--runs", type=int, default=None, help="Timed latency runs per cell (0 skips latency)")

    bench = add("bench", cmd_bench, "Measure latency and model size")
    bench.add_argument("--checkpoint", type=Path, required=True)
    bench.add_argument("--runs", type=int, default=None)
    bench.add_argument("--warmup", type=int, default=None)

    analog = add("analog", cmd_analog, "Run the desk-scale transfer comparison")
    analog.add_argument("--out", type=Path, required=True)
    analog.add_argument("--per-level", type=int, default=800)
    analog.add_argument("--real-per-level", type=int, default=100)
    analog.add_argument("--image-size", type=int, default=64)
    analog.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(str(e))
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)

    log_level = args.log_level or load_settings().log_level
    if log_level.upper() != "ERROR":
        set_log_level(log_level)
    try:
        args.handler(args)
    except (RipenessError, OSError) as e:
        Log.error("Command failed", command=args.command, error=str(e))
        sys.stderr.write(f"ripeness {args.command}: error: {e}\n")
        return 2
    return 0
