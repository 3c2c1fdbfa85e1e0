"""
Hyperparameter grid runner and the desk-scale transfer comparison.

Every grid cell fine-tunes its own copy of one shared stage-1 network, so cells never share
mutable state and a failing cell cannot affect the others. Cells run as asyncio tasks on worker
threads; reports are written by the coordinating coroutine once all cells have finished.
"""

import asyncio
import io
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, TypeVar

import pandas as pd

from . import model as M
from .common.paths import RipenessPaths
from .common.rng import derive_seed
from .common.types import ByConfigId, OptimizerKind, Stage, Style, Subset
from .data.dataset import Dataset
from .data.split import split
from .dto.configs import GridSpec, TrainConfig
from .dto.reports import DomainResult, GridCellResult, GridReport, TransferComparison
from .errors import DatasetIOError
from .evaluate import benchmark, evaluate
from .logger import Log
from .model import NetworkSpec
from .synth.generate import synthesize
from .train import build_from_config, run_scratch, run_stage1_stage2, train, transfer_from

T = TypeVar("T")

SUMMARY_COLUMNS = [
    "config_id",
    "accuracy",
    "loss",
    "latency_ms",
    "size_mb",
    "epochs",
    "optimizer",
    "lr",
    "dropout_layers",
    "batch_size",
    "seed",
    "val_accuracy",
    "val_loss",
    "status",
]


async def execute_cells(
    cells: Sequence[TrainConfig], operation: Callable[[TrainConfig], T], workers: int = 1
) -> ByConfigId:
    """
    Execute a blocking operation for every grid cell.

    Args:
        cells: Grid cells
        operation: Function run in a worker thread for each cell
        workers: Maximum number of cells running at once

    Returns:
        Mapping of config ids to operation results, or to the exception a cell raised
    """
    semaphore = asyncio.Semaphore(max(workers, 1))

    async def _guarded(cell: TrainConfig) -> T:
        async with semaphore:
            return await asyncio.to_thread(operation, cell)

    tasks = []
    for cell in cells:
        task = asyncio.create_task(_guarded(cell))
        tasks.append((cell.config_id, task))

    results = ByConfigId({})
    for config_id, task in tasks:
        try:
            result = await task
            results[config_id] = result
        except Exception as e:  # pylint: disable=broad-exception-caught
            Log.error("Grid cell failed", config_id=config_id, error=str(e), error_type=type(e).__name__)
            results[config_id] = e

    return results


def rank(cells: List[GridCellResult]) -> List[GridCellResult]:
    """Successful cells by test accuracy (best first, ties by id), then failed cells by id."""
    ok = sorted((c for c in cells if c.status == "ok"), key=lambda c: (-c.test.accuracy, c.config_id))
    failed = sorted((c for c in cells if c.status != "ok"), key=lambda c: c.config_id)
    return ok + failed


def summary_frame(report: GridReport) -> pd.DataFrame:
    """One row per cell in ranking order, with the summary CSV columns."""
    rows = []
    for cell in report.cells:
        cfg, test, val = cell.config, cell.test, cell.validation
        rows.append(
            {
                "config_id": cell.config_id,
                "accuracy": test.accuracy if test else None,
                "loss": test.loss if test else None,
                "latency_ms": test.mean_latency_ms if test else None,
                "size_mb": test.model_size_mb if test else None,
                "epochs": cfg.epochs,
                "optimizer": cfg.optimizer.value,
                "lr": cfg.lr,
                "dropout_layers": cfg.dropout_layers,
                "batch_size": cfg.batch_size,
                "seed": cfg.seed,
                "val_accuracy": val.accuracy if val else None,
                "val_loss": val.loss if val else None,
                "status": cell.status,
            }
        )
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_summary(report: GridReport, out_dir: Path) -> pd.DataFrame:
    """Write ``summary.csv`` and the aligned-text ``summary.txt``."""
    frame = summary_frame(report)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    try:
        (out_dir / RipenessPaths.grid.summaryCsv).write_text(buffer.getvalue(), encoding="utf-8")
        (out_dir / RipenessPaths.grid.summaryText).write_text(frame.to_string(index=False) + "\n", encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot write grid summary in {out_dir}: {e}") from e
    return frame


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot write {path}: {e}") from e


def default_stage1_config(grid: GridSpec) -> TrainConfig:
    """Stage-1 settings when none are given: the first cell's, run as ``cnn1``."""
    return grid.cells[0].with_overrides(config_id="stage1", stage=Stage.CNN1)


async def run_grid(
    grid: GridSpec,
    synth_ds: Dataset,
    real_ds: Dataset,
    out_dir: Path,
    stage1: Optional[NetworkSpec] = None,
    stage1_config: Optional[TrainConfig] = None,
    workers: int = 1,
    latency_runs: Optional[int] = None,
    latency_warmup: Optional[int] = None,
) -> GridReport:
    """
    Fine-tune every cell of ``grid`` from one stage-1 network and rank the results.

    Unless ``stage1`` is given, it is trained on ``synth_ds`` with ``stage1_config`` (by default the
    first cell's settings) and saved as ``stage1.ckpt``. Each cell keeps the stage-1 geometry and
    writes ``<config_id>.ckpt``, ``<config_id>.runlog.csv`` and ``<config_id>.json``; the ranked
    summary goes to ``summary.csv`` and ``summary.txt``.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetIOError(f"Cannot create grid output directory {out_dir}: {e}") from e

    if stage1 is None:
        cfg1 = stage1_config or default_stage1_config(grid)
        stage1, _ = await asyncio.to_thread(
            train,
            build_from_config(cfg1),
            synth_ds,
            cfg1,
            out_dir / RipenessPaths.grid.stage1Checkpoint,
            out_dir / RipenessPaths.grid.stage1Log,
        )

    # cells report the geometry they actually train, which is the stage-1 network's
    shape = M.geometry(stage1)
    cells_to_run = [cfg.with_overrides(**shape) for cfg in grid.cells]
    if any(cfg != original for cfg, original in zip(cells_to_run, grid.cells)):
        Log.info("Grid cells follow the stage-1 geometry", **shape)

    def _run_cell(cfg: TrainConfig) -> Tuple[GridCellResult, NetworkSpec]:
        Log.info("Grid cell started", config_id=cfg.config_id)
        net, log = train(
            transfer_from(stage1, cfg),
            real_ds,
            cfg,
            out_dir / RipenessPaths.grid.cellCheckpoint.format(config_id=cfg.config_id),
            out_dir / RipenessPaths.grid.cellLog.format(config_id=cfg.config_id),
        )
        test = evaluate(net, real_ds, Subset.TEST, runs=0, config=cfg)
        validation = evaluate(net, real_ds, Subset.VALIDATION, runs=0, config=cfg)
        Log.info("Grid cell finished", config_id=cfg.config_id, accuracy=test.accuracy)
        result = GridCellResult(
            config_id=cfg.config_id, status="ok", config=cfg, test=test, validation=validation, runlog=log
        )
        return result, net

    outcomes = await execute_cells(cells_to_run, _run_cell, workers)
    cells: List[GridCellResult] = []
    for cfg in cells_to_run:
        outcome: Any = outcomes[cfg.config_id]
        if isinstance(outcome, Exception):
            outcome = GridCellResult(config_id=cfg.config_id, status="failed", config=cfg, error=str(outcome))
        elif latency_runs != 0:
            # timed one cell at a time, after all training has finished
            result, net = outcome
            latency, _ = benchmark(net, latency_runs, latency_warmup)
            outcome = result.model_copy(update={"test": result.test.model_copy(update={"mean_latency_ms": latency})})
        else:
            outcome = outcome[0]
        cells.append(outcome)
        report_path = out_dir / RipenessPaths.grid.cellReport.format(config_id=cfg.config_id)
        _write_text(report_path, outcome.model_dump_json(indent=2, exclude={"runlog"}))

    report = GridReport(cells=rank(cells))
    write_summary(report, out_dir)
    best = report.best
    Log.info(
        "Grid finished",
        cells=len(cells),
        failed=sum(c.status != "ok" for c in cells),
        best=best.config_id if best else None,
    )
    return report


# --- desk-scale transfer comparison ---


def _domain(name: str, net: NetworkSpec, ds: Dataset, config: TrainConfig) -> DomainResult:
    return DomainResult(
        name=name,
        test=evaluate(net, ds, Subset.TEST, runs=0, config=config, config_id=name),
        validation=evaluate(net, ds, Subset.VALIDATION, runs=0, config=config, config_id=name),
    )


def run_transfer_comparison(
    synth_ds: Dataset,
    real_ds: Dataset,
    cfg1: TrainConfig,
    cfg2: TrainConfig,
    scratch_cfg: Optional[TrainConfig] = None,
    out_dir: Optional[Path] = None,
) -> TransferComparison:
    """
    Compare CNN1 (synthetic only), CNN2 (transfer) and a scratch-trained network on ``real_ds``.

    ``scratch_cfg`` defaults to ``cfg2``; the scratch run trains every layer.
    """
    cnn1, cnn2, logs = run_stage1_stage2(synth_ds, real_ds, cfg1, cfg2, out_dir)
    scratch_cfg = scratch_cfg or cfg2.with_overrides(config_id="scratch")
    scratch, _ = run_scratch(
        real_ds,
        scratch_cfg,
        None if out_dir is None else Path(out_dir) / "scratch.ckpt",
        None if out_dir is None else Path(out_dir) / "scratch.runlog.csv",
    )
    stage1_records = logs[0].records
    comparison = TransferComparison(
        stage1_train_accuracy=stage1_records[-1].train_acc if stage1_records else 0.0,
        cnn1_on_real=_domain("cnn1", cnn1, real_ds, cfg1),
        cnn2=_domain("cnn2", cnn2, real_ds, cfg2),
        scratch=_domain("scratch", scratch, real_ds, scratch_cfg),
    )
    Log.info(
        "Transfer comparison finished",
        stage1_train_accuracy=comparison.stage1_train_accuracy,
        cnn1_on_real=comparison.cnn1_on_real.test.accuracy,
        cnn2=comparison.cnn2.test.accuracy,
        scratch=comparison.scratch.test.accuracy,
    )
    return comparison


def analog_configs(image_size: int = 64, seed: int = 0) -> List[TrainConfig]:
    """
    Stage-1, stage-2 and scratch settings of the desk-scale experiment (shrunken network).

    Stage 2 and the scratch baseline share one short, low learning-rate budget on the real-like
    set: the same optimizer, epochs, batch size and geometry, so only the starting weights differ.
    """
    common = {
        "optimizer": OptimizerKind.ADAM,
        "batch_size": 32,
        "image_size": image_size,
        "widths": (8, 16, 32),
        "hidden_units": 32,
        "seed": seed,
    }
    real_budget = {"lr": 0.0005, "epochs": 6, **common}
    return [
        TrainConfig(config_id="analog-cnn1", stage=Stage.CNN1, lr=0.001, epochs=10, **common),
        TrainConfig(config_id="analog-cnn2", stage=Stage.CNN2, **real_budget),
        TrainConfig(config_id="analog-scratch", stage=Stage.SCRATCH_REAL, **real_budget),
    ]


def run_analog(
    out_dir: Path,
    per_level: int = 800,
    real_per_level: int = 100,
    image_size: int = 64,
    seed: int = 0,
    workers: int = 1,
) -> TransferComparison:
    """
    The scaled two-stage experiment: a clean synthetic set and a separately seeded ``real_like``
    set stand in for the synthetic and real domains.

    Both datasets are cached under ``out_dir`` and the comparison is written to
    ``out_dir/comparison.json``.
    """
    out_dir = Path(out_dir)
    synth_ds = split(synthesize(per_level, seed, image_size, Style.CLEAN, workers), seed)
    real_seed = derive_seed(seed, 0x7EA1)
    real_ds = split(synthesize(real_per_level, real_seed, image_size, Style.REAL_LIKE, workers), seed)
    synth_ds.save(out_dir / f"{RipenessPaths.analog.synthetic}.npz")
    real_ds.save(out_dir / f"{RipenessPaths.analog.realLike}.npz")

    cfg1, cfg2, scratch_cfg = analog_configs(image_size, seed)
    comparison = run_transfer_comparison(synth_ds, real_ds, cfg1, cfg2, scratch_cfg, out_dir)
    _write_text(out_dir / RipenessPaths.analog.report, comparison.model_dump_json(indent=2))
    return comparison

