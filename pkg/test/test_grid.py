"""
Tests for the asynchronous hyperparameter grid and the transfer comparison.
"""

import json
from pathlib import Path

import pandas as pd
import pytest

from conftest import solid_dataset, toy_config
from ripeness import grid as G
from ripeness.common.types import ByConfigId, Stage
from ripeness.data.split import split
from ripeness.dto.configs import GridSpec, TrainConfig
from ripeness.dto.reports import EvalReport, GridCellResult
from ripeness.grid import SUMMARY_COLUMNS, execute_cells, rank, run_grid, run_transfer_comparison
from ripeness.train import build_from_config, train

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cell(config_id: str, **changes):
    values = {"config_id": config_id, "stage": Stage.CNN2, "epochs": 1}
    values.update(changes)
    return toy_config(**values)


@pytest.fixture
def real_ds():
    return split(solid_dataset(per_class=10, seed=9), seed=2)


@pytest.fixture
def stage1_net(toy_dataset, toy_cfg):
    net, _ = train(build_from_config(toy_cfg), toy_dataset, toy_cfg.with_overrides(epochs=2))
    return net


async def test_execute_cells_keeps_failures():
    def operation(cfg):
        if cfg.config_id == "bad":
            raise RuntimeError("boom")
        return cfg.lr

    results = await execute_cells([cell("a", lr=0.1), cell("bad"), cell("c", lr=0.3)], operation, workers=2)
    assert isinstance(results, ByConfigId)
    assert results["a"] == 0.1 and results["c"] == 0.3
    assert isinstance(results["bad"], RuntimeError)


async def test_grid_ranks_and_writes_reports(tmp_path, toy_dataset, real_ds, stage1_net, monkeypatch):
    grid = GridSpec(cells=[cell("adam-d1"), cell("nadam-d2", optimizer="nadam", dropout_layers=2), cell("broken")])
    real_transfer = G.transfer_from

    def flaky_transfer(stage1, cfg):
        if cfg.config_id == "broken":
            raise RuntimeError("cell exploded")
        return real_transfer(stage1, cfg)

    monkeypatch.setattr(G, "transfer_from", flaky_transfer)
    report = await run_grid(grid, toy_dataset, real_ds, tmp_path, stage1=stage1_net, workers=2, latency_runs=0)

    assert [c.config_id for c in report.cells][-1] == "broken"
    assert report.cells[-1].status == "failed" and "exploded" in report.cells[-1].error
    ok = [c for c in report.cells if c.status == "ok"]
    assert [c.test.accuracy for c in ok] == sorted((c.test.accuracy for c in ok), reverse=True)
    assert report.best.config_id in {"adam-d1", "nadam-d2"}
    assert all(c.test.mean_latency_ms is None for c in ok)

    for config_id in ("adam-d1", "nadam-d2"):
        assert (tmp_path / f"{config_id}.ckpt").is_file()
        assert (tmp_path / f"{config_id}.runlog.csv").is_file()
    cell_json = json.loads((tmp_path / "broken.json").read_text(encoding="utf-8"))
    assert cell_json["status"] == "failed"
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary["config_id"].tolist() == [c.config_id for c in report.cells]
    assert (tmp_path / "summary.txt").read_text(encoding="utf-8").startswith("config_id")
    assert not (tmp_path / "stage1.ckpt").exists()


async def test_grid_trains_stage1_and_times_cells(tmp_path, toy_dataset, real_ds):
    grid = GridSpec(cells=[cell("only")])
    report = await run_grid(
        grid, toy_dataset, real_ds, tmp_path, stage1_config=toy_config(epochs=1), latency_runs=1, latency_warmup=0
    )
    assert (tmp_path / "stage1.ckpt").is_file()
    assert (tmp_path / "stage1.runlog.csv").is_file()
    assert report.cells[0].status == "ok"
    assert report.cells[0].test.mean_latency_ms > 0
    assert report.cells[0].validation.mean_latency_ms is None


def test_rank_breaks_ties_by_id():
    base = {"subset": "test", "loss": 0.1, "model_size_mb": 0.0}
    same = EvalReport.from_predictions([0, 1], [0, 1], 4, **base)
    cells = [
        GridCellResult(config_id=name, status="ok", config=cell(name), test=same) for name in ("b", "a")
    ] + [GridCellResult(config_id="0", status="failed", config=cell("0"), error="x")]
    assert [c.config_id for c in rank(cells)] == ["a", "b", "0"]


def test_transfer_comparison(tmp_path, toy_dataset, real_ds):
    comparison = run_transfer_comparison(
        toy_dataset, real_ds, toy_config(epochs=2), toy_config(config_id="cell", epochs=1), out_dir=tmp_path
    )
    assert comparison.cnn2.name == "cnn2"
    assert 0.0 <= comparison.stage1_train_accuracy <= 1.0
    assert comparison.transfer_gain == comparison.cnn2.test.accuracy - comparison.scratch.test.accuracy
    assert (tmp_path / "scratch.ckpt").is_file()


async def test_published_grid_is_reproducible(tmp_path, toy_dataset, real_ds, stage1_net):
    published = GridSpec.from_file(CONFIGS / "table5.cfg")
    grid = GridSpec(cells=[c.with_overrides(epochs=1, batch_size=4) for c in published.cells])
    reports = [
        await run_grid(grid, toy_dataset, real_ds, tmp_path / name, stage1=stage1_net, workers=3, latency_runs=0)
        for name in ("first", "second")
    ]

    first, second = reports
    assert len(first.cells) == 6
    assert all(c.status == "ok" for c in first.cells)
    assert [(c.config_id, c.test.accuracy) for c in first.cells] == [
        (c.config_id, c.test.accuracy) for c in second.cells
    ]
    assert first.best.config_id == second.best.config_id
    summary = pd.read_csv(tmp_path / "first" / "summary.csv")
    assert sorted(summary["config_id"]) == sorted(c.config_id for c in published.cells)


async def test_cells_record_the_stage1_geometry(tmp_path, toy_dataset, real_ds, stage1_net):
    grid = GridSpec(cells=[TrainConfig(config_id="full-size", stage=Stage.CNN2, epochs=1, batch_size=4)])
    report = await run_grid(grid, toy_dataset, real_ds, tmp_path, stage1=stage1_net, latency_runs=0)
    cfg = report.cells[0].config
    assert (cfg.image_size, cfg.widths, cfg.hidden_units) == (8, (8, 8, 8), 16)
    saved = json.loads((tmp_path / "full-size.json").read_text(encoding="utf-8"))
    assert saved["config"]["image_size"] == 8


@pytest.mark.slow
def test_small_analog_runs(tmp_path):
    comparison = G.run_analog(tmp_path, per_level=8, real_per_level=8, image_size=16)
    assert (tmp_path / "comparison.json").is_file()
    assert comparison.cnn1_on_real.test.count > 0


@pytest.mark.slow
def test_desk_scale_transfer_beats_scratch(tmp_path):
    comparison = G.run_analog(tmp_path, workers=4)
    assert comparison.stage1_train_accuracy >= 0.99
    assert comparison.transfer_gain >= 0.02
