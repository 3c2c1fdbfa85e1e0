"""
Tests for configuration files, settings, logging and the shared helpers.
"""

from pathlib import Path

import pytest

from ripeness.common.configfile import parse_blocks, parse_single, read_text
from ripeness.common.types import ByConfigId, OptimizerKind, Stage
from ripeness.common.utils import inject_ids_into_cells
from ripeness.dto.configs import GridSpec, TrainConfig
from ripeness.errors import ConfigError, DatasetIOError, RipenessError
from ripeness.logger import get_log_level, set_log_level
from ripeness.settings import load_settings

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestConfigFile:
    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_blocks("a = 1\na = 2\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_blocks("lr 0.1\n")

    def test_single_block_required(self):
        with pytest.raises(ConfigError):
            parse_single("a = 1\n\nb = 2\n")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(DatasetIOError):
            read_text(tmp_path / "absent.cfg")


class TestTrainConfig:
    def test_stage1_file(self):
        cfg = TrainConfig.from_file(CONFIGS / "stage1.cfg")
        assert cfg.stage is Stage.CNN1
        assert cfg.widths == (32, 64, 128)
        assert (cfg.image_size, cfg.hidden_units, cfg.batch_size) == (224, 50, 50)

    def test_values_are_coerced(self):
        cfg = TrainConfig.from_mapping({"lr": "0.01", "epochs": "3", "widths": "8, 16, 32", "optimizer": "nadam"})
        assert cfg.lr == 0.01 and cfg.epochs == 3
        assert cfg.widths == (8, 16, 32)
        assert cfg.optimizer is OptimizerKind.NADAM

    @pytest.mark.parametrize(
        "values",
        [
            {"optimizer": "rmsprop"},
            {"lr": "0"},
            {"dropout_layers": "3"},
            {"image_size": "100"},
            {"batch_size": "0"},
            {"learning_rate": "0.1"},
            {"config_id": "has space"},
        ],
    )
    def test_invalid_values(self, values):
        with pytest.raises(ConfigError):
            TrainConfig.from_mapping(values)

    def test_overrides_are_validated(self):
        cfg = TrainConfig()
        assert cfg.with_overrides(seed=5).seed == 5
        with pytest.raises(ConfigError):
            cfg.with_overrides(epochs=-1)

    def test_errors_share_a_base(self):
        with pytest.raises(RipenessError):
            TrainConfig.from_mapping({"lr": "-1"})


class TestGridSpec:
    def test_published_grid(self):
        grid = GridSpec.from_file(CONFIGS / "table5.cfg")
        assert [c.config_id for c in grid.cells] == [
            "nadam-d2",
            "nadam-d1",
            "adagrad-d2",
            "adagrad-d1",
            "adam-d2",
            "adam-d1",
        ]
        assert all(c.stage is Stage.CNN2 for c in grid.cells)
        adagrad = grid.cells[2]
        assert (adagrad.lr, adagrad.epochs, adagrad.dropout_layers) == (0.01, 60, 2)

    def test_positional_ids(self):
        grid = GridSpec.from_text("lr = 0.1\n\nlr = 0.2\nstage = scratch-real\n")
        assert [c.config_id for c in grid.cells] == ["cell-01", "cell-02"]
        assert grid.cells[1].stage is Stage.SCRATCH_REAL

    def test_duplicate_ids(self):
        with pytest.raises(ConfigError):
            GridSpec.from_text("config_id = x\n\nconfig_id = x\n")

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            GridSpec.from_text("# nothing here\n")


class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("LOG_LEVEL", "GRID_WORKERS", "LATENCY_RUNS", "LATENCY_WARMUP"):
            monkeypatch.delenv(f"RIPENESS_{name}", raising=False)
        settings = load_settings(dotenv_path="/nonexistent/.env")
        assert (settings.latency_runs, settings.latency_warmup, settings.grid_workers) == (100, 10, 1)

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("RIPENESS_GRID_WORKERS", "3")
        monkeypatch.setenv("RIPENESS_LATENCY_RUNS", "7")
        settings = load_settings()
        assert (settings.grid_workers, settings.latency_runs) == (3, 7)

    def test_dotenv_file(self, tmp_path, monkeypatch):
        # dotenv writes into os.environ; registering the variable first makes teardown remove it
        monkeypatch.setenv("RIPENESS_LATENCY_WARMUP", "0")
        monkeypatch.delenv("RIPENESS_LATENCY_WARMUP")
        (tmp_path / ".env").write_text("RIPENESS_LATENCY_WARMUP=2\n", encoding="utf-8")
        assert load_settings(dotenv_path=str(tmp_path / ".env")).latency_warmup == 2


class TestLogger:
    def test_set_and_reset(self):
        assert get_log_level() == "ERROR"
        set_log_level("debug")
        assert get_log_level() == "DEBUG"

    def test_invalid_level_is_ignored(self):
        set_log_level("LOUD")
        assert get_log_level() == "ERROR"


class TestHelpers:
    def test_by_config_id(self):
        results = ByConfigId({"a": 1})
        results["b"] = 2
        assert len(results) == 2
        assert dict(results.items()) == {"a": 1, "b": 2}
        assert results.get("c", 0) == 0

    def test_inject_ids_rejects_non_mappings(self):
        with pytest.raises(ValueError):
            inject_ids_into_cells(["lr = 0.1"])
