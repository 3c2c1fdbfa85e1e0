"""
Tests for the command-line interface.
"""

import json

import numpy as np
import pytest

from ripeness.cli import main
from ripeness.common.imageio import write_image
from ripeness.data.dataset import Dataset


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gen(tmp_path, capsys):
    code, out, _ = run(capsys, "--seed", 3, "gen", "--per-level", 8, "--image-size", 16, "--out", tmp_path / "synth")
    assert code == 0
    assert json.loads(out)["images"] == 32
    assert len(list((tmp_path / "synth").rglob("*.png"))) == 32
    assert (tmp_path / "synth" / "manifest.txt").is_file()


@pytest.mark.parametrize(
    "argv",
    [[], ["gen"], ["gen", "--per-level", "8"], ["frobnicate"], ["eval", "--checkpoint", "x", "--dataset", "y", "-z"]],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert "usage:" in err


def test_missing_checkpoint(tmp_path, capsys):
    code, _, err = run(capsys, "eval", "--checkpoint", tmp_path / "absent.ckpt", "--dataset", tmp_path / "x.npz")
    assert code == 2
    assert "absent.ckpt" in err


def test_invalid_config(tmp_path, capsys):
    (tmp_path / "bad.cfg").write_text("optimizer = rmsprop\n", encoding="utf-8")
    code, _, err = run(
        capsys, "train", "--config", tmp_path / "bad.cfg", "--dataset", tmp_path / "x.npz", "--out", tmp_path / "m"
    )
    assert code == 2
    assert "optimizer" in err


def test_pipeline(tmp_path, capsys):
    cache = tmp_path / "synth.npz"
    code, _, _ = run(capsys, "gen", "--per-level", 8, "--image-size", 16, "--out", tmp_path / "synth", "--cache", cache)
    assert code == 0

    code, out, _ = run(capsys, "--seed", 1, "split", "--dataset", cache, "--augment", "90")
    assert code == 0
    assert json.loads(out) == {"train": 38, "test": 7, "validation": 6}
    assert (tmp_path / "synth.split.csv").is_file()
    cache = tmp_path / "synth.split.npz"

    config = tmp_path / "tiny.cfg"
    config.write_text(
        "config_id = tiny\nepochs = 1\nbatch_size = 8\nimage_size = 16\nwidths = 4, 4, 4\nhidden_units = 8\n",
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "train", "--config", config, "--dataset", cache, "--out", tmp_path / "tiny.ckpt")
    assert code == 0
    assert out.splitlines()[0] == "epoch,train_loss,train_acc,val_loss,val_acc,seconds"
    assert (tmp_path / "tiny.ckpt.runlog.csv").is_file()

    code, out, _ = run(
        capsys,
        "transfer",
        "--checkpoint",
        tmp_path / "tiny.ckpt",
        "--config",
        config,
        "--dataset",
        cache,
        "--out",
        tmp_path / "cnn2.ckpt",
    )
    assert code == 0

    report_path = tmp_path / "report.json"
    code, out, _ = run(
        capsys,
        "eval",
        "--checkpoint",
        tmp_path / "cnn2.ckpt",
        "--dataset",
        cache,
        "--runs",
        0,
        "--out",
        report_path,
    )
    assert code == 0
    report = json.loads(out)
    assert report["count"] == 7
    assert report["mean_latency_ms"] is None
    assert json.loads(report_path.read_text(encoding="utf-8")) == report

    code, out, _ = run(capsys, "bench", "--checkpoint", tmp_path / "cnn2.ckpt", "--runs", 1, "--warmup", 0)
    assert code == 0
    assert json.loads(out)["mean_latency_ms"] > 0


def test_split_is_repeatable(tmp_path, capsys):
    cache = tmp_path / "synth.npz"
    run(capsys, "gen", "--per-level", 8, "--image-size", 16, "--out", tmp_path / "synth", "--cache", cache)
    original = cache.read_bytes()

    outputs = []
    for _ in range(2):
        code, out, _ = run(capsys, "--seed", 1, "split", "--dataset", cache, "--augment", "90")
        assert code == 0
        assert json.loads(out) == {"train": 38, "test": 7, "validation": 6}
        ds = Dataset.load(tmp_path / "synth.split.npz")
        outputs.append((ds, (tmp_path / "synth.split.csv").read_bytes()))
    assert cache.read_bytes() == original

    (first, first_table), (second, second_table) = outputs
    assert first_table == second_table
    assert np.array_equal(first.images, second.images)
    assert np.array_equal(first.split, second.split)
    assert first.provenance == second.provenance


def test_split_keeps_copies_with_their_original(tmp_path, capsys):
    cache = tmp_path / "synth.npz"
    run(capsys, "gen", "--per-level", 8, "--image-size", 16, "--out", tmp_path / "synth", "--cache", cache)
    run(capsys, "split", "--dataset", cache, "--augment", "90,180", "--out", tmp_path / "once.npz")
    # splitting an already augmented cache drops the copies first
    code, out, _ = run(capsys, "split", "--dataset", tmp_path / "once.npz", "--augment", "90,180")
    assert code == 0
    assert sum(json.loads(out).values()) == 32 + 2 * 19

    ds = Dataset.load(tmp_path / "once.split.npz")
    split_of = {}
    for name, subset_code in zip(ds.provenance, ds.split.tolist()):
        split_of.setdefault(name.split("@rot")[0], set()).add(subset_code)
    assert len(split_of) == 32
    assert all(len(codes) == 1 for codes in split_of.values())


def test_split_refuses_to_overwrite_its_input(tmp_path, capsys):
    cache = tmp_path / "synth.npz"
    run(capsys, "gen", "--per-level", 8, "--image-size", 16, "--out", tmp_path / "synth", "--cache", cache)
    original = cache.read_bytes()
    code, _, err = run(capsys, "split", "--dataset", cache, "--out", cache)
    assert code == 2
    assert "overwrite" in err
    assert cache.read_bytes() == original


def test_ingest_writes_skip_report_next_to_cache(tmp_path, capsys):
    photos = tmp_path / "photos"
    write_image(photos / "level_A" / "a1.png", np.zeros((12, 12, 3), dtype=np.uint8))
    write_image(photos / "day_20" / "c1.png", np.full((12, 12, 3), 90, dtype=np.uint8))
    (photos / "level_B").mkdir()
    (photos / "level_B" / "broken.png").write_bytes(b"not an image")

    code, out, _ = run(capsys, "ingest", "--root", photos, "--out", tmp_path / "real.npz", "--image-size", 8)
    assert code == 0
    assert json.loads(out)["skipped"] == 1
    lines = (tmp_path / "real.npz.skipped.txt").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 and lines[0].startswith("level_B/broken.png")
