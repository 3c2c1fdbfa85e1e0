"""
On-disk layout conventions for datasets, grid runs and desk-scale experiments.
"""
# pylint: disable=invalid-name,too-few-public-methods

from pathlib import Path
from typing import Optional, Tuple


class RipenessPaths:
    """Root of all file and directory name conventions used by the pipeline."""

    class dataset:
        """Generated and ingested dataset directories."""

        levelDir = "level_{level}"
        dayDirPattern = r"^day_(\d+)$"
        image = "{index:06d}.{ext}"
        manifest = "manifest.txt"
        splitCache = "{stem}.split.npz"
        splitTable = ".csv"
        skipSuffix = ".skipped.txt"

    class grid:
        """Outputs of a hyperparameter grid run."""

        stage1Checkpoint = "stage1.ckpt"
        stage1Log = "stage1.runlog.csv"
        cellReport = "{config_id}.json"
        cellLog = "{config_id}.runlog.csv"
        cellCheckpoint = "{config_id}.ckpt"
        summaryCsv = "summary.csv"
        summaryText = "summary.txt"

    class analog:
        """Outputs of the desk-scale transfer comparison."""

        synthetic = "synthetic"
        realLike = "real_like"
        report = "comparison.json"


def level_dir(root: Path, level: str) -> Path:
    """Directory holding the images of one ripeness level."""
    return Path(root) / RipenessPaths.dataset.levelDir.format(level=level)


def image_path(root: Path, level: str, index: int, ext: str = "png") -> Path:
    """Path of the ``index``-th image of ``level``."""
    return level_dir(root, level) / RipenessPaths.dataset.image.format(index=index, ext=ext)


def sidecar(path: Path, suffix: str) -> Path:
    """A file next to ``path`` with ``suffix`` appended to its name."""
    path = Path(path)
    return path.with_name(path.name + suffix)


def split_outputs(dataset: Path, out: Optional[Path] = None) -> Tuple[Path, Path]:
    """
    The split cache and its ``index,split`` table for an unsplit ``dataset`` cache.

    >>> [p.name for p in split_outputs(Path("data/real.npz"))]
    ['real.split.npz', 'real.split.csv']
    """
    dataset = Path(dataset)
    if out is None:
        out = dataset.with_name(RipenessPaths.dataset.splitCache.format(stem=dataset.stem))
    out = Path(out)
    return out, out.with_suffix(RipenessPaths.dataset.splitTable)
