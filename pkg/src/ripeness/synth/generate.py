"""
Synthetic dataset generation.

Scene ``i`` of a level cycles through sublevel (fastest), background, banana count and camera
pose (slowest), so any ``per_level`` that is a multiple of 2 splits evenly across the two
sublevels. Each scene seed is derived from the run seed and the global image index, which makes
every image independent of rendering order.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterator, List, Tuple

import numpy as np

from ..common.imageio import ImageFormat, read_image, write_image
from ..common.paths import RipenessPaths, image_path
from ..common.rng import derive_seed
from ..common.types import LEVELS, Background, Style
from ..data.dataset import Dataset, Sample
from ..dto.scene import SceneConfig
from ..errors import ConfigError, DatasetIOError, FormatError
from ..logger import Log
from .render import render_banana

POSES = 90  # 3 rails x 30 positions
BACKGROUNDS = list(Background)

ManifestEntry = Tuple[str, SceneConfig]


def scene_config(level_index: int, i: int, per_level: int, seed: int, image_size: int, style: Style) -> SceneConfig:
    """
    The ``i``-th scene of level ``LEVELS[level_index]``.

    >>> c = scene_config(0, 17, 8, 0, 224, Style.CLEAN)
    >>> c.sub, c.background.value, c.banana_count, c.rail, c.position
    (2, 'orange', 2, 1, 1)
    """
    pose = (i // 64) % POSES
    return SceneConfig(
        level=LEVELS[level_index],
        sub=i % 2 + 1,
        background=BACKGROUNDS[(i // 2) % len(BACKGROUNDS)],
        banana_count=(i // 16) % 4 + 1,
        rail=pose // 30 + 1,
        position=pose % 30 + 1,
        seed=derive_seed(seed, level_index * per_level + i),
        image_size=image_size,
        style=style,
    )


def _check_per_level(per_level: int) -> None:
    if per_level < 1 or per_level % 2:
        raise ConfigError(f"per_level must be a positive even number, got {per_level}")


def iter_scenes(
    per_level: int, seed: int, image_size: int = 224, style: Style = Style.CLEAN
) -> Iterator[Tuple[int, SceneConfig]]:
    """``(index within level, config)`` for every image, level by level."""
    _check_per_level(per_level)
    for level_index in range(len(LEVELS)):
        for i in range(per_level):
            yield i, scene_config(level_index, i, per_level, seed, image_size, style)


def synthesize(
    per_level: int, seed: int, image_size: int = 224, style: Style = Style.CLEAN, workers: int = 1
) -> Dataset:
    """Render a synthetic dataset in memory without touching the filesystem."""
    configs = [config for _, config in iter_scenes(per_level, seed, image_size, style)]
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        samples: List[Sample] = list(pool.map(render_banana, configs))
    Log.info("Synthesized dataset", per_level=per_level, seed=seed, style=style.value, samples=len(samples))
    return Dataset.from_samples(samples)


def generate_dataset(
    per_level: int,
    out_dir: Path,
    seed: int,
    image_size: int = 224,
    style: Style = Style.CLEAN,
    fmt: ImageFormat = "png",
    workers: int = 1,
) -> List[ManifestEntry]:
    """
    Render ``per_level`` images for each level into ``out_dir/level_{A..D}/NNNNNN.<fmt>`` and write
    ``out_dir/manifest.txt``.

    Images are rendered and written by ``workers`` threads; the manifest is written afterwards in
    index order.

    Returns:
        ``(relative path, config)`` for every image in manifest order

    Raises:
        DatasetIOError: If the output directory cannot be written
    """
    out_dir = Path(out_dir)
    entries: List[ManifestEntry] = []
    for i, config in iter_scenes(per_level, seed, image_size, style):
        relative = image_path(Path("."), config.level.value, i, fmt).as_posix()
        entries.append((relative, config))

    def _render_one(entry: ManifestEntry) -> None:
        relative, config = entry
        write_image(out_dir / relative, render_banana(config).image, fmt)

    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        for level_start in range(0, len(entries), per_level):
            list(pool.map(_render_one, entries[level_start : level_start + per_level]))
            Log.info("Level rendered", level=entries[level_start][1].level.value, images=per_level)

    write_manifest(out_dir / RipenessPaths.dataset.manifest, entries)
    Log.info("Generated dataset", out_dir=str(out_dir), per_level=per_level, seed=seed, images=len(entries))
    return entries


def write_manifest(path: Path, entries: List[ManifestEntry]) -> None:
    lines = [f"{relative} {config.to_manifest_fields()}\n" for relative, config in entries]
    try:
        Path(path).write_text("".join(lines), encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot write manifest {path}: {e}") from e


def read_manifest(path: Path) -> List[ManifestEntry]:
    """Parse a manifest written by :func:`generate_dataset`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot read manifest {path}: {e}") from e
    entries: List[ManifestEntry] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        relative, _, fields = line.partition(" ")
        if not fields:
            raise FormatError(f"{path}:{number}: missing scene fields")
        entries.append((relative, SceneConfig.from_manifest_fields(fields)))
    return entries


def load_generated(out_dir: Path) -> Dataset:
    """Read a generated directory back through its manifest."""
    out_dir = Path(out_dir)
    samples = []
    for relative, config in read_manifest(out_dir / RipenessPaths.dataset.manifest):
        samples.append(
            Sample(
                image=read_image(out_dir / relative),
                label=config.level.label,
                provenance=f"synthetic:{config.to_manifest_fields()}",
            )
        )
    return Dataset.from_samples(samples)


def sublevel_counts(entries: List[ManifestEntry]) -> Dict[str, int]:
    """Images per sublevel name."""
    names, counts = np.unique([config.sublevel for _, config in entries], return_counts=True)
    return dict(zip(names.tolist(), counts.tolist()))
