"""
Ingestion of real banana photographs.

Two layouts are accepted under the root directory: ``level_{A..D}/`` folders labeled directly, or
``day_NN/`` folders labeled by the ripening schedule (days 1-6 A, 7-14 B, 15-22 C, 23-28 D).
"""

import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Set, Tuple

from ..common.configfile import read_text
from ..common.imageio import read_image, resize_bilinear
from ..common.paths import RipenessPaths
from ..common.types import LEVELS, RipenessLevel
from ..errors import DatasetError, DatasetIOError, RangeError
from ..logger import Log
from .dataset import Dataset, Sample

IMAGE_SUFFIXES = {".png", ".ppm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}

# (last day, level) in schedule order
DAY_SCHEDULE = ((6, RipenessLevel.A), (14, RipenessLevel.B), (22, RipenessLevel.C), (28, RipenessLevel.D))


def day_to_level(day: int) -> RipenessLevel:
    """
    Ripeness level of a banana ``day`` days into the schedule.

    >>> [day_to_level(d).value for d in (1, 6, 7, 14, 15, 22, 23, 28)]
    ['A', 'A', 'B', 'B', 'C', 'C', 'D', 'D']
    """
    if not 1 <= day <= DAY_SCHEDULE[-1][0]:
        raise RangeError(f"Day {day} is outside the ripening schedule 1..{DAY_SCHEDULE[-1][0]}")
    return next(level for last, level in DAY_SCHEDULE if day <= last)


def read_exclusions(path: Optional[Path]) -> Set[str]:
    """Relative POSIX paths listed one per line; ``#`` starts a comment."""
    if path is None:
        return set()
    lines = (line.split("#", 1)[0].strip() for line in read_text(path).splitlines())
    return {Path(line).as_posix() for line in lines if line}


def _candidates(root: Path) -> Tuple[List[Tuple[str, RipenessLevel]], List[str]]:
    """Labeled relative paths in sorted order and the directories skipped as out of schedule."""
    level_names = {RipenessPaths.dataset.levelDir.format(level=level.value): level for level in LEVELS}
    day_pattern = re.compile(RipenessPaths.dataset.dayDirPattern)
    labeled: List[Tuple[str, RipenessLevel]] = []
    skipped: List[str] = []
    for directory in sorted(p for p in root.iterdir() if p.is_dir()):
        level = level_names.get(directory.name)
        match = day_pattern.match(directory.name)
        if level is None and match:
            try:
                level = day_to_level(int(match.group(1)))
            except RangeError:
                skipped.extend(
                    f"{p.relative_to(root).as_posix()}\tout of schedule"
                    for p in sorted(directory.rglob("*"))
                    if p.suffix.lower() in IMAGE_SUFFIXES
                )
                continue
        if level is None:
            continue
        labeled.extend(
            (p.relative_to(root).as_posix(), level)
            for p in sorted(directory.rglob("*"))
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
    return labeled, skipped


def ingest_real(
    root: Path,
    exclusions: Optional[Path] = None,
    image_size: int = 224,
    skip_report: Optional[Path] = None,
    workers: int = 4,
) -> Dataset:
    """
    Decode, resize and label every non-excluded image below ``root``.

    Undecodable images and images of out-of-schedule days go to the skip report (one
    ``path<TAB>reason`` line each); excluded images are left out silently.

    Raises:
        DatasetError: If no image could be ingested
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetIOError(f"Dataset root {root} is not a directory")
    excluded = read_exclusions(exclusions)
    labeled, skipped = _candidates(root)
    wanted = [(relative, level) for relative, level in labeled if relative not in excluded]

    def _decode(entry: Tuple[str, RipenessLevel]):
        relative, level = entry
        try:
            image = resize_bilinear(read_image(root / relative), image_size)
        except DatasetIOError as e:
            return None, f"{relative}\tundecodable: {e.__cause__ or e}"
        return Sample(image=image, label=level.label, provenance=f"real:{relative}"), None

    samples: List[Sample] = []
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        for sample, problem in pool.map(_decode, wanted):
            if sample is not None:
                samples.append(sample)
            else:
                skipped.append(problem)

    if skip_report is not None:
        try:
            Path(skip_report).write_text("".join(f"{line}\n" for line in skipped), encoding="utf-8")
        except OSError as e:
            raise DatasetIOError(f"Cannot write skip report {skip_report}: {e}") from e
    Log.info(
        "Ingested real images",
        root=str(root),
        candidates=len(labeled),
        excluded=len(labeled) - len(wanted),
        skipped=len(skipped),
        samples=len(samples),
    )
    if not samples:
        raise DatasetError(f"No readable images under {root}")
    return Dataset.from_samples(samples, skipped=skipped)
