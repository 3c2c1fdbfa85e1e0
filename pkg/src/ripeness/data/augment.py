"""
Right-angle rotation augmentation.
"""

from typing import Iterable, Optional, Tuple

import numpy as np

from ..common.types import Subset
from ..errors import ConfigError
from ..logger import Log
from .dataset import Dataset

TURNS = (90, 180, 270)
# Provenance suffix of a rotated copy
ROTATION_MARK = "@rot"


def parse_turns(text: str) -> Tuple[int, ...]:
    """
    Turns from a comma-separated list such as ``"90,270"``.

    >>> parse_turns("270, 90"), parse_turns("")
    ((90, 270), ())
    """
    try:
        turns = {int(part) for part in text.split(",") if part.strip()}
    except ValueError as e:
        raise ConfigError(f"Rotation turns must be integers, got {text!r}") from e
    return check_turns(turns)


def check_turns(turns: Iterable[int]) -> Tuple[int, ...]:
    turns = tuple(sorted(set(turns)))
    unknown = [t for t in turns if t not in TURNS]
    if unknown:
        raise ConfigError(f"Unsupported rotation turns {unknown}; choose from {list(TURNS)}")
    return turns


def augment_rotations(ds: Dataset, turns: Iterable[int], subset: Optional[Subset] = None) -> Dataset:
    """
    Append one counter-clockwise rotated copy of every sample per turn.

    The originals keep their positions; copies follow turn by turn and inherit label, provenance
    (suffixed ``@rot<turn>``) and split code. With ``subset`` only that split's samples are copied.
    Non-square images are rejected, since a quarter turn would change their shape.
    """
    turns = check_turns(turns)
    if not turns:
        return ds
    if ds.images.shape[1] != ds.images.shape[2]:
        raise ConfigError("Rotation augmentation requires square images")
    source = np.arange(len(ds)) if subset is None else ds.subset_indices(subset)

    images = [ds.images]
    labels = [ds.labels]
    provenance = list(ds.provenance)
    splits = [] if ds.split is None else [ds.split]
    for turn in turns:
        images.append(np.rot90(ds.images[source], k=turn // 90, axes=(1, 2)))
        labels.append(ds.labels[source])
        provenance.extend(f"{ds.provenance[i]}{ROTATION_MARK}{turn}" for i in source)
        if ds.split is not None:
            splits.append(ds.split[source])

    augmented = Dataset(
        images=np.ascontiguousarray(np.concatenate(images)),
        labels=np.concatenate(labels),
        provenance=provenance,
        split=np.concatenate(splits) if splits else None,
        skipped=ds.skipped,
    )
    Log.info("Augmented with rotations", turns=list(turns), before=len(ds), after=len(augmented))
    return augmented


def originals(ds: Dataset) -> Dataset:
    """
    ``ds`` without the rotated copies :func:`augment_rotations` appended.

    Splitting a dataset that still holds copies would scatter one photograph over several splits.
    """
    keep = [i for i, name in enumerate(ds.provenance) if ROTATION_MARK not in name]
    if len(keep) == len(ds):
        return ds
    Log.warning("Dropping rotated copies before splitting", copies=len(ds) - len(keep), kept=len(keep))
    return ds.take(keep).model_copy(update={"skipped": list(ds.skipped)})
