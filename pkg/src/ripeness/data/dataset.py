"""
Samples, datasets and mini-batches.

A :class:`Dataset` keeps its images as one ``uint8`` array ``(n, H, W, 3)`` with parallel label and
provenance lists. Split assignments are stored as subset codes (0 train, 1 test, 2 validation).
"""

import io
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..common.rng import Rng, derive_seed
from ..common.types import LEVELS, NUM_CLASSES, Subset
from ..errors import ConfigError, DatasetError, DatasetIOError, ShapeError
from ..logger import Log

SUBSETS = (Subset.TRAIN, Subset.TEST, Subset.VALIDATION)


class Sample(BaseModel):
    """One labeled RGB image and where it came from."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    image: np.ndarray
    label: int = Field(ge=0, lt=NUM_CLASSES)
    provenance: str = ""


class Dataset(BaseModel):
    """An indexed, splittable collection of samples."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    images: np.ndarray
    labels: np.ndarray
    provenance: List[str]
    split: Optional[np.ndarray] = None
    skipped: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _aligned(self) -> "Dataset":
        if self.images.ndim != 4 or self.images.shape[-1] != 3 or self.images.dtype != np.uint8:
            raise ShapeError(f"Dataset images must be uint8 (n, H, W, 3), got {self.images.dtype} {self.images.shape}")
        n = self.images.shape[0]
        if self.labels.shape != (n,) or len(self.provenance) != n:
            raise ShapeError(f"Dataset of {n} images has {self.labels.shape[0]} labels, {len(self.provenance)} origins")
        if self.split is not None and self.split.shape != (n,):
            raise ShapeError(f"Split assignment covers {self.split.shape[0]} of {n} samples")
        return self

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def image_size(self) -> int:
        return int(self.images.shape[1])

    @property
    def class_counts(self) -> Dict[str, int]:
        """Per-level tallies (level letter -> count); always sums to ``len(self)``."""
        counts = np.bincount(self.labels, minlength=NUM_CLASSES)
        return {level.value: int(counts[level.label]) for level in LEVELS}

    def samples(self) -> Iterator[Sample]:
        for image, label, origin in zip(self.images, self.labels, self.provenance):
            yield Sample(image=image, label=int(label), provenance=origin)

    def require_split(self) -> np.ndarray:
        if self.split is None:
            raise DatasetError("Dataset has no split assignment; run split first")
        return self.split

    def subset_indices(self, subset: Subset) -> np.ndarray:
        """Sample indices assigned to ``subset``, ascending."""
        return np.flatnonzero(self.require_split() == Subset(subset).code)

    def subset(self, subset: Subset) -> "Dataset":
        """The samples of one split as their own dataset."""
        return self.take(self.subset_indices(subset))

    def take(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=self.images[indices],
            labels=self.labels[indices],
            provenance=[self.provenance[i] for i in indices],
            split=None if self.split is None else self.split[indices],
        )

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], skipped: Sequence[str] = ()) -> "Dataset":
        if not samples:
            raise DatasetError("Cannot build a dataset from zero samples")
        sizes = {s.image.shape for s in samples}
        if len(sizes) != 1:
            raise ShapeError(f"Samples have mixed image shapes: {sorted(sizes)}")
        return cls(
            images=np.stack([s.image for s in samples]).astype(np.uint8, copy=False),
            labels=np.asarray([s.label for s in samples], dtype=np.int64),
            provenance=[s.provenance for s in samples],
            skipped=list(skipped),
        )

    def save(self, path: Path) -> None:
        """Cache the dataset as an uncompressed ``.npz`` bundle."""
        path = Path(path)
        arrays = {
            "images": self.images,
            "labels": self.labels,
            "provenance": np.asarray(self.provenance, dtype=np.str_),
            "skipped": np.asarray(self.skipped, dtype=np.str_),
        }
        if self.split is not None:
            arrays["split"] = self.split
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("wb") as f:
                np.savez(f, **arrays)
        except OSError as e:
            raise DatasetIOError(f"Cannot write dataset cache {path}: {e}") from e
        Log.info("Dataset cached", path=str(path), samples=len(self), split=self.split is not None)

    @classmethod
    def load(cls, path: Path) -> "Dataset":
        path = Path(path)
        try:
            with np.load(path, allow_pickle=False) as bundle:
                return cls(
                    images=bundle["images"],
                    labels=bundle["labels"].astype(np.int64),
                    provenance=[str(p) for p in bundle["provenance"]],
                    split=bundle["split"].astype(np.int8) if "split" in bundle.files else None,
                    skipped=[str(s) for s in bundle["skipped"]] if "skipped" in bundle.files else [],
                )
        except (OSError, ValueError, KeyError) as e:
            raise DatasetIOError(f"Cannot read dataset cache {path}: {e}") from e

    def split_frame(self) -> pd.DataFrame:
        """``index,split`` rows for every sample."""
        codes = self.require_split()
        return pd.DataFrame({"index": np.arange(len(self)), "split": [SUBSETS[c].value for c in codes]})

    def write_split_csv(self, path: Path) -> None:
        buffer = io.StringIO()
        self.split_frame().to_csv(buffer, index=False, lineterminator="\n")
        try:
            Path(path).write_text(buffer.getvalue(), encoding="utf-8")
        except OSError as e:
            raise DatasetIOError(f"Cannot write split assignment {path}: {e}") from e


def normalize(image: np.ndarray, size: Optional[int] = 224) -> np.ndarray:
    """
    Channel-major float32 tensor in ``[0, 1]`` from an 8-bit ``H x W x 3`` image.

    >>> round(float(normalize(np.full((2, 2, 3), 128, dtype=np.uint8), size=2)[0, 0, 0]), 5)
    0.50196
    """
    if image.ndim != 3 or image.shape[-1] != 3 or (size is not None and image.shape[:2] != (size, size)):
        raise ShapeError(f"Expected a {size}x{size}x3 image, got {image.shape}")
    return (np.transpose(image, (2, 0, 1)).astype(np.float32)) / np.float32(255.0)


def normalize_batch(images: np.ndarray) -> np.ndarray:
    """:func:`normalize` over a ``(b, H, W, 3)`` stack, giving ``(b, 3, H, W)``."""
    if images.ndim != 4 or images.shape[-1] != 3:
        raise ShapeError(f"Expected a (b, H, W, 3) stack, got {images.shape}")
    return np.transpose(images, (0, 3, 1, 2)).astype(np.float32) / np.float32(255.0)


class Batch(BaseModel):
    """Normalized images ``[b, 3, H, W]`` and their labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    images: np.ndarray
    labels: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def batches(
    ds: Dataset,
    subset: Optional[Subset],
    batch_size: int,
    shuffle_seed: Optional[int] = None,
    epoch: int = 0,
) -> Iterator[Batch]:
    """
    Mini-batches over one split (or the whole dataset when ``subset`` is ``None``).

    With a ``shuffle_seed`` the visiting order is a permutation keyed by ``(shuffle_seed, epoch)``;
    otherwise index order is kept. The last batch may be short; an empty subset yields nothing.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    indices = np.arange(len(ds)) if subset is None else ds.subset_indices(subset)
    if shuffle_seed is not None and indices.size:
        indices = indices[Rng(derive_seed(shuffle_seed, epoch)).permutation(indices.size)]
    for start in range(0, indices.size, batch_size):
        chunk = indices[start : start + batch_size]
        yield Batch(images=normalize_batch(ds.images[chunk]), labels=ds.labels[chunk], indices=chunk)
