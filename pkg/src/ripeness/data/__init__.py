"""
Datasets: real-image ingestion, splitting, augmentation and batching.
"""

from .augment import augment_rotations, originals, parse_turns
from .dataset import Batch, Dataset, Sample, batches, normalize, normalize_batch
from .ingest import day_to_level, ingest_real
from .split import split, split_targets

__all__ = [
    "Batch",
    "Dataset",
    "Sample",
    "augment_rotations",
    "batches",
    "day_to_level",
    "ingest_real",
    "normalize",
    "normalize_batch",
    "originals",
    "parse_turns",
    "split",
    "split_targets",
]
