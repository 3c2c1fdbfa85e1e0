"""
Deterministic stratified 60/20/20 train/test/validation assignment.

Global targets are ``floor(0.6 n)`` train samples and the remainder halved, the odd sample going
to test. Each class receives the integer part of its exact share of every target; the leftover
seats are handed out one at a time by largest fractional share, so every split is within one
sample of its exact fraction per class and the global totals are met exactly.
"""

import math
from typing import Dict, List, Tuple

import numpy as np

from ..common.rng import Rng, derive_seed
from ..common.types import LEVELS, Subset
from ..errors import DatasetError
from ..logger import Log
from .dataset import SUBSETS, Dataset

FRACTIONS = (0.6, 0.2, 0.2)
MIN_STRATUM = 5
# Stratum key of classes too small to stratify
POOLED = len(LEVELS)


def split_targets(n: int) -> Tuple[int, int, int]:
    """
    Global ``(train, test, validation)`` sizes.

    >>> split_targets(3495), split_targets(10), split_targets(7)
    ((2097, 699, 699), (6, 2, 2), (4, 2, 1))
    """
    train = math.floor(FRACTIONS[0] * n + 1e-9)
    rest = n - train
    return train, rest - rest // 2, rest // 2


def _strata(labels: np.ndarray) -> Dict[int, np.ndarray]:
    strata: Dict[int, np.ndarray] = {}
    pooled: List[np.ndarray] = []
    for level in LEVELS:
        members = np.flatnonzero(labels == level.label)
        if members.size == 0:
            continue
        if members.size < MIN_STRATUM:
            Log.warning("Class too small to stratify; pooling it", level=level.value, samples=int(members.size))
            pooled.append(members)
        else:
            strata[level.label] = members
    if pooled:
        strata[POOLED] = np.sort(np.concatenate(pooled))
    return strata


def allocate(sizes: Dict[int, int], targets: Tuple[int, int, int]) -> Dict[int, List[int]]:
    """
    Per-stratum split sizes whose rows sum to the stratum sizes and whose columns sum to ``targets``.

    >>> allocate({0: 5, 1: 5}, (6, 2, 2))
    {0: [3, 1, 1], 1: [3, 1, 1]}
    """
    n = sum(sizes.values())
    quotas = {k: [size * t / n for t in targets] for k, size in sizes.items()}
    table = {k: [math.floor(q + 1e-9) for q in row] for k, row in quotas.items()}
    row_need = {k: sizes[k] - sum(table[k]) for k in sizes}
    col_need = [t - sum(table[k][j] for k in sizes) for j, t in enumerate(targets)]

    # fractional parts, largest first; ties by stratum then split order
    order = sorted(
        ((quotas[k][j] - table[k][j], k, j) for k in sizes for j in range(len(targets))),
        key=lambda item: (-item[0], item[1], item[2]),
    )
    for _, k, j in order:
        if row_need[k] > 0 and col_need[j] > 0:
            table[k][j] += 1
            row_need[k] -= 1
            col_need[j] -= 1
    # rounding can strand a seat; place it anywhere both sides still need one
    for k in sizes:
        for j in range(len(targets)):
            while row_need[k] > 0 and col_need[j] > 0:
                table[k][j] += 1
                row_need[k] -= 1
                col_need[j] -= 1
    return table


def split(ds: Dataset, seed: int) -> Dataset:
    """
    Assign every sample to train, test or validation.

    Within a class the samples are permuted with a stream keyed by ``(seed, class)`` and dealt out
    in train, test, validation order. Classes with fewer than five samples are pooled and split
    together with a warning.

    Raises:
        DatasetError: If the dataset has fewer than five samples
    """
    n = len(ds)
    if n < MIN_STRATUM:
        raise DatasetError(f"Cannot split {n} samples; at least {MIN_STRATUM} are required")
    strata = _strata(ds.labels)
    table = allocate({k: members.size for k, members in strata.items()}, split_targets(n))

    codes = np.full(n, -1, dtype=np.int8)
    for key, members in strata.items():
        shuffled = members[Rng(derive_seed(seed, key)).permutation(members.size)]
        start = 0
        for subset, count in zip(SUBSETS, table[key]):
            codes[shuffled[start : start + count]] = subset.code
            start += count

    result = ds.model_copy(update={"split": codes})
    Log.info(
        "Split assigned",
        seed=seed,
        train=int((codes == Subset.TRAIN.code).sum()),
        test=int((codes == Subset.TEST.code).sum()),
        validation=int((codes == Subset.VALIDATION.code).sum()),
    )
    return result
