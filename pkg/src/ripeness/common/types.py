"""
Common types used throughout the ripeness library.

This module provides the label, subset and mode enumerations and the ``ByConfigId`` mapping used
for per-cell grid results.
"""

from enum import Enum
from typing import Dict, TypeVar

from pydantic import RootModel

from ..errors import LabelError


class RipenessLevel(str, Enum):
    """Maturity level of a banana, encoded 0..3 for training."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def label(self) -> int:
        """Integer class label (0: level A, 1: level B, 2: level C, 3: level D)."""
        return LEVELS.index(self)

    @classmethod
    def from_label(cls, label: int) -> "RipenessLevel":
        """
        Inverse of :attr:`label`.

        >>> RipenessLevel.from_label(2).value
        'C'
        """
        if not 0 <= int(label) < len(LEVELS):
            raise LabelError(f"Label {label} is outside 0..{len(LEVELS) - 1}")
        return LEVELS[int(label)]


LEVELS = list(RipenessLevel)
NUM_CLASSES = len(LEVELS)


class Subset(str, Enum):
    """Named partition of a dataset."""

    TRAIN = "train"
    TEST = "test"
    VALIDATION = "validation"

    @property
    def code(self) -> int:
        """Small integer code used in dataset caches."""
        return list(Subset).index(self)


class Mode(str, Enum):
    """Forward-pass mode; only ``train`` activates dropout."""

    TRAIN = "train"
    EVAL = "eval"


class Stage(str, Enum):
    """Training stage of a run."""

    CNN1 = "cnn1"
    CNN2 = "cnn2"
    SCRATCH_REAL = "scratch-real"


class OptimizerKind(str, Enum):
    """Supported parameter-update rules."""

    SGD = "sgd"
    ADAGRAD = "adagrad"
    ADAM = "adam"
    NADAM = "nadam"


class Style(str, Enum):
    """Rendering style of a synthetic scene."""

    CLEAN = "clean"
    REAL_LIKE = "real_like"


class Background(str, Enum):
    """The eight scene backgrounds: four flat colours followed by four procedural textures."""

    ORANGE = "orange"
    PURPLE = "purple"
    BROWN = "brown"
    LIGHT_BLUE = "light_blue"
    PLATFORM = "platform"
    WALL = "wall"
    TILES = "tiles"
    MARBLE = "marble"

    @property
    def is_texture(self) -> bool:
        """Whether the background is procedurally textured rather than flat."""
        return list(Background).index(self) >= 4


# Type variable for ByConfigId
T = TypeVar("T")


class ByConfigId(RootModel[Dict[str, T]]):
    """
    Map type indexed by grid-cell identifiers.

    Used to store results associated with specific cells of a hyperparameter grid.
    """

    def __getitem__(self, key: str) -> T:
        return self.root[key]

    def __setitem__(self, key: str, value: T) -> None:
        self.root[key] = value

    def __len__(self) -> int:
        return len(self.root)

    def keys(self):
        """Return the keys of the underlying dictionary."""
        return self.root.keys()

    def values(self):
        """Return the values of the underlying dictionary."""
        return self.root.values()

    def items(self):
        """Return the items of the underlying dictionary."""
        return self.root.items()

    def get(self, key: str, default: T = None) -> T:
        """Get value by key with default fallback."""
        return self.root.get(key, default)

    def __contains__(self, key: str) -> bool:
        """Check if key exists in the mapping."""
        return key in self.root
