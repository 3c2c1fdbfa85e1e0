"""Common utilities and types for ripeness."""

from .rng import Rng, derive_seed
from .tensor import DTYPE, Tensor, deserialize, serialize, uniform_init, zeros
from .types import LEVELS, NUM_CLASSES, Background, ByConfigId, Mode, OptimizerKind, RipenessLevel, Stage, Style, Subset

__all__ = [
    "Rng",
    "derive_seed",
    "DTYPE",
    "Tensor",
    "deserialize",
    "serialize",
    "uniform_init",
    "zeros",
    "LEVELS",
    "NUM_CLASSES",
    "Background",
    "ByConfigId",
    "Mode",
    "OptimizerKind",
    "RipenessLevel",
    "Stage",
    "Style",
    "Subset",
]
