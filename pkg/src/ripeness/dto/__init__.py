"""Data Transfer Objects for ripeness runs, scenes, checkpoints and reports."""

from .checkpoint import *
from .common import *
from .configs import *
from .reports import *
from .scene import *

__all__ = [
    # Common
    "Identifier",
    "parse_model",
    # Configs
    "TrainConfig",
    "GridSpec",
    # Scene
    "SceneConfig",
    # Checkpoint
    "LayerManifestEntry",
    "TrainingMetadata",
    "CheckpointHeader",
    # Reports
    "EpochRecord",
    "RunLog",
    "EvalReport",
    "GridCellResult",
    "GridReport",
    "DomainResult",
    "TransferComparison",
]
