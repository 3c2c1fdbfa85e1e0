"""
Checkpoint header DTOs.
"""

from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field


class LayerManifestEntry(BaseModel):
    """One layer of the architecture manifest: kind, scalar hyperparameters and parameter shapes."""

    name: str
    kind: str
    hyper: Dict[str, Union[int, float]] = Field(default_factory=dict)
    params: Dict[str, List[int]] = Field(default_factory=dict)


class TrainingMetadata(BaseModel):
    """Provenance of the weights stored in a checkpoint."""

    epochs_seen: int = 0
    optimizer: Optional[str] = None
    seed: Optional[int] = None
    stage: Optional[str] = None
    config_id: Optional[str] = None


class CheckpointHeader(BaseModel):
    """JSON header preceding the tensor payloads of a checkpoint file."""

    fingerprint: str
    input_shape: List[int]
    num_classes: int
    manifest: List[LayerManifestEntry]
    frozen: List[str]
    tensors: List[str]
    metadata: TrainingMetadata = Field(default_factory=TrainingMetadata)
