"""
Run and grid configuration DTOs.
"""

from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..common.configfile import parse_blocks, parse_single, read_text
from ..common.types import OptimizerKind, Stage
from ..common.utils import inject_ids_into_cells
from ..errors import ConfigError
from .common import Identifier, parse_model


class TrainConfig(BaseModel):
    """
    Inputs of one training run (one row of a hyperparameter grid).

    The geometry fields default to the full-size network; desk-scale runs shrink them.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    config_id: Identifier = "run"
    stage: Stage = Stage.CNN1
    optimizer: OptimizerKind = OptimizerKind.ADAM
    lr: float = Field(default=0.001, gt=0)
    eps: float = Field(default=1e-8, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    dropout_layers: int = Field(default=1, ge=1, le=2)
    dropout_rate: float = Field(default=0.2, ge=0, lt=1)
    batch_size: int = Field(default=50, ge=1)
    epochs: int = Field(default=10, ge=0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    image_size: int = Field(default=224, ge=8)
    widths: Tuple[int, int, int] = (32, 64, 128)
    hidden_units: int = Field(default=50, ge=1)

    @field_validator("widths", mode="before")
    @classmethod
    def _split_widths(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    @field_validator("widths")
    @classmethod
    def _positive_widths(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(w < 1 for w in value):
            raise ValueError("every width must be >= 1")
        return value

    @field_validator("image_size")
    @classmethod
    def _poolable(cls, value: int) -> int:
        if value % 8:
            raise ValueError("image_size must be divisible by 8 (three 2x2 poolings)")
        return value

    def with_overrides(self, **changes: Any) -> "TrainConfig":
        """A validated copy with some fields replaced."""
        return parse_model(TrainConfig, {**self.model_dump(), **changes})

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "TrainConfig":
        """Validate raw ``key = value`` pairs."""
        return parse_model(cls, values)

    @classmethod
    def from_file(cls, path: Path) -> "TrainConfig":
        """Load a single-block configuration file."""
        return cls.from_mapping(parse_single(read_text(path)))


class GridSpec(BaseModel):
    """A non-empty list of training configurations with distinct identifiers."""

    model_config = ConfigDict(frozen=True)

    cells: List[TrainConfig] = Field(min_length=1)

    @model_validator(mode="after")
    def _distinct_ids(self) -> "GridSpec":
        seen: Dict[str, int] = {}
        for cell in self.cells:
            seen[cell.config_id] = seen.get(cell.config_id, 0) + 1
        duplicates = sorted(k for k, n in seen.items() if n > 1)
        if duplicates:
            raise ValueError(f"duplicate config_id values: {', '.join(duplicates)}")
        return self

    @classmethod
    def from_text(cls, text: str) -> "GridSpec":
        """
        Parse a grid file: one ``key = value`` block per cell, blank-line separated.

        Cells without a ``stage`` run as transfer (``cnn2``) cells; cells without a
        ``config_id`` get a positional one.
        """
        blocks = inject_ids_into_cells(parse_blocks(text))
        if not blocks:
            raise ConfigError("Grid file holds no cells")
        cells = [TrainConfig.from_mapping({"stage": Stage.CNN2.value, **block}) for block in blocks]
        return parse_model(cls, {"cells": cells})

    @classmethod
    def from_file(cls, path: Path) -> "GridSpec":
        """Load a grid file from disk."""
        return cls.from_text(read_text(path))
