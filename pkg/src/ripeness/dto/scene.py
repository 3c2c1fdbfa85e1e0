"""
Synthetic scene DTOs.
"""

from typing import Dict

from pydantic import BaseModel, ConfigDict, Field

from ..common.types import Background, RipenessLevel, Style
from ..errors import FormatError
from .common import parse_model

MANIFEST_FIELDS = ("level", "sub", "background", "banana_count", "rail", "position", "seed", "image_size", "style")


class SceneConfig(BaseModel):
    """Full parameterization of one synthetic image."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    level: RipenessLevel
    sub: int = Field(ge=1, le=2)
    background: Background
    banana_count: int = Field(ge=1, le=4)
    rail: int = Field(ge=1, le=3)
    position: int = Field(ge=1, le=30)
    seed: int = Field(ge=0, lt=2**64)
    image_size: int = Field(default=224, ge=16)
    style: Style = Style.CLEAN

    @property
    def sublevel(self) -> str:
        """Sublevel name such as ``"C2"``."""
        return f"{self.level.value}{self.sub}"

    def to_manifest_fields(self) -> str:
        """
        Flatten into ``key=value`` tokens in a fixed order.

        >>> SceneConfig(level="A", sub=1, background="orange", banana_count=2, rail=1, position=3,
        ...             seed=9).to_manifest_fields()
        'level=A sub=1 background=orange banana_count=2 rail=1 position=3 seed=9 image_size=224 style=clean'
        """
        values = self.model_dump(mode="json")
        return " ".join(f"{name}={values[name]}" for name in MANIFEST_FIELDS)

    @classmethod
    def from_manifest_fields(cls, tokens: str) -> "SceneConfig":
        """Inverse of :meth:`to_manifest_fields`."""
        values: Dict[str, str] = {}
        for token in tokens.split():
            if "=" not in token:
                raise FormatError(f"Malformed manifest token {token!r}")
            key, value = token.split("=", 1)
            values[key] = value
        return parse_model(cls, values)
