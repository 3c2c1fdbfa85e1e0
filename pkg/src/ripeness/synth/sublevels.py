"""
The eight ripeness sublevels used by the synthetic generator.

Base colours move from green (A1, hue ~108 degrees) to brown (D2, hue ~30 degrees). Spots only
appear on C and D sublevels; they darken the ramp multiplicatively, so a spotted pixel keeps the
hue of its sublevel.
"""

from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..common.types import RipenessLevel

RGB = Tuple[int, int, int]

# Multiplicative darkening of a spot relative to the ramp it sits on
SPOT_DARKENING = 0.35


class RipenessSublevel(BaseModel):
    """One appearance class within a ripeness level."""

    model_config = ConfigDict(frozen=True)

    level: RipenessLevel
    sub: int = Field(ge=1, le=2)
    base: RGB
    spot_density: float = Field(ge=0, lt=1)

    @property
    def name(self) -> str:
        return f"{self.level.value}{self.sub}"

    def ramp(self, shade: float) -> Tuple[float, float, float]:
        """Ramp colour at ``shade`` in ``[0, 1]`` (0 at the crescent edges, 1 along its ridge)."""
        factor = 0.75 + 0.25 * shade
        return tuple(channel * factor for channel in self.base)


SUBLEVELS: Dict[str, RipenessSublevel] = {
    s.name: s
    for s in (
        RipenessSublevel(level=RipenessLevel.A, sub=1, base=(60, 140, 40), spot_density=0.0),
        RipenessSublevel(level=RipenessLevel.A, sub=2, base=(100, 160, 45), spot_density=0.0),
        RipenessSublevel(level=RipenessLevel.B, sub=1, base=(160, 185, 50), spot_density=0.0),
        RipenessSublevel(level=RipenessLevel.B, sub=2, base=(200, 200, 60), spot_density=0.0),
        RipenessSublevel(level=RipenessLevel.C, sub=1, base=(225, 200, 60), spot_density=0.04),
        RipenessSublevel(level=RipenessLevel.C, sub=2, base=(230, 190, 55), spot_density=0.08),
        RipenessSublevel(level=RipenessLevel.D, sub=1, base=(190, 140, 50), spot_density=0.18),
        RipenessSublevel(level=RipenessLevel.D, sub=2, base=(140, 90, 40), spot_density=0.30),
    )
}


def sublevel(level: RipenessLevel, sub: int) -> RipenessSublevel:
    """
    Look up a sublevel.

    >>> sublevel(RipenessLevel.D, 2).spot_density
    0.3
    """
    return SUBLEVELS[f"{RipenessLevel(level).value}{sub}"]
