"""
Procedural 2-D rendering of banana scenes.

A banana is the crescent between two equal circles: inside circle ``A`` (centre ``(0, 0)``) and
outside circle ``B`` (centre ``(0, d)``). The lune is thickest on the axis and tapers to points
where the circles intersect. Bananas are drawn in a group frame; the camera pose maps the group
into the image by rotation, scale and translation. Pixels are evaluated by inverse mapping, so
rendering is exact and resolution independent.
"""

import math
from typing import List, Tuple

import numpy as np

from ..common.rng import Rng
from ..common.types import RipenessLevel, Style
from ..data.dataset import Sample
from ..dto.scene import SceneConfig
from .backgrounds import render_background
from .sublevels import SPOT_DARKENING, RipenessSublevel, sublevel

# Fraction of the image side covered by one banana radius at unit scale
UNIT_FRACTION = 0.26
# Luminance-only multiplicative tonal noise
NOISE_RANGE = (0.85, 1.1)
# real_like perturbations; LIGHTING_GAIN scales all three channels alike
LIGHTING_GAIN = (0.7, 1.3)
WHITE_BALANCE = (0.94, 1.06)
RAMP_JITTER = (0.94, 1.06)
SENSOR_NOISE = 14.0


class Pose:
    """Affine view transform derived from a camera rail and position."""

    # pylint: disable=too-few-public-methods

    def __init__(self, rail: int, position: int, size: int):
        self.rotation = math.radians(-40.0 + 80.0 * (position - 1) / 29.0)
        self.scale = 1.1 - 0.25 * (rail - 1)
        phase = 2 * math.pi * position / 30.0
        self.translation = (0.12 * size * math.sin(phase), 0.08 * size * math.cos(phase + rail))


def pose_of(config: SceneConfig) -> Pose:
    """
    Pose of a scene: rotation sweeps [-40, 40] degrees along a rail, scale shrinks from 1.1 (rail 1)
    to 0.6 (rail 3).

    >>> p = pose_of(SceneConfig(level="A", sub=1, background="orange", banana_count=1, rail=3, position=30, seed=0))
    >>> round(math.degrees(p.rotation), 6), round(p.scale, 6)
    (40.0, 0.6)
    """
    return Pose(config.rail, config.position, config.image_size)


def _rotate(x: np.ndarray, y: np.ndarray, angle: float) -> Tuple[np.ndarray, np.ndarray]:
    c, s = math.cos(angle), math.sin(angle)
    return c * x - s * y, s * x + c * y


def _crescent(u: np.ndarray, v: np.ndarray, offset: float) -> Tuple[np.ndarray, np.ndarray]:
    """Mask and ridge shading of the unit-radius crescent with circle offset ``offset``."""
    inside_a = 1.0 - np.hypot(u, v)
    outside_b = np.hypot(u, v - offset) - 1.0
    mask = (inside_a > 0) & (outside_b > 0)
    across = np.where(mask, outside_b / np.maximum(inside_a + outside_b, 1e-9), 0.0)
    return mask, np.sin(np.pi * across)


def _group_layout(count: int, rng: Rng) -> List[Tuple[float, float, float, float, float]]:
    """Per banana ``(dx, dy, angle, radius, offset)`` in group units; no two bananas coincide."""
    layout = []
    for k in range(count):
        dy = 0.32 * (k - (count - 1) / 2) + float(rng.uniform(-0.04, 0.04))
        dx = float(rng.uniform(-0.12, 0.12))
        angle = math.radians(float(rng.uniform(-12, 12)))
        radius = float(rng.uniform(0.9, 1.1))
        offset = float(rng.uniform(0.35, 0.5))
        layout.append((dx, dy, angle, radius, offset))
    return layout


def banana_layers(config: SceneConfig, rng: Rng) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rasterize the banana group of ``config``.

    Returns:
        ``(mask, shade)``: the union mask and, per pixel, the ridge shading of the topmost banana
    """
    size = config.image_size
    pose = pose_of(config)
    unit = UNIT_FRACTION * size * pose.scale
    centre = (size - 1) / 2.0
    py, px = np.mgrid[0:size, 0:size].astype(np.float64)
    gx, gy = _rotate(px - centre - pose.translation[0], py - centre - pose.translation[1], -pose.rotation)
    gx, gy = gx / unit, gy / unit

    mask = np.zeros((size, size), dtype=bool)
    shade = np.zeros((size, size), dtype=np.float64)
    for dx, dy, angle, radius, offset in _group_layout(config.banana_count, rng):
        u, v = _rotate(gx - dx, gy - dy, -angle)
        # the lune spans -1 <= v <= offset / 2 in its own frame; centre that span on the banana
        banana, ridge = _crescent(u / radius, v / radius - (1.0 - offset / 2.0) / 2.0, offset)
        mask |= banana
        shade = np.where(banana, ridge, shade)
    return mask, shade


def _spots(mask: np.ndarray, density: float, rng: Rng) -> np.ndarray:
    """Elliptical spots inside ``mask`` added until they cover ``density`` of it."""
    spots = np.zeros_like(mask)
    area = int(mask.sum())
    if density <= 0 or area == 0:
        return spots
    size = mask.shape[0]
    py, px = np.mgrid[0:size, 0:size]
    target = math.ceil(density * area)
    while int(spots.sum()) < target:
        free = np.flatnonzero(mask & ~spots)
        cy, cx = divmod(int(free[int(rng.integers(0, free.size))]), size)
        ry, rx = (float(r) * size for r in rng.uniform(0.008, 0.025, 2))
        angle = float(rng.uniform(0, math.pi))
        u, v = _rotate(px - cx, py - cy, -angle)
        spots |= mask & ((u / max(rx, 0.5)) ** 2 + (v / max(ry, 0.5)) ** 2 <= 1.0)
    return spots


def _real_like(image: np.ndarray, rng: Rng) -> np.ndarray:
    """Global lighting gain and offset, a slight white-balance cast and Gaussian sensor noise."""
    gain = rng.uniform(*LIGHTING_GAIN) * rng.uniform(*WHITE_BALANCE, 3)
    offset = rng.uniform(-30, 30)
    return image * gain + offset + rng.normal(0.0, SENSOR_NOISE, image.shape)


def _ramp_base(level: RipenessSublevel, style: Style, rng: Rng) -> np.ndarray:
    base = np.asarray(level.base, dtype=np.float64)
    if style is Style.REAL_LIKE:
        base = base * rng.uniform(*RAMP_JITTER, 3)
    return base


def render_banana(config: SceneConfig) -> Sample:
    """
    Render one scene. The image is a pure function of ``config``.

    The background is drawn first, then the banana group (ramp colour times ridge shading times
    luminance noise), then spots for C and D sublevels. ``real_like`` scenes additionally get colour
    ramp jitter, a lighting shift and Gaussian sensor noise.
    """
    rng = Rng(config.seed)
    level = sublevel(config.level, config.sub)
    lighten = level.name == "D2"
    canvas = render_background(config.background, config.image_size, rng.spawn(1), lighten_dark=lighten)

    mask, shade = banana_layers(config, rng.spawn(2))
    base = _ramp_base(level, config.style, rng.spawn(3))
    tone = (0.75 + 0.25 * shade) * rng.spawn(4).uniform(*NOISE_RANGE, mask.shape)
    spots = _spots(mask, level.spot_density, rng.spawn(5))
    tone = np.where(spots, tone * SPOT_DARKENING, tone)
    canvas = np.where(mask[..., None], base * tone[..., None], canvas)

    if config.style is Style.REAL_LIKE:
        canvas = _real_like(canvas, rng.spawn(6))
    image = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
    return Sample(
        image=image,
        label=RipenessLevel(config.level).label,
        provenance=f"synthetic:{config.to_manifest_fields()}",
    )
