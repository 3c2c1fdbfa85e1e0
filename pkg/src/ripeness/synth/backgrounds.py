"""
Scene backgrounds: four flat colours and four procedural textures.

The dark textures (tiles, marble) are swapped for light variants (ceramic, sandstone) behind the
darkest sublevel so the fruit stays separable from the background.
"""

from typing import Callable, Dict, Optional

import numpy as np
from PIL import Image

from ..common.rng import Rng
from ..common.types import Background

FLAT_COLOURS = {
    Background.ORANGE: (235, 140, 40),
    Background.PURPLE: (120, 60, 150),
    Background.BROWN: (110, 75, 45),
    Background.LIGHT_BLUE: (150, 200, 235),
}

DARK_TEXTURE_SUBSTITUTES = {
    Background.TILES: "ceramic",
    Background.MARBLE: "sandstone",
}


def smooth_noise(size: int, cells: int, rng: Rng) -> np.ndarray:
    """A ``size`` x ``size`` field in ``[0, 1]``, bilinearly upsampled from a ``cells`` x ``cells`` grid."""
    coarse = rng.random((cells, cells), dtype=np.float32)
    field = Image.fromarray(coarse).resize((size, size), Image.Resampling.BILINEAR)
    return np.asarray(field, dtype=np.float64)


def _fill(size: int, colour) -> np.ndarray:
    return np.broadcast_to(np.asarray(colour, dtype=np.float64), (size, size, 3)).copy()


def _grid(size: int, cell: int, line: int, offset_rows: bool = False, cell_w: Optional[int] = None):
    cell_w = cell_w or cell
    y, x = np.mgrid[0:size, 0:size]
    row = y // cell
    shifted = x + np.where(offset_rows & (row % 2 == 1), cell_w // 2, 0)
    col = shifted // cell_w
    mortar = ((y % cell) < line) | ((shifted % cell_w) < line)
    return row, col, mortar


def _tiles(size: int, rng: Rng, tile, grout) -> np.ndarray:
    row, col, grout_mask = _grid(size, max(size // 5, 4), max(size // 112, 1))
    jitter = rng.uniform(0.9, 1.1, (row.max() + 1, col.max() + 1))
    image = _fill(size, tile) * jitter[row, col][..., None]
    image[grout_mask] = grout
    return image


def _platform(size: int, rng: Rng) -> np.ndarray:
    plank = max(size // 6, 2)
    y = np.arange(size)[:, None]
    tones = rng.uniform(0.85, 1.1, size // plank + 1)
    phase = np.arange(size)[None, :] / max(size / 3, 1) + 3 * smooth_noise(size, 6, rng)
    grain = 1.0 + 0.08 * np.sin(2 * np.pi * phase)
    image = _fill(size, (170, 125, 80)) * (tones[y // plank] * grain)[..., None]
    image[(y % plank == 0)[:, 0]] *= 0.6
    return image


def _wall(size: int, rng: Rng) -> np.ndarray:
    brick_h = max(size // 8, 3)
    row, col, mortar = _grid(size, brick_h, max(size // 112, 1), offset_rows=True, cell_w=2 * brick_h)
    jitter = rng.uniform(0.85, 1.1, (row.max() + 1, col.max() + 1))
    image = _fill(size, (150, 70, 50)) * jitter[row, col][..., None]
    image[mortar] = (200, 195, 185)
    return image


def _veined(size: int, rng: Rng, ground, vein) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size] / size
    turbulence = smooth_noise(size, 5, rng)
    veins = np.abs(np.sin(2 * np.pi * (1.5 * x + 0.8 * y + 1.6 * turbulence))) ** 0.25
    weight = (1.0 - veins)[..., None]
    return _fill(size, ground) * (1 - weight) + _fill(size, vein) * weight


_TEXTURES: Dict[str, Callable[[int, Rng], np.ndarray]] = {
    Background.PLATFORM.value: _platform,
    Background.WALL.value: _wall,
    Background.TILES.value: lambda size, rng: _tiles(size, rng, (60, 62, 70), (190, 190, 185)),
    Background.MARBLE.value: lambda size, rng: _veined(size, rng, (45, 45, 50), (200, 200, 205)),
    "ceramic": lambda size, rng: _tiles(size, rng, (225, 215, 195), (160, 155, 150)),
    "sandstone": lambda size, rng: _veined(size, rng, (215, 190, 150), (185, 160, 120)),
}


def texture_key(background: Background, lighten_dark: bool) -> str:
    """
    Name of the texture actually drawn for ``background``.

    >>> texture_key(Background.MARBLE, True), texture_key(Background.MARBLE, False)
    ('sandstone', 'marble')
    """
    if lighten_dark and background in DARK_TEXTURE_SUBSTITUTES:
        return DARK_TEXTURE_SUBSTITUTES[background]
    return background.value


def render_background(background: Background, size: int, rng: Rng, lighten_dark: bool = False) -> np.ndarray:
    """A float64 ``size`` x ``size`` x 3 canvas with values in ``[0, 255]``."""
    background = Background(background)
    if background in FLAT_COLOURS:
        return _fill(size, FLAT_COLOURS[background])
    return np.clip(_TEXTURES[texture_key(background, lighten_dark)](size, rng), 0, 255)
