"""
8-bit RGB image codecs (PNG and binary PPM) and bilinear resizing, backed by Pillow.
"""

from pathlib import Path
from typing import Literal

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import DatasetIOError, ShapeError

ImageFormat = Literal["png", "ppm"]


def _as_rgb(image: np.ndarray) -> np.ndarray:
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"Expected an HxWx3 uint8 image, got {image.dtype} {image.shape}")
    return np.ascontiguousarray(image)


def write_image(path: Path, image: np.ndarray, fmt: ImageFormat = "png") -> None:
    """Write an HxWx3 uint8 buffer as PNG or binary (P6) PPM."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(_as_rgb(image)).save(path, format="PNG" if fmt == "png" else "PPM")
    except OSError as e:
        raise DatasetIOError(f"Cannot write image {path}: {e}") from e


def read_image(path: Path) -> np.ndarray:
    """
    Decode any Pillow-readable image into an HxWx3 uint8 buffer.

    Raises:
        DatasetIOError: If the file is missing or cannot be decoded
    """
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise DatasetIOError(f"Cannot decode image {path}: {e}") from e


def resize_bilinear(image: np.ndarray, size: int) -> np.ndarray:
    """Resize to ``size`` x ``size`` with bilinear interpolation (no aspect-ratio padding)."""
    image = _as_rgb(image)
    if image.shape[0] == size and image.shape[1] == size:
        return image
    resized = Image.fromarray(image).resize((size, size), Image.Resampling.BILINEAR)
    return np.asarray(resized, dtype=np.uint8).copy()
