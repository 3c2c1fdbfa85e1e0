"""
Dense tensor values and their binary encoding.

A tensor is a C-contiguous :class:`numpy.ndarray`; weights and activations are ``float32`` and the
layout of image-like data is batch, channel, height, width. The binary encoding is::

    u32 extent count | u32 extent * count | f32 payload (row-major)

with every field little-endian.
"""

import struct
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..errors import CorruptDataError, InvalidRangeError, InvalidShapeError
from .rng import Rng

Tensor = npt.NDArray[np.float32]
DTYPE = np.float32

_U32 = struct.Struct("<I")


def check_shape(shape: Sequence[int]) -> Tuple[int, ...]:
    """Validate an extent list and return it as a tuple."""
    extents = tuple(int(e) for e in shape)
    if not extents:
        raise InvalidShapeError("Shape must have at least one extent")
    if any(e < 1 for e in extents):
        raise InvalidShapeError(f"Every extent must be >= 1, got {list(extents)}")
    return extents


def zeros(shape: Sequence[int]) -> Tensor:
    """
    A float32 tensor of the given shape filled with exact zeros.

    >>> zeros([2, 2]).tolist()
    [[0.0, 0.0], [0.0, 0.0]]
    """
    return np.zeros(check_shape(shape), dtype=DTYPE)


def uniform_init(shape: Sequence[int], lo: float, hi: float, rng: Rng) -> Tensor:
    """
    Elements drawn i.i.d. uniform in ``[lo, hi)`` from ``rng``.

    Raises:
        InvalidRangeError: If ``lo >= hi``
    """
    extents = check_shape(shape)
    if not lo < hi:
        raise InvalidRangeError(f"Uniform range must satisfy lo < hi, got [{lo}, {hi})")
    unit = rng.random(extents, dtype=np.float64)
    values = (lo + (hi - lo) * unit).astype(DTYPE)
    # float32 rounding may land exactly on hi
    return np.minimum(values, np.nextafter(DTYPE(hi), DTYPE(lo)))


def glorot_uniform(shape: Sequence[int], fan_in: int, fan_out: int, rng: Rng) -> Tensor:
    """Glorot/Xavier uniform initialization with limit ``sqrt(6 / (fan_in + fan_out))``."""
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return uniform_init(shape, -limit, limit, rng)


def serialize(t: np.ndarray) -> bytes:
    """
    Encode a tensor as a shape header followed by its float32 payload.

    >>> serialize(np.ones([1], dtype=np.float32))[-4:].hex()
    '0000803f'
    """
    extents = check_shape(t.shape)
    header = _U32.pack(len(extents)) + struct.pack(f"<{len(extents)}I", *extents)
    return header + np.ascontiguousarray(t, dtype="<f4").tobytes()


def encoded_size(b: bytes, offset: int = 0) -> int:
    """Number of bytes occupied by the tensor encoded at ``b[offset:]``."""
    if len(b) - offset < _U32.size:
        raise CorruptDataError("Truncated tensor header")
    (count,) = _U32.unpack_from(b, offset)
    header_size = _U32.size * (1 + count)
    if count == 0 or len(b) - offset < header_size:
        raise CorruptDataError(f"Invalid tensor header with {count} extents")
    extents = struct.unpack_from(f"<{count}I", b, offset + _U32.size)
    if any(e == 0 for e in extents):
        raise CorruptDataError(f"Tensor header holds a zero extent: {list(extents)}")
    return header_size + 4 * int(np.prod(extents, dtype=np.int64))


def deserialize(b: bytes) -> Tensor:
    """
    Decode bytes produced by :func:`serialize`.

    Raises:
        CorruptDataError: If the header is malformed or the payload length does not match it
    """
    size = encoded_size(b)
    if size != len(b):
        raise CorruptDataError(f"Tensor payload length mismatch: expected {size} bytes, got {len(b)}")
    (count,) = _U32.unpack_from(b, 0)
    extents = struct.unpack_from(f"<{count}I", b, _U32.size)
    payload = np.frombuffer(b, dtype="<f4", offset=_U32.size * (1 + count))
    return payload.astype(DTYPE).reshape(extents)


def payload_nbytes(t: np.ndarray) -> int:
    """Bytes of the float32 payload of ``t`` (header excluded)."""
    return 4 * int(t.size)
