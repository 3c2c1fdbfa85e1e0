"""
Tests for tensors, their binary encoding and the deterministic random streams.
"""

import numpy as np
import pytest

from ripeness.common.rng import Rng, derive_seed
from ripeness.common.tensor import (
    check_shape,
    deserialize,
    encoded_size,
    glorot_uniform,
    serialize,
    uniform_init,
    zeros,
)
from ripeness.errors import CorruptDataError, InvalidRangeError, InvalidShapeError


class TestShapes:
    def test_zeros_are_exact(self):
        t = zeros([2, 3, 4])
        assert t.shape == (2, 3, 4)
        assert t.dtype == np.float32
        assert not t.any()

    @pytest.mark.parametrize("shape", [[], [2, 0], [3, -1]])
    def test_invalid_shapes(self, shape):
        with pytest.raises(InvalidShapeError):
            check_shape(shape)


class TestUniformInit:
    def test_values_stay_in_range(self):
        t = uniform_init([64, 64], -0.5, 0.5, Rng(3))
        assert t.min() >= -0.5
        assert t.max() < 0.5

    def test_same_seed_same_values(self):
        a = uniform_init([10], 0.0, 1.0, Rng(11))
        b = uniform_init([10], 0.0, 1.0, Rng(11))
        assert np.array_equal(a, b)

    def test_reversed_range(self):
        with pytest.raises(InvalidRangeError):
            uniform_init([2], 1.0, 1.0, Rng(0))

    def test_glorot_limit(self):
        t = glorot_uniform([50, 100], 100, 50, Rng(1))
        assert np.abs(t).max() <= np.sqrt(6.0 / 150)


class TestEncoding:
    def test_round_trip_is_bit_exact(self):
        t = uniform_init([2, 3, 5], -1.0, 1.0, Rng(5))
        encoded = serialize(t)
        assert encoded_size(encoded) == len(encoded)
        assert np.array_equal(deserialize(encoded), t)

    def test_header_layout(self):
        encoded = serialize(zeros([2, 3]))
        assert encoded[:4] == (2).to_bytes(4, "little")
        assert len(encoded) == 4 + 8 + 4 * 6

    def test_truncated_payload(self):
        encoded = serialize(zeros([4, 4]))
        with pytest.raises(CorruptDataError):
            deserialize(encoded[:-1])

    def test_trailing_bytes(self):
        with pytest.raises(CorruptDataError):
            deserialize(serialize(zeros([2])) + b"\x00")

    def test_zero_extent_header(self):
        header = (1).to_bytes(4, "little") + (0).to_bytes(4, "little")
        with pytest.raises(CorruptDataError):
            deserialize(header)


class TestRng:
    def test_children_ignore_parent_consumption(self):
        parent = Rng(42)
        before = parent.spawn(1, 2).random(4)
        parent.random(1000)
        after = parent.spawn(1, 2).random(4)
        assert np.array_equal(before, after)

    def test_children_are_distinct(self):
        parent = Rng(42)
        assert not np.array_equal(parent.spawn(1).random(8), parent.spawn(2).random(8))

    def test_seed_is_64_bit(self):
        assert Rng(-1).seed == 2**64 - 1
        assert 0 <= derive_seed(2**70, 3) < 2**64

    def test_permutation_covers_range(self):
        assert sorted(Rng(9).permutation(17).tolist()) == list(range(17))
