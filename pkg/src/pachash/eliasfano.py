"""Elias-Fano coded monotone sequence with predecessor and locate queries.

Values in 1..universe are split into ``lower_bits_width`` low bits stored in a
packed array and high bits stored in unary in a bit vector with select
support.  ``locate`` maps a bin to the near-minimal block range holding it.
"""

from __future__ import annotations

import struct
from typing import NamedTuple, Optional

from .bitvector import BitVectorWithSelect


class BlockRange(NamedTuple):
    first: int
    last: int  # inclusive

    def __len__(self) -> int:
        return self.last - self.first + 1


class CorruptIndexError(Exception):
    pass


class EliasFanoIndex:
    def __init__(self, count: int, universe: int, lower_bits_width: int,
                 lows: list[int], upper: BitVectorWithSelect):
        self.count = count
        self.universe = universe
        self.lower_bits_width = lower_bits_width
        self._lows = lows
        self.upper = upper
        # cluster-scan instrumentation for the constant-expected-time property
        self.predecessor_calls = 0
        self.predecessor_scanned = 0

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, values, universe: int) -> "EliasFanoIndex":
        """Encode a monotone non-decreasing sequence of values in 1..universe."""
        values = list(values)
        m = len(values)
        if m < 1:
            raise ValueError("sequence must be nonempty")
        if universe < 1:
            raise ValueError("universe must be >= 1")
        l = _lower_width(universe, m)
        max_u = (universe - 1) >> l
        upper = BitVectorWithSelect(m + max_u + 2)
        lows = []
        prev = 1
        mask = (1 << l) - 1
        for i, value in enumerate(values, start=1):
            if not 1 <= value <= universe:
                raise ValueError(f"value {value} outside 1..{universe}")
            if value < prev:
                raise ValueError("sequence is not monotone non-decreasing")
            prev = value
            v = value - 1
            lows.append(v & mask)
            upper.set(i + (v >> l))
        upper.build()
        return cls(m, universe, l, lows, upper)

    # -- size accounting ---------------------------------------------------

    @property
    def size_bits(self) -> int:
        """Coded size excluding the select directories."""
        return self.upper.length + self.count * self.lower_bits_width

    @property
    def select_directory_bits(self) -> int:
        return self.upper.directory_bits()

    # -- queries -----------------------------------------------------------

    def get(self, i: int) -> int:
        """Decode the i-th stored value (1-based)."""
        if not 1 <= i <= self.count:
            raise IndexError(f"position {i} out of range 1..{self.count}")
        u = self.upper.select1(i) - i
        return ((u << self.lower_bits_width) | self._lows[i - 1]) + 1

    def rank_leq(self, b: int) -> int:
        """Number of stored values <= b.

        Uses select0 to jump to the cluster of entries sharing b's high bits,
        then scans that cluster's low bits (sorted, so the scan stops early).
        """
        if b <= 0:
            return 0
        if b >= self.universe:
            return self.count
        self.predecessor_calls += 1
        l = self.lower_bits_width
        v = b - 1
        u = v >> l
        target_low = v & ((1 << l) - 1)
        pos = self.upper.select0(u + 1)
        count = pos - u  # entries with high bits < u
        p = pos + 1
        while p < self.upper.length and self.upper.get(p):
            self.predecessor_scanned += 1
            if self._lows[count] > target_low:
                break
            count += 1
            p += 1
        return count

    def predecessor(self, b: int) -> Optional[tuple[int, int]]:
        """Largest index i with value_i <= b, returned as (i, value_i)."""
        if not 1 <= b <= self.universe:
            raise ValueError(f"bin {b} outside 1..{self.universe}")
        i = self.rank_leq(b)
        if i == 0:
            return None
        return i, self.get(i)

    def locate(self, b: int) -> BlockRange:
        """Near-minimal inclusive block range whose payload can hold bin b.

        With n_b = #{i : value_i <= b}, the bin's content starts in block
        n_{b-1} (its start lies in the last block opening with an earlier bin,
        or exactly on that block's boundary) and ends in block n_b (the last
        block whose first bin is still <= b).
        """
        if not 1 <= b <= self.universe:
            raise ValueError(f"bin {b} outside 1..{self.universe}")
        first = max(self.rank_leq(b - 1), 1)
        last = max(self.rank_leq(b), first)
        return BlockRange(first, last)

    # -- serialization -----------------------------------------------------

    def to_bytes(self) -> bytes:
        head = struct.pack("<QQB", self.count, self.universe, self.lower_bits_width)
        return head + _pack_lows(self._lows, self.lower_bits_width) + self.upper.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EliasFanoIndex":
        if len(data) < 17:
            raise CorruptIndexError("index section truncated")
        m, universe, l = struct.unpack_from("<QQB", data, 0)
        if m < 1 or universe < 1 or l != _lower_width(universe, m):
            raise CorruptIndexError("inconsistent index header")
        off = 17
        lows_bytes = (m * l + 7) // 8
        lows = _unpack_lows(data[off : off + lows_bytes], m, l)
        off += lows_bytes
        max_u = (universe - 1) >> l
        upper_len = m + max_u + 2
        upper_bytes = 8 * ((upper_len + 63) // 64)
        if len(data) < off + upper_bytes:
            raise CorruptIndexError("index section truncated")
        upper = BitVectorWithSelect.from_bytes(upper_len, data[off : off + upper_bytes])
        if upper.one_count != m:
            raise CorruptIndexError("upper bit vector does not match count")
        return cls(m, universe, l, lows, upper)

    def serialized_length(self) -> int:
        l = self.lower_bits_width
        max_u = (self.universe - 1) >> l
        upper_len = self.count + max_u + 2
        return 17 + (self.count * l + 7) // 8 + 8 * ((upper_len + 63) // 64)

    def values(self) -> list[int]:
        return [self.get(i) for i in range(1, self.count + 1)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EliasFanoIndex)
            and self.count == other.count
            and self.universe == other.universe
            and self._lows == other._lows
            and self.upper.words == other.upper.words
        )


def _lower_width(universe: int, count: int) -> int:
    if universe <= count:
        return 0
    return (universe // count).bit_length() - 1


def _pack_lows(lows: list[int], width: int) -> bytes:
    acc = 0
    for i, lo in enumerate(lows):
        acc |= lo << (i * width)
    return acc.to_bytes((len(lows) * width + 7) // 8, "little")


def _unpack_lows(data: bytes, count: int, width: int) -> list[int]:
    acc = int.from_bytes(data, "little")
    mask = (1 << width) - 1
    return [(acc >> (i * width)) & mask for i in range(count)]
