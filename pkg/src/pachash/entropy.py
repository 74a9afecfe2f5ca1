"""Entropy-coded index: a chunked, Huffman-compressed sparse bit vector.

Stores the same information as the Elias-Fano index — the per-block first-bin
sequence p — as the sparse bit vector with a 1 at position ``i + p_i - 1``
over ``(a+1)·m + 1`` positions (the EF upper-bit construction with zero low
bits).  The vector is serialized as the run of zero-gaps between consecutive
ones, byte-coded (gaps >= 255 escape to a varint) and compressed with a
single static canonical Huffman table.  A directory entry every
``range_size`` zeros records the decoder state (bit offset, ones and zeros
consumed), so a query decodes at most one chunk's worth of symbols.
"""

from __future__ import annotations

import heapq
import struct
from typing import Optional

from .eliasfano import BlockRange, CorruptIndexError

VERSION = 1
CODEC_HUFFMAN_RLE = 1
DEFAULT_RANGE_SIZE = 1024

_ESCAPE = 255


class EntropyCodedIndex:
    """Immutable after build; queries use caller-local decoder state only."""

    def __init__(self, count: int, num_bins: int, range_size: int,
                 code_lengths: list[int], directory: list[tuple[int, int, int]],
                 code: bytes, code_bits: int):
        self.count = count  # m
        self.num_bins = num_bins  # a * m
        self.range_size = range_size
        self._code_lengths = code_lengths
        self._directory = directory  # (bit_offset, ones_consumed, zeros_consumed)
        self._code = code
        self._code_bits = code_bits
        self._decode_table = _CanonicalCode(code_lengths)

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, values, num_bins: int,
              range_size: int = DEFAULT_RANGE_SIZE) -> "EntropyCodedIndex":
        values = list(values)
        m = len(values)
        if m < 1:
            raise ValueError("sequence must be nonempty")
        if range_size < 1:
            raise ValueError("range_size must be >= 1")
        prev = 1
        symbols: list[int] = []  # byte symbols of the whole gap stream
        gap_symbol_spans: list[tuple[int, int]] = []  # (symbol index, gap) per one
        prev_pos = -1
        for i, value in enumerate(values, start=1):
            if not 1 <= value <= num_bins:
                raise ValueError(f"value {value} outside 1..{num_bins}")
            if value < prev:
                raise ValueError("sequence is not monotone non-decreasing")
            prev = value
            pos = i + value - 1
            gap = pos - prev_pos - 1
            prev_pos = pos
            gap_symbol_spans.append((len(symbols), gap))
            symbols.extend(_gap_to_symbols(gap))

        total_zeros = num_bins + m + 1 - m  # vector length minus the ones
        num_chunks = (total_zeros + range_size - 1) // range_size

        freqs = [0] * 256
        for s in symbols:
            freqs[s] += 1
        code_lengths = _huffman_code_lengths(freqs)
        coder = _CanonicalCode(code_lengths)

        # encode while recording, per gap boundary, the bit offset reached
        bit_offsets = []
        out = bytearray()
        acc = 0
        nbits = 0
        bitpos = 0
        span_iter = iter(gap_symbol_spans)
        next_span = next(span_iter, None)
        for si, sym in enumerate(symbols):
            while next_span is not None and next_span[0] == si:
                bit_offsets.append(bitpos)
                next_span = next(span_iter, None)
            code, length = coder.encode[sym]
            acc = (acc << length) | code
            nbits += length
            bitpos += length
            while nbits >= 8:
                nbits -= 8
                out.append((acc >> nbits) & 0xFF)
        while next_span is not None:  # zero-symbol tail (cannot happen; gaps emit >=1)
            bit_offsets.append(bitpos)
            next_span = next(span_iter, None)
        if nbits:
            out.append((acc << (8 - nbits)) & 0xFF)
        code_bits = bitpos

        directory = _build_directory(bit_offsets, gap_symbol_spans, num_chunks,
                                     range_size, code_bits, m)
        return cls(m, num_bins, range_size, code_lengths, directory,
                   bytes(out), code_bits)

    # -- size accounting ---------------------------------------------------

    @property
    def code_bits(self) -> int:
        return self._code_bits

    @property
    def size_bits(self) -> int:
        """Complete serialized size in bits."""
        return 8 * self.serialized_length()

    def serialized_length(self) -> int:
        return (_HEAD.size + 256 + 4 + 24 * len(self._directory) + 8
                + len(self._code))

    # -- queries -----------------------------------------------------------

    def _ones_before_zero(self, r: int) -> int:
        """Number of 1-bits before the r-th 0-bit (r 1-based)."""
        c = (r - 1) // self.range_size
        bit, ones, zeros = self._directory[c]
        reader = _BitReader(self._code, bit, self._code_bits)
        table = self._decode_table
        while ones < self.count:
            gap = _read_gap(reader, table)
            if zeros + gap >= r:
                return ones
            zeros += gap
            ones += 1
        return self.count

    def locate(self, b: int) -> BlockRange:
        """Same contract as the Elias-Fano index's locate."""
        if not 1 <= b <= self.num_bins:
            raise ValueError(f"bin {b} outside 1..{self.num_bins}")
        # ones before the (v+1)-th zero == #{i : p_i <= v}
        first = max(self._ones_before_zero(b), 1)
        last = max(self._ones_before_zero(b + 1), first)
        return BlockRange(first, last)

    def bit_positions(self) -> list[int]:
        """All 1-bit positions, by full decode (audit/round-trip checks)."""
        reader = _BitReader(self._code, 0, self._code_bits)
        out = []
        pos = -1
        for _ in range(self.count):
            pos += _read_gap(reader, self._decode_table) + 1
            out.append(pos)
        return out

    def values(self) -> list[int]:
        return [pos - i + 1 for i, pos in enumerate(self.bit_positions(), start=1)]

    # -- serialization -----------------------------------------------------

    def to_bytes(self) -> bytes:
        head = _HEAD.pack(VERSION, CODEC_HUFFMAN_RLE, self.count, self.num_bins,
                          self.range_size)
        parts = [head, bytes(self._code_lengths), struct.pack("<I", len(self._directory))]
        for bit, ones, zeros in self._directory:
            parts.append(struct.pack("<QQQ", bit, ones, zeros))
        parts.append(struct.pack("<Q", self._code_bits))
        parts.append(self._code)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "EntropyCodedIndex":
        if len(data) < _HEAD.size + 256 + 4:
            raise CorruptIndexError("index section truncated")
        version, codec, m, num_bins, range_size = _HEAD.unpack_from(data, 0)
        if version != VERSION or codec != CODEC_HUFFMAN_RLE:
            raise CorruptIndexError(f"unsupported index version/codec {version}/{codec}")
        if m < 1 or range_size < 1:
            raise CorruptIndexError("inconsistent index header")
        off = _HEAD.size
        code_lengths = list(data[off : off + 256])
        off += 256
        (num_chunks,) = struct.unpack_from("<I", data, off)
        off += 4
        expected = (num_bins + 1 + range_size - 1) // range_size
        if num_chunks != expected:
            raise CorruptIndexError("directory size mismatch")
        directory = []
        for _ in range(num_chunks):
            directory.append(struct.unpack_from("<QQQ", data, off))
            off += 24
        (code_bits,) = struct.unpack_from("<Q", data, off)
        off += 8
        nbytes = (code_bits + 7) // 8
        if len(data) < off + nbytes:
            raise CorruptIndexError("index section truncated")
        idx = cls(m, num_bins, range_size, code_lengths, directory,
                  data[off : off + nbytes], code_bits)
        for bit, ones, zeros in directory:
            if bit > code_bits or ones > m:
                raise CorruptIndexError("directory entry out of bounds")
        return idx

    def __eq__(self, other) -> bool:
        return (isinstance(other, EntropyCodedIndex)
                and self.to_bytes() == other.to_bytes())


_HEAD = struct.Struct("<BBQQI")


def _build_directory(bit_offsets, spans, num_chunks, range_size, code_bits, m):
    """For each chunk c, the furthest gap boundary not past c*range_size zeros."""
    out = []
    z = 0
    i = 0
    for c in range(num_chunks):
        target = c * range_size
        while i < m and z + spans[i][1] <= target:
            z += spans[i][1]
            i += 1
        if i < m:
            out.append((bit_offsets[i], i, z))
        else:
            out.append((code_bits, m, z))
    return out


def _gap_to_symbols(gap: int) -> list[int]:
    if gap < _ESCAPE:
        return [gap]
    syms = [_ESCAPE]
    rest = gap - _ESCAPE
    while True:
        b = rest & 0x7F
        rest >>= 7
        if rest:
            syms.append(b | 0x80)
        else:
            syms.append(b)
            return syms


class _BitReader:
    def __init__(self, data: bytes, bit: int, limit_bits: int):
        self.data = data
        self.bit = bit
        self.limit = limit_bits

    def read_bit(self) -> int:
        if self.bit >= self.limit:
            raise CorruptIndexError("compressed chunk ran past its end")
        b = (self.data[self.bit >> 3] >> (7 - (self.bit & 7))) & 1
        self.bit += 1
        return b


def _read_symbol(reader: _BitReader, table: "_CanonicalCode") -> int:
    code = 0
    length = 0
    while True:
        code = (code << 1) | reader.read_bit()
        length += 1
        if length > 255:
            raise CorruptIndexError("invalid Huffman code in chunk")
        sym = table.decode_one(code, length)
        if sym is not None:
            return sym


def _read_gap(reader: _BitReader, table: "_CanonicalCode") -> int:
    sym = _read_symbol(reader, table)
    if sym < _ESCAPE:
        return sym
    gap = 0
    shift = 0
    while True:
        b = _read_symbol(reader, table)
        gap |= (b & 0x7F) << shift
        if not b & 0x80:
            return _ESCAPE + gap
        shift += 7
        if shift > 63:
            raise CorruptIndexError("runaway varint in chunk")


def _huffman_code_lengths(freqs: list[int]) -> list[int]:
    """Code length per symbol (0 = unused), deterministic tie-breaking."""
    heap = [(f, s, s) for s, f in enumerate(freqs) if f > 0]
    if not heap:
        raise ValueError("cannot build a code for an empty stream")
    if len(heap) == 1:
        lengths = [0] * 256
        lengths[heap[0][1]] = 1
        return lengths
    heapq.heapify(heap)
    parent: dict[int, int] = {}
    next_node = 256
    while len(heap) > 1:
        f1, t1, n1 = heapq.heappop(heap)
        f2, t2, n2 = heapq.heappop(heap)
        parent[n1] = next_node
        parent[n2] = next_node
        heapq.heappush(heap, (f1 + f2, min(t1, t2), next_node))
        next_node += 1
    lengths = [0] * 256
    for s, f in enumerate(freqs):
        if f > 0:
            depth = 0
            node = s
            while node in parent:
                node = parent[node]
                depth += 1
            lengths[s] = depth
    return lengths


class _CanonicalCode:
    """Canonical Huffman codes from a length table; MSB-first bitstream."""

    def __init__(self, lengths: list[int]):
        items = sorted((l, s) for s, l in enumerate(lengths) if l > 0)
        self.encode: dict[int, tuple[int, int]] = {}
        # per length: (first_code, [symbols in canonical order])
        self._by_length: dict[int, tuple[int, list[int]]] = {}
        code = 0
        prev_len = 0
        for l, s in items:
            code <<= l - prev_len
            prev_len = l
            self.encode[s] = (code, l)
            first, syms = self._by_length.setdefault(l, (code, []))
            self._by_length[l][1].append(s)
            code += 1
        if items and code > (1 << prev_len):
            raise CorruptIndexError("over-full Huffman code length table")

    def decode_one(self, code: int, length: int) -> Optional[int]:
        entry = self._by_length.get(length)
        if entry is None:
            return None
        first, syms = entry
        i = code - first
        if 0 <= i < len(syms):
            return syms[i]
        return None
