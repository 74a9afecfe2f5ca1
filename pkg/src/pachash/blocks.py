"""External block layout, store file format, and block device backends.

A data block is laid out as::

    [entry_count: u16] [tail_padding: u16]
    [entry_count x (key: 8 bytes, start_offset: u16)]
    [payload bytes ... up to the block end]

The entry table lists the objects whose first payload byte lies in this
block.  Payload bytes before the first entry's offset belong to an object
that started in an earlier block.  The last ``tail_padding`` payload bytes
are zero filler written when fewer than 11 free bytes remained at a
new-object boundary (or at the end of the final block); recording the count
makes object-length recovery by offset differences exact.
"""

from __future__ import annotations

import os
import struct
import threading
from dataclasses import dataclass, field

from .eliasfano import BlockRange

MAGIC = b"PCHSTOR1"
VERSION = 1

BLOCK_FIXED_BYTES = 4  # entry_count + tail_padding
ENTRY_BYTES = 10  # 8-byte key + u16 offset
MIN_START_BYTES = ENTRY_BYTES + 1  # a new object needs its entry plus >= 1 payload byte

INDEX_KIND_EF = 0
INDEX_KIND_EC = 1
INDEX_KIND_VLA = 2

_HEADER_STRUCT = struct.Struct("<8sHIIQQQQBQ")


class CorruptBlockError(Exception):
    def __init__(self, message: str, block_id: int | None = None):
        if block_id is not None:
            message = f"block {block_id}: {message}"
        super().__init__(message)
        self.block_id = block_id


@dataclass
class BlockImage:
    """Decoded form of one external block."""

    entries: list[tuple[bytes, int]]  # (key, start_offset) sorted by offset
    payload: bytes  # payload region incl. trailing padding bytes
    tail_padding: int = 0

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    def payload_start(self) -> int:
        return BLOCK_FIXED_BYTES + ENTRY_BYTES * len(self.entries)


def encode_block(image: BlockImage, block_size: int) -> bytes:
    ec = len(image.entries)
    payload_start = BLOCK_FIXED_BYTES + ENTRY_BYTES * ec
    if payload_start > block_size:
        raise CorruptBlockError(
            f"entry table of {ec} entries does not fit a {block_size}-byte block"
        )
    if len(image.payload) != block_size - payload_start:
        raise CorruptBlockError(
            f"payload length {len(image.payload)} != {block_size - payload_start}"
        )
    if not 0 <= image.tail_padding <= len(image.payload):
        raise CorruptBlockError("tail_padding outside the payload region")
    out = bytearray(struct.pack("<HH", ec, image.tail_padding))
    prev = -1
    for key, off in image.entries:
        if len(key) != 8:
            raise CorruptBlockError("entry keys must be 8 bytes")
        if off < payload_start or off >= block_size:
            raise CorruptBlockError(f"entry offset {off} outside payload region")
        if off < prev:
            raise CorruptBlockError("entry offsets not sorted")
        prev = off
        out += key
        out += struct.pack("<H", off)
    out += image.payload
    return bytes(out)


def decode_block(data: bytes, block_id: int | None = None) -> BlockImage:
    block_size = len(data)
    if block_size < BLOCK_FIXED_BYTES:
        raise CorruptBlockError("block shorter than fixed header", block_id)
    ec, tail_padding = struct.unpack_from("<HH", data, 0)
    payload_start = BLOCK_FIXED_BYTES + ENTRY_BYTES * ec
    if payload_start > block_size:
        raise CorruptBlockError(f"entry count {ec} overflows block", block_id)
    entries = list(
        struct.iter_unpack("<8sH", data[BLOCK_FIXED_BYTES:payload_start])
    )
    prev = -1
    for _, off in entries:
        if off < payload_start or off >= block_size:
            raise CorruptBlockError(f"entry offset {off} out of bounds", block_id)
        if off < prev:
            raise CorruptBlockError("entry offsets not sorted", block_id)
        prev = off
    payload = data[payload_start:]
    if tail_padding > len(payload):
        raise CorruptBlockError("tail_padding exceeds payload region", block_id)
    return BlockImage(entries, payload, tail_padding)


@dataclass(frozen=True)
class StoreHeader:
    block_size_bytes: int
    a: int
    m: int
    n: int
    total_payload_bytes: int
    hash_seed: int
    index_kind: int
    index_section_offset: int

    def encode(self) -> bytes:
        raw = _HEADER_STRUCT.pack(
            MAGIC, VERSION, self.block_size_bytes, self.a, self.m, self.n,
            self.total_payload_bytes, self.hash_seed, self.index_kind,
            self.index_section_offset,
        )
        return raw.ljust(self.block_size_bytes, b"\0")

    @classmethod
    def decode(cls, data: bytes) -> "StoreHeader":
        if len(data) < _HEADER_STRUCT.size:
            raise CorruptBlockError("file too short for a store header")
        magic, version, bs, a, m, n, payload, seed, kind, index_off = (
            _HEADER_STRUCT.unpack_from(data, 0)
        )
        if magic != MAGIC:
            raise CorruptBlockError("bad magic; not a store file")
        if version != VERSION:
            raise CorruptBlockError(f"unsupported store version {version}")
        return cls(bs, a, m, n, payload, seed, kind, index_off)


@dataclass
class IoCounters:
    ranges: int = 0
    blocks: int = 0
    bytes: int = 0


class BlockDevice:
    """Read access to the data blocks of a store, with fetch statistics.

    Data blocks are addressed 1..m; the header occupies its own block-sized
    region before block 1 and the index section follows block m.
    """

    def __init__(self, block_size: int, m: int):
        self.block_size = block_size
        self.m = m
        self.stats = IoCounters()
        self._lock = threading.Lock()

    def read_range(self, rng: BlockRange) -> bytes:
        first, last = rng
        if not 1 <= first <= last <= self.m:
            raise ValueError(f"block range {first}..{last} outside 1..{self.m}")
        length = (last - first + 1) * self.block_size
        data = self._read(first * self.block_size, length)
        if len(data) != length:
            raise IOError(f"short read for block range {first}..{last}")
        with self._lock:
            self.stats.ranges += 1
            self.stats.blocks += last - first + 1
            self.stats.bytes += length
        return data

    def read_raw(self, offset: int, length: int) -> bytes:
        """Uncounted read for header/index sections."""
        return self._read(offset, length)

    def size(self) -> int:
        raise NotImplementedError

    def _read(self, offset: int, length: int) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass


class MemoryBlockDevice(BlockDevice):
    def __init__(self, data: bytes, block_size: int, m: int):
        super().__init__(block_size, m)
        self._data = data

    def _read(self, offset: int, length: int) -> bytes:
        return self._data[offset : offset + length]

    def size(self) -> int:
        return len(self._data)


class FileBlockDevice(BlockDevice):
    """File-backed device; optionally tries OS-cache-bypassing reads.

    Direct I/O has platform-specific alignment rules; any failure falls back
    silently to ordinary buffered reads.
    """

    def __init__(self, path: str, block_size: int, m: int, direct: bool = False):
        super().__init__(block_size, m)
        self.path = path
        self._fd = None
        self._direct = False
        if direct and hasattr(os, "O_DIRECT"):
            try:
                self._fd = os.open(path, os.O_RDONLY | os.O_DIRECT)
                os.pread(self._fd, block_size, 0)
                self._direct = True
            except OSError:
                if self._fd is not None:
                    os.close(self._fd)
                self._fd = None
        if self._fd is None:
            self._fd = os.open(path, os.O_RDONLY)

    def _read(self, offset: int, length: int) -> bytes:
        try:
            return os.pread(self._fd, length, offset)
        except OSError:
            if self._direct:
                # alignment refusal from the direct fd; reopen buffered
                os.close(self._fd)
                self._fd = os.open(self.path, os.O_RDONLY)
                self._direct = False
                return os.pread(self._fd, length, offset)
            raise

    def size(self) -> int:
        return os.fstat(self._fd).st_size

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
