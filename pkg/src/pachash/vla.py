"""Position-indexed array of variable-size objects over fixed-size blocks.

Objects are self-delimiting ([varint length][bytes]) and packed contiguously
across block payload regions, so no per-object entry table is needed.  Each
block stores the number of objects that started in earlier blocks plus the
offset of the first object starting inside it; a monotone index over
"first array position intersecting block i" (universe n, playing the role
the bins play in the keyed store) locates any position with one contiguous
read, after which the reader skips forward by decoding lengths.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass

from .blocks import (
    INDEX_KIND_VLA,
    CorruptBlockError,
    FileBlockDevice,
    MemoryBlockDevice,
    StoreHeader,
)
from .eliasfano import EliasFanoIndex

BLOCK_META_BYTES = 10  # prev_count u64 + first_start u16
NO_START = 0xFFFF


class VlaError(Exception):
    pass


def encode_varint(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


@dataclass
class _VlaBlock:
    prev_count: int
    first_start: int  # absolute offset within the block, or NO_START
    payload: bytes


def build(objects: list[bytes], block_size_bytes: int = 4096,
          seed: int = 0) -> bytes:
    """Pack objects in order and return the complete file image."""
    if not 64 <= block_size_bytes <= 65536:
        raise VlaError("block size must be in 64..65536")
    cap = block_size_bytes - BLOCK_META_BYTES
    blocks: list[dict] = []
    p_values: list[int] = []  # first position intersecting each block
    started = 0

    def open_block():
        blocks.append({
            "prev_count": started,
            "first_start": NO_START,
            "payload": bytearray(),
        })

    open_block()
    for idx, obj in enumerate(objects, start=1):
        frame = encode_varint(len(obj)) + obj
        pos = 0
        while pos < len(frame):
            blk = blocks[-1]
            if len(blk["payload"]) == cap:
                open_block()
                blk = blocks[-1]
            if len(blk["payload"]) == 0:
                p_values.append(idx)
            if pos == 0:
                if blk["first_start"] == NO_START:
                    blk["first_start"] = BLOCK_META_BYTES + len(blk["payload"])
                started += 1  # counts objects whose first byte is written
            take = min(len(frame) - pos, cap - len(blk["payload"]))
            blk["payload"] += frame[pos : pos + take]
            pos += take

    if not p_values:  # empty store, or nothing written to the first block
        p_values = [1] * len(blocks)
    m = len(blocks)
    n = len(objects)
    index = EliasFanoIndex.build(p_values, max(n, 1))

    header = StoreHeader(
        block_size_bytes=block_size_bytes,
        a=0,
        m=m,
        n=n,
        total_payload_bytes=sum(len(o) for o in objects),
        hash_seed=seed,
        index_kind=INDEX_KIND_VLA,
        index_section_offset=(1 + m) * block_size_bytes,
    )
    out = io.BytesIO()
    out.write(header.encode())
    for blk in blocks:
        out.write(struct.pack("<QH", blk["prev_count"], blk["first_start"]))
        out.write(bytes(blk["payload"]).ljust(cap, b"\0"))
    out.write(index.to_bytes())
    return out.getvalue()


def build_to_file(objects: list[bytes], path: str, **kwargs) -> None:
    data = build(objects, **kwargs)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


class VlaStore:
    def __init__(self, header: StoreHeader, index: EliasFanoIndex, device):
        if header.index_kind != INDEX_KIND_VLA:
            raise VlaError("not a position-indexed array file")
        self.header = header
        self.index = index
        self.device = device
        self.gets = 0
        self.objects_skipped = 0

    @classmethod
    def open(cls, path: str, direct: bool = False) -> "VlaStore":
        probe = FileBlockDevice(path, 4096, 1)
        try:
            header = StoreHeader.decode(probe.read_raw(0, 4096))
        finally:
            probe.close()
        device = FileBlockDevice(path, header.block_size_bytes, header.m, direct)
        raw = device.read_raw(header.index_section_offset,
                              device.size() - header.index_section_offset)
        return cls(header, EliasFanoIndex.from_bytes(raw), device)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VlaStore":
        header = StoreHeader.decode(data)
        device = MemoryBlockDevice(data, header.block_size_bytes, header.m)
        raw = device.read_raw(header.index_section_offset,
                              len(data) - header.index_section_offset)
        return cls(header, EliasFanoIndex.from_bytes(raw), device)

    def close(self) -> None:
        self.device.close()

    def get(self, i: int) -> bytes:
        """The i-th stored object (1-based), via one contiguous range read."""
        h = self.header
        if not 1 <= i <= h.n:
            raise IndexError(f"position {i} out of range 1..{h.n}")
        rng = self.index.locate(i)
        data = self.device.read_range(rng)
        bs = h.block_size_bytes
        metas: list[_VlaBlock] = []
        for k in range(len(rng)):
            raw = data[k * bs : (k + 1) * bs]
            prev_count, first_start = struct.unpack_from("<QH", raw, 0)
            if first_start != NO_START and not (
                BLOCK_META_BYTES <= first_start < bs
            ):
                raise CorruptBlockError("first_start out of range", rng.first + k)
            metas.append(_VlaBlock(prev_count, first_start, raw[BLOCK_META_BYTES:]))

        start_block = None
        for k, meta in enumerate(metas):
            if meta.prev_count >= i:
                break
            if meta.first_start != NO_START:
                start_block = k
        if start_block is None:
            raise CorruptBlockError(
                f"no object start for position {i} inside the fetched range",
                rng.first,
            )
        meta = metas[start_block]
        skip = i - 1 - meta.prev_count
        cursor = _Cursor(metas, start_block, meta.first_start - BLOCK_META_BYTES)
        for _ in range(skip):
            cursor.skip(cursor.read_varint())
        self.gets += 1
        self.objects_skipped += skip
        length = cursor.read_varint()
        return cursor.read(length)


class _Cursor:
    """Byte cursor over the concatenated payload regions of fetched blocks."""

    def __init__(self, metas: list[_VlaBlock], block: int, offset: int):
        self.metas = metas
        self.block = block
        self.offset = offset

    def _byte(self) -> int:
        while self.offset >= len(self.metas[self.block].payload):
            self.offset -= len(self.metas[self.block].payload)
            self.block += 1
            if self.block >= len(self.metas):
                raise CorruptBlockError("object runs past the fetched range")
        b = self.metas[self.block].payload[self.offset]
        self.offset += 1
        return b

    def read_varint(self) -> int:
        value = 0
        shift = 0
        while True:
            b = self._byte()
            value |= (b & 0x7F) << shift
            if not b & 0x80:
                return value
            shift += 7
            if shift > 63:
                raise CorruptBlockError("runaway varint length")

    def skip(self, n: int) -> None:
        self.offset += n

    def read(self, n: int) -> bytes:
        out = bytearray()
        while n > 0:
            payload = self.metas[self.block].payload
            while self.offset >= len(payload):
                self.offset -= len(payload)
                self.block += 1
                if self.block >= len(self.metas):
                    raise CorruptBlockError("object runs past the fetched range")
                payload = self.metas[self.block].payload
            take = min(n, len(payload) - self.offset)
            out += payload[self.offset : self.offset + take]
            self.offset += take
            n -= take
        return bytes(out)
