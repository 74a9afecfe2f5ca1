"""Store construction: hashing, packing, index-sequence extraction, merging.

Objects are laid out in order of their full 64-bit key hash.  Bin numbers are
the fixed-point scaling of that hash to 1..a*m, so hash order and bin order
agree for every block count; this is what lets ``merge`` interleave two
already-built stores with a single linear sweep and still produce bytes
identical to a fresh build of the union.
"""

from __future__ import annotations

import heapq
import io
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from . import params as pp
from .blocks import (
    BLOCK_FIXED_BYTES,
    ENTRY_BYTES,
    INDEX_KIND_EC,
    INDEX_KIND_EF,
    MIN_START_BYTES,
    BlockImage,
    CorruptBlockError,
    StoreHeader,
    encode_block,
)
from .eliasfano import EliasFanoIndex
from .entropy import EntropyCodedIndex

MAX_VALUE_BYTES = (1 << 32) - 1


class BuildError(Exception):
    pass


class DuplicateKeyError(BuildError):
    pass


@dataclass(frozen=True)
class InputObject:
    key: bytes
    value: bytes

    def __post_init__(self):
        if len(self.key) != pp.KEY_BYTES:
            raise BuildError(f"keys must be exactly {pp.KEY_BYTES} bytes")
        if len(self.value) > MAX_VALUE_BYTES:
            raise BuildError("value exceeds the 2^32-1 byte cap")


@dataclass
class _Placement:
    key: bytes
    length: int
    entry_block: int  # 0-based
    logical_offset: int  # within the entry block's payload region


@dataclass
class _PackResult:
    blocks: list[dict]  # entries=[(key, logical_off)], payload=bytearray, pad=int
    placements: list[_Placement]
    touches: list[set]  # per block: indices of objects with bytes or entry in it
    continued: list[bool]  # block opened mid-object (leading continuation bytes)


def _pack(ordered: list[InputObject], block_size: int) -> _PackResult:
    blocks: list[dict] = []
    touches: list[set] = []
    continued: list[bool] = []
    placements: list[_Placement] = []

    def open_block(mid_object: bool):
        blocks.append({"entries": [], "payload": bytearray(), "pad": 0})
        touches.append(set())
        continued.append(mid_object)

    def free() -> int:
        b = blocks[-1]
        return block_size - BLOCK_FIXED_BYTES - ENTRY_BYTES * len(b["entries"]) - len(
            b["payload"]
        )

    open_block(False)
    for idx, obj in enumerate(ordered):
        if free() < MIN_START_BYTES:
            blocks[-1]["pad"] = free()
            open_block(False)
        b = blocks[-1]
        b["entries"].append((obj.key, len(b["payload"])))
        placements.append(
            _Placement(obj.key, len(obj.value), len(blocks) - 1, len(b["payload"]))
        )
        touches[-1].add(idx)
        pos = 0
        remaining = len(obj.value)
        while remaining > 0:
            if free() == 0:
                open_block(pos > 0)
                b = blocks[-1]
            chunk = min(remaining, free())
            b["payload"] += obj.value[pos : pos + chunk]
            touches[-1].add(idx)
            pos += chunk
            remaining -= chunk
    blocks[-1]["pad"] = free()
    return _PackResult(blocks, placements, touches, continued)


def _index_values(pack: _PackResult, bins: list[int], num_bins: int) -> list[int]:
    """Per-block first intersecting bin, with the empty-predecessor rule.

    Block j's value drops to b-1 only when bin b begins exactly at block j's
    first payload byte, nothing of bin b (bytes or entries) lies in an
    earlier block, and bin b-1 holds no objects — the one configuration where
    a query for bin b could otherwise fetch block j-1 superfluously.
    """
    occupied = set(bins)
    # first object of each bin in layout order, including zero-length ones
    bin_first_obj: dict[int, int] = {}
    for idx in range(len(bins)):
        bin_first_obj.setdefault(bins[idx], idx)
    values = []
    for j, touched in enumerate(pack.touches):
        if not touched:
            raise BuildError(f"internal: block {j + 1} has no objects")
        first_obj = min(touched)
        b = bins[first_obj]
        if (
            not pack.continued[j]
            and bin_first_obj[b] == first_obj
            and b - 1 >= 1
            and b - 1 not in occupied
        ):
            b -= 1
        values.append(b)
    return values


def _sort_key(h: int, key: bytes) -> tuple[int, bytes]:
    return (h, key)


def build(
    objects: Iterable[InputObject],
    a: int = 8,
    block_size_bytes: int = 4096,
    seed: int = 0,
    index_kind: int = INDEX_KIND_EF,
    ec_range_size: int = 1024,
) -> tuple[bytes, EliasFanoIndex]:
    """Build a complete store image; returns (file bytes, the EF index).

    Deterministic for a given input set and parameters: two builds of the
    same objects produce byte-identical files regardless of input order.
    """
    objs = list(objects)
    hashed = [(pp.hash64(o.key, seed), o) for o in objs]
    hashed.sort(key=lambda t: _sort_key(t[0], t[1].key))
    for i in range(1, len(hashed)):
        if hashed[i][1].key == hashed[i - 1][1].key:
            raise DuplicateKeyError(f"duplicate key {hashed[i][1].key.hex()}")
    ordered = [o for _, o in hashed]
    hashes = [h for h, _ in hashed]

    if not ordered:
        m = 1
        pack = _PackResult(
            [{"entries": [], "payload": bytearray(), "pad": block_size_bytes - 4}],
            [], [set()], [False],
        )
        values = [1]
    else:
        pack = _pack(ordered, block_size_bytes)
        m = len(pack.blocks)
        bins = [pp.bin_for_hash(h, a * m) for h in hashes]
        values = _index_values(pack, bins, a * m)

    index = EliasFanoIndex.build(values, a * m)
    if index_kind == INDEX_KIND_EF:
        index_bytes = index.to_bytes()
    elif index_kind == INDEX_KIND_EC:
        index_bytes = EntropyCodedIndex.build(
            values, (a + 1) * m, range_size=ec_range_size
        ).to_bytes()
    else:
        raise BuildError(f"unknown index kind {index_kind}")

    total_payload = sum(len(o.value) for o in ordered)
    header = StoreHeader(
        block_size_bytes=block_size_bytes,
        a=a,
        m=m,
        n=len(ordered),
        total_payload_bytes=total_payload,
        hash_seed=seed,
        index_kind=index_kind,
        index_section_offset=(1 + m) * block_size_bytes,
    )
    out = io.BytesIO()
    out.write(header.encode())
    for blk in pack.blocks:
        ec = len(blk["entries"])
        payload_start = BLOCK_FIXED_BYTES + ENTRY_BYTES * ec
        payload = bytes(blk["payload"]).ljust(block_size_bytes - payload_start, b"\0")
        entries = [(k, payload_start + off) for k, off in blk["entries"]]
        out.write(
            encode_block(BlockImage(entries, payload, blk["pad"]), block_size_bytes)
        )
    out.write(index_bytes)
    return out.getvalue(), index


def build_to_file(
    objects: Iterable[InputObject], path: str, **kwargs
) -> EliasFanoIndex:
    data, index = build(objects, **kwargs)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)
    return index


# -- scanning an existing store -------------------------------------------


def iter_store_objects(header: StoreHeader, read_block) -> Iterator[InputObject]:
    """Yield (key, value) objects in stored order.

    ``read_block(i)`` must return the raw bytes of data block i (1-based).
    Object lengths are recovered from entry-offset differences, using each
    block's tail-padding count to find where its content ends.
    """
    from .blocks import decode_block

    open_key: Optional[bytes] = None
    open_value: Optional[bytearray] = None
    for i in range(1, header.m + 1):
        img = decode_block(read_block(i), i)
        ps = img.payload_start()
        content_end = len(img.payload) - img.tail_padding
        cuts = [off - ps for _, off in img.entries] + [content_end]
        if open_key is not None:
            cont = img.payload[: cuts[0]]
            open_value += cont
        elif cuts[0] != 0:
            raise CorruptBlockError("continuation bytes with no open object", i)
        for e, (key, _) in enumerate(img.entries):
            if open_key is not None:
                yield InputObject(open_key, bytes(open_value))
            open_key = key
            open_value = bytearray(img.payload[cuts[e] : cuts[e + 1]])
    if open_key is not None:
        yield InputObject(open_key, bytes(open_value))


def rebuild_index(header: StoreHeader, read_block) -> EliasFanoIndex:
    """Recompute the index sequence from the data blocks alone.

    Produces an index bit-identical to the one written at build time.
    """
    from .blocks import decode_block

    if header.n == 0:
        return EliasFanoIndex.build([1], header.a * header.m)

    a, m, seed = header.a, header.m, header.hash_seed
    num_bins = a * m
    touches: list[set] = [set() for _ in range(m)]
    continued: list[bool] = [False] * m
    obj_bins: list[int] = []

    open_idx: Optional[int] = None
    for i in range(1, m + 1):
        img = decode_block(read_block(i), i)
        ps = img.payload_start()
        content_end = len(img.payload) - img.tail_padding
        cuts = [off - ps for _, off in img.entries] + [content_end]
        if cuts[0] > 0:
            if open_idx is None:
                raise CorruptBlockError("continuation bytes with no open object", i)
            continued[i - 1] = True
            touches[i - 1].add(open_idx)
        for key, _ in img.entries:
            idx = len(obj_bins)
            obj_bins.append(pp.bin_for_hash(pp.hash64(key, seed), num_bins))
            touches[i - 1].add(idx)
            open_idx = idx
    if len(obj_bins) != header.n:
        raise CorruptBlockError(
            f"store holds {len(obj_bins)} objects, header says {header.n}"
        )

    pack = _PackResult([], [], touches, continued)
    values = _index_values(pack, obj_bins, num_bins)
    return EliasFanoIndex.build(values, num_bins)


def merge(
    header_a: StoreHeader,
    read_block_a,
    header_b: StoreHeader,
    read_block_b,
    index_kind: int = INDEX_KIND_EF,
    ec_range_size: int = 1024,
) -> tuple[bytes, EliasFanoIndex]:
    """Merge two stores with a linear sweep.

    Both stores must share seed, a, and block size.  Because stored order is
    full-hash order, the two object streams merge without re-sorting and the
    result is byte-identical to building the union from scratch.
    """
    for attr in ("hash_seed", "a", "block_size_bytes"):
        if getattr(header_a, attr) != getattr(header_b, attr):
            raise BuildError(f"parameter mismatch between inputs: {attr}")
    seed = header_a.hash_seed

    def keyed(it):
        for obj in it:
            yield (pp.hash64(obj.key, seed), obj.key), obj

    stream = heapq.merge(
        keyed(iter_store_objects(header_a, read_block_a)),
        keyed(iter_store_objects(header_b, read_block_b)),
        key=lambda t: t[0],
    )
    merged = []
    prev_key = None
    for _, obj in stream:
        if obj.key == prev_key:
            raise DuplicateKeyError(f"duplicate key across inputs: {obj.key.hex()}")
        prev_key = obj.key
        merged.append(obj)
    return build(
        merged,
        a=header_a.a,
        block_size_bytes=header_a.block_size_bytes,
        seed=seed,
        index_kind=index_kind,
        ec_range_size=ec_range_size,
    )


# -- input stream formats ---------------------------------------------------


def read_binary_records(stream) -> Iterator[InputObject]:
    """Length-prefixed records: [key: 8][value_len: u32 LE][value bytes]."""
    while True:
        key = stream.read(8)
        if not key:
            return
        if len(key) != 8:
            raise BuildError("truncated record key")
        raw = stream.read(4)
        if len(raw) != 4:
            raise BuildError("truncated record length")
        (vlen,) = struct.unpack("<I", raw)
        value = stream.read(vlen)
        if len(value) != vlen:
            raise BuildError("truncated record value")
        yield InputObject(key, value)


def write_binary_records(stream, objects: Iterable[InputObject]) -> None:
    for obj in objects:
        stream.write(obj.key)
        stream.write(struct.pack("<I", len(obj.value)))
        stream.write(obj.value)


def read_text_records(stream) -> Iterator[InputObject]:
    """One record per line: 16 hex digits, TAB, value (no tabs/newlines)."""
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            hexkey, value = line.split("\t", 1)
            key = bytes.fromhex(hexkey)
        except ValueError as exc:
            raise BuildError(f"line {lineno}: malformed record") from exc
        yield InputObject(key, value.encode())
