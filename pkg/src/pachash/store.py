"""Opened-store handle and the point-query engine.

A query computes the key's bin, asks the index for the bin's block range,
issues exactly one contiguous range read, and resolves the key against the
per-block entry tables of the fetched blocks.  Object lengths come from
entry-offset differences plus each block's recorded tail padding, so the
fetched range always contains everything needed.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import params as pp
from .blocks import (
    INDEX_KIND_EC,
    INDEX_KIND_EF,
    BlockImage,
    CorruptBlockError,
    FileBlockDevice,
    MemoryBlockDevice,
    StoreHeader,
    decode_block,
)
from .eliasfano import BlockRange, EliasFanoIndex
from .entropy import EntropyCodedIndex


class IntegrityError(Exception):
    pass


@dataclass
class QueryResult:
    found: bool
    value: Optional[bytes]
    blocks_fetched: int
    bytes_fetched: int
    error: Optional[str] = None


@dataclass
class IoStats:
    query_count: int = 0
    total_blocks: int = 0
    total_bytes: int = 0
    histogram: dict = field(default_factory=dict)

    def add(self, result: QueryResult) -> None:
        self.query_count += 1
        self.total_blocks += result.blocks_fetched
        self.total_bytes += result.bytes_fetched
        self.histogram[result.blocks_fetched] = (
            self.histogram.get(result.blocks_fetched, 0) + 1
        )

    @property
    def mean_blocks(self) -> float:
        return self.total_blocks / self.query_count if self.query_count else 0.0

    @property
    def mean_bytes(self) -> float:
        return self.total_bytes / self.query_count if self.query_count else 0.0


class Store:
    """Read handle: header + loaded index + block device.

    Shareable across threads; each query uses only local scratch state, and
    device statistics are updated under a lock.
    """

    def __init__(self, header: StoreHeader, index, device):
        self.header = header
        self.index = index
        self.device = device

    # -- opening -----------------------------------------------------------

    @classmethod
    def open(cls, path: str, direct: bool = False) -> "Store":
        probe = FileBlockDevice(path, 4096, 1)
        try:
            header = StoreHeader.decode(probe.read_raw(0, 4096))
        finally:
            probe.close()
        device = FileBlockDevice(path, header.block_size_bytes, header.m, direct)
        try:
            return cls(header, cls._load_index(header, device), device)
        except Exception:
            device.close()
            raise

    @classmethod
    def from_bytes(cls, data: bytes) -> "Store":
        header = StoreHeader.decode(data)
        device = MemoryBlockDevice(data, header.block_size_bytes, header.m)
        return cls(header, cls._load_index(header, device), device)

    @staticmethod
    def _load_index(header: StoreHeader, device):
        raw = device.read_raw(
            header.index_section_offset,
            device.size() - header.index_section_offset,
        )
        if header.index_kind == INDEX_KIND_EF:
            return EliasFanoIndex.from_bytes(raw)
        if header.index_kind == INDEX_KIND_EC:
            return EntropyCodedIndex.from_bytes(raw)
        raise CorruptBlockError(f"unknown index kind {header.index_kind}")

    def close(self) -> None:
        self.device.close()

    # -- queries -----------------------------------------------------------

    def query(self, key: bytes) -> QueryResult:
        h = self.header
        b = pp.hash_to_bin(key, h.hash_seed, h.a * h.m)
        rng = self.index.locate(b)
        data = self.device.read_range(rng)
        bs = h.block_size_bytes
        images = [
            decode_block(data[k * bs : (k + 1) * bs], rng.first + k)
            for k in range(len(rng))
        ]
        hit = None
        for bi, img in enumerate(images):
            for e, (ekey, _) in enumerate(img.entries):
                if ekey == key:
                    if hit is not None:
                        raise IntegrityError(f"key {key.hex()} stored twice")
                    hit = (bi, e)
        nbytes = len(rng) * bs
        if hit is None:
            return QueryResult(False, None, len(rng), nbytes)
        value = self._extract(images, rng, *hit)
        return QueryResult(True, value, len(rng), nbytes)

    def _extract(self, images: list[BlockImage], rng: BlockRange,
                 bi: int, e: int) -> bytes:
        img = images[bi]
        ps = img.payload_start()
        content_end = len(img.payload) - img.tail_padding
        cuts = [off - ps for _, off in img.entries] + [content_end]
        value = bytearray(img.payload[cuts[e] : cuts[e + 1]])
        if e < len(img.entries) - 1 or img.tail_padding > 0:
            return bytes(value)
        # last entry of a block that is full to its end: may continue onward
        j = bi
        while True:
            j += 1
            if j >= len(images):
                # the range's last block is the last block holding this bin
                # (the next block's first bin is larger), so the object ends
                # exactly at the end of the fetched bytes
                break
            nxt = images[j]
            nps = nxt.payload_start()
            ncontent = len(nxt.payload) - nxt.tail_padding
            ncut = nxt.entries[0][1] - nps if nxt.entries else ncontent
            value += nxt.payload[:ncut]
            if nxt.entries or nxt.tail_padding > 0:
                break
        return bytes(value)

    def query_batch(self, keys: Sequence[bytes],
                    max_in_flight: int = 128) -> list[QueryResult]:
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if max_in_flight == 1:
            return [self._safe_query(k) for k in keys]
        with concurrent.futures.ThreadPoolExecutor(max_in_flight) as pool:
            return list(pool.map(self._safe_query, keys))

    def _safe_query(self, key: bytes) -> QueryResult:
        try:
            return self.query(key)
        except Exception as exc:  # reported per position, batch continues
            return QueryResult(False, None, 0, 0, error=str(exc))

    # -- measurement harness ----------------------------------------------

    def measure_io(self, workload: Sequence[tuple[bytes, bool]],
                   theory: pp.TheoryModel) -> tuple[IoStats, list[dict]]:
        """Run the workload and compare measured bytes to the model curves.

        Returns overall stats plus per-object-size CSV rows with columns
        size, count, measured_bytes, theory_bytes, refined_bytes.
        """
        stats = IoStats()
        by_size: dict[int, list[int]] = {}
        sizes_seen: list[int] = []
        for key, is_present in workload:
            res = self.query(key)
            if res.error:
                raise IntegrityError(res.error)
            if res.found != is_present:
                raise IntegrityError(
                    f"workload key {key.hex()} expected "
                    f"{'present' if is_present else 'absent'}"
                )
            stats.add(res)
            size = len(res.value) if res.found else 0
            by_size.setdefault(size, []).append(res.bytes_fetched)
            if size:
                sizes_seen.append(size)
        gcd_bits = 8 * math.gcd(*sizes_seen) if sizes_seen else 1
        bs = self.header.block_size_bytes
        rows = []
        for size in sorted(by_size):
            fetched = by_size[size]
            rows.append({
                "size": size,
                "count": len(fetched),
                "measured_bytes": sum(fetched) / len(fetched),
                "theory_bytes": pp.expected_blocks(theory, 8 * size) * bs,
                "refined_bytes": pp.expected_blocks_refined(
                    theory, 8 * size, gcd_bits
                ) * bs if self.header.total_payload_bytes else float("nan"),
            })
        return stats, rows


CSV_FIELDS = ["size", "count", "measured_bytes", "theory_bytes", "refined_bytes"]


def write_csv(rows: list[dict], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS)
    writer.writeheader()
    writer.writerows(rows)


# -- full-store audit -------------------------------------------------------


@dataclass
class AuditReport:
    file_bytes: int
    payload_bytes: int
    table_bytes: int
    count_bytes: int
    padding_bytes: int
    index_bytes: int

    @property
    def load_factor(self) -> float:
        return self.payload_bytes / self.file_bytes


def audit(store: Store) -> AuditReport:
    """Account for every byte of the store file; raises on any discrepancy."""
    h = store.header
    bs = h.block_size_bytes
    payload = table = counts = padding = 0
    open_object = False
    for i in range(1, h.m + 1):
        raw = store.device.read_raw(i * bs, bs)
        img = decode_block(raw, i)
        ps = img.payload_start()
        content_end = len(img.payload) - img.tail_padding
        if img.tail_padding and img.payload[content_end:] != b"\0" * img.tail_padding:
            raise IntegrityError(f"block {i}: nonzero padding bytes")
        if i < h.m and img.tail_padding >= 11:
            raise IntegrityError(
                f"block {i}: {img.tail_padding} padding bytes in a non-final block"
            )
        first_cut = img.entries[0][1] - ps if img.entries else content_end
        if first_cut > 0 and not open_object:
            raise IntegrityError(f"block {i}: continuation with no open object")
        counts += 4
        table += 10 * len(img.entries)
        payload += content_end
        padding += img.tail_padding
        # an object can continue into the next block only out of a block
        # whose content runs to its very end
        open_object = img.tail_padding == 0 and (bool(img.entries) or open_object)
        if counts + table + payload + padding != i * bs:
            raise IntegrityError(f"block {i}: bytes do not tile the block")
    if payload != h.total_payload_bytes:
        raise IntegrityError(
            f"payload bytes {payload} != header total {h.total_payload_bytes}"
        )
    index_bytes = store.device.size() - h.index_section_offset
    expected_file = (1 + h.m) * bs + index_bytes
    if store.device.size() != expected_file:
        raise IntegrityError("file size does not match header geometry")
    return AuditReport(store.device.size(), payload, table, counts, padding,
                       index_bytes)
