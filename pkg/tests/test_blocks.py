import random

import pytest

from pachash.blocks import (
    BLOCK_FIXED_BYTES,
    ENTRY_BYTES,
    BlockImage,
    CorruptBlockError,
    IoCounters,
    MemoryBlockDevice,
    StoreHeader,
    decode_block,
    encode_block,
)
from pachash.eliasfano import BlockRange


def _random_image(rng, block_size):
    # keep at least one payload byte so entry offsets have a valid range
    ec = rng.randint(0, (block_size - BLOCK_FIXED_BYTES - 1) // ENTRY_BYTES)
    payload_start = BLOCK_FIXED_BYTES + ENTRY_BYTES * ec
    payload_len = block_size - payload_start
    offs = sorted(rng.randint(payload_start, block_size - 1) for _ in range(ec))
    entries = [(rng.getrandbits(64).to_bytes(8, "little"), off) for off in offs]
    tail = rng.randint(0, payload_len)
    payload = rng.randbytes(payload_len - tail) + b"\0" * tail
    return BlockImage(entries, payload, tail)


def test_empty_block_encoding():
    image = BlockImage([], b"\0" * 60, 0)
    raw = encode_block(image, 64)
    assert raw[:2] == b"\x00\x00"
    assert decode_block(raw) == image


def test_minimal_table_round_trip():
    payload = b"\x07" + b"\0" * 49
    image = BlockImage([(b"k" * 8, 14)], payload, 0)
    assert decode_block(encode_block(image, 64)) == image


def test_random_images_round_trip():
    rng = random.Random(0)
    for _ in range(10_000):
        block_size = rng.choice([64, 128, 256])
        image = _random_image(rng, block_size)
        raw = encode_block(image, block_size)
        assert len(raw) == block_size
        assert decode_block(raw) == image


def test_encode_rejects_bad_images():
    with pytest.raises(CorruptBlockError):
        encode_block(BlockImage([], b"\0" * 10, 0), 64)  # wrong payload size
    with pytest.raises(CorruptBlockError):
        encode_block(BlockImage([(b"k" * 8, 2)], b"\0" * 50, 0), 64)  # bad offset
    entries = [(b"k" * 8, 40), (b"q" * 8, 30)]
    with pytest.raises(CorruptBlockError):
        encode_block(BlockImage(entries, b"\0" * 40, 0), 64)  # unsorted
    many = [(b"k" * 8, 63)] * 7
    with pytest.raises(CorruptBlockError):
        encode_block(BlockImage(many, b"", 0), 64)  # table overflow


def test_decode_rejects_bad_tables():
    raw = bytearray(encode_block(BlockImage([], b"\0" * 60, 0), 64))
    raw[0] = 200  # entry count overflows the block
    with pytest.raises(CorruptBlockError):
        decode_block(bytes(raw), block_id=5)
    raw = bytearray(encode_block(BlockImage([(b"k" * 8, 14)], b"\0" * 50, 0), 64))
    raw[12] = 1  # offset below payload_start
    raw[13] = 0
    with pytest.raises(CorruptBlockError) as info:
        decode_block(bytes(raw), block_id=9)
    assert "block 9" in str(info.value)


def test_header_round_trip_and_validation():
    h = StoreHeader(4096, 8, 77, 1234, 99999, 42, 0, (1 + 77) * 4096)
    raw = h.encode()
    assert len(raw) == 4096
    assert StoreHeader.decode(raw) == h
    with pytest.raises(CorruptBlockError):
        StoreHeader.decode(b"NOTMAGIC" + raw[8:])
    bad = bytearray(raw)
    bad[8] = 200  # unsupported version
    with pytest.raises(CorruptBlockError):
        StoreHeader.decode(bytes(bad))


def test_device_read_range_and_stats():
    bs, m = 64, 5
    data = bytes(range(64)) * (m + 1)
    dev = MemoryBlockDevice(data, bs, m)
    out = dev.read_range(BlockRange(2, 3))
    assert out == data[2 * bs : 4 * bs]
    dev.read_range(BlockRange(1, 1))
    assert dev.stats == IoCounters(ranges=2, blocks=3, bytes=3 * bs)
    with pytest.raises(ValueError):
        dev.read_range(BlockRange(0, 1))
    with pytest.raises(ValueError):
        dev.read_range(BlockRange(5, 6))
    # header/index reads do not count
    dev.read_raw(0, bs)
    assert dev.stats.ranges == 2


def test_scripted_replay_counts_sum_of_range_lengths():
    bs, m = 64, 10
    dev = MemoryBlockDevice(b"\0" * (bs * (m + 1)), bs, m)
    script = [(1, 3), (5, 5), (2, 9), (10, 10)]
    for first, last in script:
        dev.read_range(BlockRange(first, last))
    assert dev.stats.blocks == sum(last - first + 1 for first, last in script)
    assert dev.stats.bytes == dev.stats.blocks * bs
