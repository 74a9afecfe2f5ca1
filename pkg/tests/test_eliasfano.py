import math
import random

import pytest

from pachash.eliasfano import BlockRange, CorruptIndexError, EliasFanoIndex


def _random_monotone(rng, m, universe):
    return sorted(rng.randint(1, universe) for _ in range(m))


def _naive_rank_leq(values, b):
    return sum(1 for v in values if v <= b)


def _naive_locate(values, b):
    first = max(_naive_rank_leq(values, b - 1), 1)
    last = max(_naive_rank_leq(values, b), first)
    return BlockRange(first, last)


def test_get_round_trips_values():
    rng = random.Random(0)
    for _ in range(50):
        m = rng.randint(1, 200)
        universe = rng.randint(m, 20 * m)
        values = _random_monotone(rng, m, universe)
        idx = EliasFanoIndex.build(values, universe)
        assert idx.values() == values


def test_rank_and_locate_match_naive():
    rng = random.Random(1)
    for _ in range(50):
        m = rng.randint(1, 150)
        universe = rng.randint(m, 30 * m)
        values = _random_monotone(rng, m, universe)
        idx = EliasFanoIndex.build(values, universe)
        for b in range(1, universe + 1):
            assert idx.rank_leq(b) == _naive_rank_leq(values, b)
            assert idx.locate(b) == _naive_locate(values, b)


def test_locate_with_repeated_values_covers_leading_blocks():
    # one bin spanning blocks 2..6: p repeats the bin across every block
    values = [1, 4, 5, 5, 5, 5, 9]
    idx = EliasFanoIndex.build(values, 16)
    assert idx.locate(5) == BlockRange(2, 6)


def test_build_rejects_bad_input():
    with pytest.raises(ValueError):
        EliasFanoIndex.build([], 10)
    with pytest.raises(ValueError):
        EliasFanoIndex.build([3, 2], 10)  # not monotone
    with pytest.raises(ValueError):
        EliasFanoIndex.build([0, 2], 10)  # below range
    with pytest.raises(ValueError):
        EliasFanoIndex.build([2, 11], 10)  # above range


def test_size_bits_formula_for_power_of_two_ratio():
    # universe = a*m with a a power of two gives exactly m*(2+log2 a)+1 bits
    rng = random.Random(2)
    for a in (1, 2, 4, 8, 32):
        m = 500
        values = sorted(rng.randint(1, a * m) for _ in range(m))
        idx = EliasFanoIndex.build(values, a * m)
        assert idx.size_bits == m * (2 + int(math.log2(a))) + 1


def test_serialization_round_trip():
    rng = random.Random(3)
    for _ in range(30):
        m = rng.randint(1, 300)
        universe = rng.randint(m, 50 * m)
        values = _random_monotone(rng, m, universe)
        idx = EliasFanoIndex.build(values, universe)
        raw = idx.to_bytes()
        assert len(raw) == idx.serialized_length()
        restored = EliasFanoIndex.from_bytes(raw)
        assert restored == idx
        assert restored.values() == values


def test_from_bytes_rejects_corruption():
    idx = EliasFanoIndex.build([1, 5, 9], 12)
    raw = idx.to_bytes()
    with pytest.raises(CorruptIndexError):
        EliasFanoIndex.from_bytes(raw[:10])
    bad = bytearray(raw)
    bad[16] ^= 0x7F  # lower-bits width inconsistent with count/universe
    with pytest.raises(CorruptIndexError):
        EliasFanoIndex.from_bytes(bytes(bad))


def test_predecessor_contract():
    idx = EliasFanoIndex.build([2, 2, 7], 10)
    assert idx.predecessor(1) is None
    assert idx.predecessor(2) == (2, 2)
    assert idx.predecessor(6) == (2, 2)
    assert idx.predecessor(10) == (3, 7)


def test_cluster_scan_is_short_on_random_data():
    rng = random.Random(4)
    m, a = 100_000, 8
    values = sorted(rng.randint(1, a * m) for _ in range(m))
    idx = EliasFanoIndex.build(values, a * m)
    for _ in range(20_000):
        idx.rank_leq(rng.randint(1, a * m))
    assert idx.predecessor_scanned / idx.predecessor_calls < 3.0
