import math

import pytest

from pachash import params as pp


def test_store_params_validation():
    pp.StoreParams(8, 10, 4096, 100, 5000, 0)
    with pytest.raises(ValueError):
        pp.StoreParams(3, 10, 4096, 100, 5000, 0)  # a not a power of two
    with pytest.raises(ValueError):
        pp.StoreParams(8, 0, 4096, 100, 5000, 0)
    with pytest.raises(ValueError):
        pp.StoreParams(8, 10, 32, 100, 5000, 0)  # block too small
    with pytest.raises(ValueError):
        pp.StoreParams(8, 10, 1 << 17, 100, 5000, 0)  # offsets need 16 bits


def test_num_bins_and_lower_width():
    p = pp.StoreParams(8, 10, 4096, 100, 5000, 0)
    assert p.num_bins == 80
    assert p.lower_bits_width == 3
    assert pp.StoreParams(1, 5, 64, 1, 1, 0).lower_bits_width == 0


def test_hash64_is_keyed_and_stable():
    k = bytes(range(8))
    assert pp.hash64(k, 0) == pp.hash64(k, 0)
    assert pp.hash64(k, 0) != pp.hash64(k, 1)
    with pytest.raises(ValueError):
        pp.hash64(b"short", 0)


def test_hash_to_bin_range_and_distribution():
    import random

    rng = random.Random(0)
    counts = [0] * 16
    for _ in range(16000):
        key = rng.getrandbits(64).to_bytes(8, "little")
        b = pp.hash_to_bin(key, 7, 16)
        assert 1 <= b <= 16
        counts[b - 1] += 1
    # roughly uniform: each bin within 25% of the expected 1000
    assert all(750 <= c <= 1250 for c in counts)


def test_hash_to_bin_scaling_is_monotone_under_doubling():
    """Doubling the bin count maps bin b to 2b-1 or 2b for every key."""
    import random

    rng = random.Random(1)
    for _ in range(2000):
        key = rng.getrandbits(64).to_bytes(8, "little")
        t = rng.randint(1, 1 << 20)
        b = pp.hash_to_bin(key, 3, t)
        b2 = pp.hash_to_bin(key, 3, 2 * t)
        assert b2 in (2 * b - 1, 2 * b)


def _theory(a=8, block_bytes=4096):
    p = pp.StoreParams(a, 100, block_bytes, 1000, 50000, 0)
    return pp.TheoryModel(p, 8 * block_bytes)


def test_expected_blocks_known_points():
    # (1 + |x|/B + 1/a) at B = 32768 bits
    assert pp.expected_blocks(_theory(8), 8 * 64) * 4096 == pytest.approx(4672.0)
    assert pp.expected_blocks(_theory(2), 8 * 64) * 4096 == pytest.approx(6208.0)
    assert pp.expected_blocks(_theory(32), 8 * 64) * 4096 == pytest.approx(4288.0)
    assert pp.expected_blocks(_theory(8), 8 * 512) * 4096 == pytest.approx(5120.0)
    # negative query: |x| = 0
    assert pp.expected_blocks(_theory(8), 0) == pytest.approx(1.125)


def test_expected_blocks_refined_less_than_plain():
    th = _theory(8)
    plain = pp.expected_blocks(th, 8 * 64)
    refined = pp.expected_blocks_refined(th, 8 * 64, 8 * 64)
    assert refined < plain
    assert refined > 1 + 1 / 8


def test_ef_index_bits_formula():
    for a in (1, 2, 4, 8, 16, 32):
        for m in (1, 10, 1000):
            assert pp.ef_index_bits(m, a) == m * (2 + int(math.log2(a))) + 1


def test_succincter_bound_value():
    assert round(pp.succincter_bound_bits_per_block(8), 4) == 4.6126


def test_sparse_vector_rate_matches_exact_binomial_limit():
    # rate = lim log2 C((a+1)m, m) / m, checked against big-integer binomials
    for a in (1, 2, 4, 8):
        m = 4000
        exact = math.log2(math.comb((a + 1) * m, m)) / m
        assert pp.sparse_vector_rate_bits_per_block(a) == pytest.approx(
            exact, abs=0.01
        )
    assert pp.sparse_vector_rate_bits_per_block(2) == pytest.approx(2.75489, abs=1e-4)
    assert pp.sparse_vector_rate_bits_per_block(1) == pytest.approx(2.0)


def test_mkphf_lower_bound():
    assert pp.mkphf_lower_bound_bits_per_block(1) == pytest.approx(
        0.5 * math.log2(2 * math.pi)
    )
    assert pp.mkphf_lower_bound_bits_per_block(64) > pp.mkphf_lower_bound_bits_per_block(8)


def test_binomial_log_bounds_bracket_exact_values():
    for c in range(2, 10):
        for n in (1, 2, 5, 17, 100):
            lo, hi = pp.binomial_log_bounds(c, n)
            exact = math.log2(math.comb(c * n, n))
            assert lo <= exact <= hi, (c, n)
            assert hi - lo < 0.5
