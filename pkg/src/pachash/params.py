"""Shared structural parameters, bin hashing, and closed-form cost calculators.

Every formula here is a plain function of the store's structural constants so
tests and the measurement harness can evaluate them independently of any
concrete store instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MASK64 = (1 << 64) - 1

KEY_BYTES = 8


def _is_power_of_two(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class StoreParams:
    """Structural constants shared by builder, index, and query engine.

    ``num_bins`` is always ``a * m``; ``total_payload_bytes`` counts stored
    value bytes only (keys and per-block tables are external overhead).
    """

    a: int
    m: int
    block_size_bytes: int
    n: int
    total_payload_bytes: int
    hash_seed: int

    def __post_init__(self):
        if not _is_power_of_two(self.a):
            raise ValueError(f"a must be a power of two >= 1, got {self.a}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.block_size_bytes < 64:
            raise ValueError(
                f"block_size_bytes must be >= 64, got {self.block_size_bytes}"
            )
        if self.block_size_bytes > 65536:
            raise ValueError("block_size_bytes must be <= 65536 (16-bit offsets)")
        if not 0 <= self.hash_seed <= MASK64:
            raise ValueError("hash_seed must fit in 64 bits")

    @property
    def num_bins(self) -> int:
        return self.a * self.m

    @property
    def lower_bits_width(self) -> int:
        return self.a.bit_length() - 1

    def mean_payload_bytes_per_block(self) -> float:
        """Average payload bytes actually stored per block (B-bar in bytes)."""
        return self.total_payload_bytes / self.m


@dataclass(frozen=True)
class TheoryModel:
    """Evaluator context for the expected-I/O formulas.

    ``payload_bits_per_block`` is the per-block payload budget the formula
    should assume; pass the raw block size for the idealized curves or the
    measured average for overhead-aware predictions.
    """

    params: StoreParams
    payload_bits_per_block: float

    def __post_init__(self):
        if self.payload_bits_per_block > 8 * self.params.block_size_bytes:
            raise ValueError("payload bits per block exceeds the block size")


def _mix64(x: int) -> int:
    # splitmix64 finalizer; full 64-bit avalanche
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def hash64(key: bytes, seed: int) -> int:
    """Keyed 64-bit hash of an 8-byte key."""
    if len(key) != KEY_BYTES:
        raise ValueError(f"keys must be exactly {KEY_BYTES} bytes")
    k = int.from_bytes(key, "little")
    return _mix64(k ^ _mix64(seed ^ 0x9E3779B97F4A7C15))


def hash_to_bin(key: bytes, seed: int, num_bins: int) -> int:
    """Map a key to a bin in 1..num_bins by fixed-point scaling.

    Scaling (rather than modulo) keeps the relative order of keys stable when
    ``num_bins`` changes, which store merging relies on: for any key,
    ``hash_to_bin(k, s, 2t)`` is ``2b-1`` or ``2b`` where ``b`` is the bin for
    range ``t``.
    """
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    return 1 + (hash64(key, seed) * num_bins >> 64)


def bin_for_hash(h: int, num_bins: int) -> int:
    """Bin for an already-computed 64-bit hash value."""
    return 1 + (h * num_bins >> 64)


def expected_blocks(theory: TheoryModel, object_bits: int) -> float:
    """Expected consecutive blocks fetched for an object of the given size.

    ``object_bits == 0`` gives the negative-query bound.
    """
    if theory.payload_bits_per_block <= 0:
        raise ValueError("payload_bits_per_block must be positive")
    if object_bits < 0:
        raise ValueError("object_bits must be >= 0")
    return 1.0 + object_bits / theory.payload_bits_per_block + 1.0 / theory.params.a


def expected_blocks_refined(
    theory: TheoryModel, object_bits: int, gcd_sizes_bits: int
) -> float:
    """Sharper expected-blocks bound using the common divisor of object sizes.

    ``gcd_sizes_bits`` is the greatest common divisor of the payload-per-block
    budget and all object sizes, in bits.  For identical object sizes dividing
    the block size the value approaches ``1 + 1/a``.
    """
    if gcd_sizes_bits < 1:
        raise ValueError("gcd_sizes_bits must be >= 1")
    p = theory.params
    n_bits = 8 * p.total_payload_bytes
    if n_bits == 0:
        raise ValueError("total payload is zero; refined bound undefined")
    b_bar = theory.payload_bits_per_block
    beta = p.n * b_bar / (n_bits * p.a)
    return 1.0 + (object_bits - gcd_sizes_bits + 1 - math.exp(-beta)) / b_bar + 1.0 / p.a


def ef_index_bits(m: int, a: int) -> int:
    """Exact bit count of the coded index sequence, excluding select support."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not _is_power_of_two(a):
        raise ValueError("a must be a power of two")
    return m * (2 + (a.bit_length() - 1)) + 1


def succincter_bound_bits_per_block(a: int) -> float:
    """Per-block space of the sparse-bit-vector representation (closed form)."""
    if a < 1:
        raise ValueError("a must be >= 1")
    return 1.4427 + math.log2(a + 1)


def sparse_vector_rate_bits_per_block(a: int) -> float:
    """Asymptotic exact rate log2 C((a+1)m, m) / m of the sparse bit vector.

    The closed-form bound above is this rate rounded up; the rate itself is
    what a bit-vector representation actually needs per block.
    """
    if a < 1:
        raise ValueError("a must be >= 1")
    return (a + 1) * math.log2(a + 1) - a * math.log2(a)


def mkphf_lower_bound_bits_per_block(k: int) -> float:
    """Bits per block that minimal k-perfect hashing provably needs."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 0.5 * math.log2(2 * math.pi * k)


def binomial_log_bounds(c: float, n: int) -> tuple[float, float]:
    """log2 of lower/upper bounds for C(c*n, n), valid whenever c*n is integral.

    Both bounds derive from Stirling's approximation; the bracket width shrinks
    like O(1/n).
    """
    if c <= 1:
        raise ValueError("c must be > 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    log2_f = 0.5 * math.log2(c / ((c - 1) * 2 * math.pi * n)) + n * (
        c * math.log2(c) - (c - 1) * math.log2(c - 1)
    )
    lower_factor = 1 - (c * c - c + 1) / (12 * c * (c - 1) * n)
    if lower_factor <= 0:
        raise ValueError("n too small for the lower-bound correction term")
    lower = log2_f + math.log2(lower_factor)
    upper = log2_f - (1 / (12 * n + 1)) * math.log2(math.e)
    return lower, upper
