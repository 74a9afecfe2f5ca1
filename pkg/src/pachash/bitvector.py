"""Packed bit vector with select0/select1 support.

The select directories sample, for every ``SAMPLE_RATE``-th zero/one, the word
holding it together with the running count before that word.  A lookup starts
at the nearest sample and scans at most ``SAMPLE_RATE`` bits of whole words
with popcounts.  The samples are rebuilt deterministically from the raw bits,
so only the bits themselves ever need to be serialized.
"""

from __future__ import annotations

WORD_BITS = 64
SAMPLE_RATE = 2048


class BitVectorWithSelect:
    def __init__(self, length: int):
        if length < 0:
            raise ValueError("length must be >= 0")
        self.length = length
        self.words = [0] * ((length + WORD_BITS - 1) // WORD_BITS)
        self._samples0: list[tuple[int, int]] = []
        self._samples1: list[tuple[int, int]] = []
        self._built = False

    @classmethod
    def from_one_positions(cls, length: int, positions) -> "BitVectorWithSelect":
        bv = cls(length)
        for p in positions:
            bv.set(p)
        bv.build()
        return bv

    @classmethod
    def from_bytes(cls, length: int, data: bytes) -> "BitVectorWithSelect":
        bv = cls(length)
        for w in range(len(bv.words)):
            bv.words[w] = int.from_bytes(data[8 * w : 8 * w + 8], "little")
        if length % WORD_BITS:
            bv.words[-1] &= (1 << (length % WORD_BITS)) - 1
        bv.build()
        return bv

    def to_bytes(self) -> bytes:
        return b"".join(w.to_bytes(8, "little") for w in self.words)

    def set(self, pos: int) -> None:
        if not 0 <= pos < self.length:
            raise IndexError(f"bit position {pos} out of range")
        self.words[pos // WORD_BITS] |= 1 << (pos % WORD_BITS)
        self._built = False

    def get(self, pos: int) -> bool:
        if not 0 <= pos < self.length:
            raise IndexError(f"bit position {pos} out of range")
        return (self.words[pos // WORD_BITS] >> (pos % WORD_BITS)) & 1 == 1

    @property
    def one_count(self) -> int:
        return self._ones

    @property
    def zero_count(self) -> int:
        return self.length - self._ones

    def build(self) -> None:
        """Rebuild the select samples; must be called after the last set()."""
        self._samples0 = [(0, 0)]
        self._samples1 = [(0, 0)]
        seen0 = seen1 = 0
        for wi, w in enumerate(self.words):
            wlen = min(WORD_BITS, self.length - wi * WORD_BITS)
            ones = (w & ((1 << wlen) - 1)).bit_count()
            zeros = wlen - ones
            # sample k points at the word holding the (k*SAMPLE_RATE + 1)-th hit
            while seen0 + zeros > len(self._samples0) * SAMPLE_RATE:
                self._samples0.append((wi, seen0))
            while seen1 + ones > len(self._samples1) * SAMPLE_RATE:
                self._samples1.append((wi, seen1))
            seen0 += zeros
            seen1 += ones
        self._ones = seen1
        self._built = True

    def directory_bits(self) -> int:
        """Size of the auxiliary select directories if packed (bits)."""
        return 2 * WORD_BITS * (len(self._samples0) + len(self._samples1))

    def select0(self, r: int) -> int:
        """Position (0-based) of the r-th 0-bit, r being 1-based."""
        return self._select(r, ones=False)

    def select1(self, r: int) -> int:
        """Position (0-based) of the r-th 1-bit, r being 1-based."""
        return self._select(r, ones=True)

    def _select(self, r: int, ones: bool) -> int:
        if not self._built:
            raise RuntimeError("build() must be called before select queries")
        total = self._ones if ones else self.length - self._ones
        if not 1 <= r <= total:
            raise IndexError(f"select rank {r} out of range 1..{total}")
        samples = self._samples1 if ones else self._samples0
        wi, before = samples[(r - 1) // SAMPLE_RATE]
        remaining = r - before
        words = self.words
        last = len(words) - 1
        tail_mask = (1 << (self.length - last * WORD_BITS)) - 1
        while True:
            w = words[wi] if ones else ~words[wi]
            w &= tail_mask if wi == last else (1 << WORD_BITS) - 1
            cnt = w.bit_count()
            if cnt >= remaining:
                return wi * WORD_BITS + _nth_set_bit(w, remaining)
            remaining -= cnt
            wi += 1


def _nth_set_bit(word: int, n: int) -> int:
    """Offset of the n-th (1-based) set bit within a word."""
    for _ in range(n - 1):
        word &= word - 1
    return (word & -word).bit_length() - 1
