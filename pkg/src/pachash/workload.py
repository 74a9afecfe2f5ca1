"""Deterministic synthetic workload generation for the measurement harness."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .builder import InputObject

DISTRIBUTIONS = ("identical", "normal", "uniform")


@dataclass(frozen=True)
class WorkloadSpec:
    """Object-count plus size-distribution recipe, reproducible from the seed.

    ``normal`` draws sizes with mean ``size`` and variance ``size / 5``,
    rounded and clamped to >= 1 byte.  ``uniform`` draws from [lo, hi].
    """

    n: int
    distribution: str = "normal"
    size: int = 64
    lo: int = 1
    hi: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.distribution in ("identical", "normal") and self.size < 1:
            raise ValueError("size must be >= 1")
        if self.distribution == "uniform" and not 1 <= self.lo <= self.hi:
            raise ValueError("need 1 <= lo <= hi")

    def draw_size(self, rng: random.Random) -> int:
        if self.distribution == "identical":
            return self.size
        if self.distribution == "normal":
            return max(1, round(rng.gauss(self.size, (self.size / 5) ** 0.5)))
        return rng.randint(self.lo, self.hi)


def generate(spec: WorkloadSpec) -> list[InputObject]:
    """Unique random 8-byte keys with sizes drawn from the spec."""
    rng = random.Random(spec.seed)
    keys = unique_keys(spec.n, rng)
    return [
        InputObject(key, rng.randbytes(spec.draw_size(rng))) for key in keys
    ]


def unique_keys(count: int, rng: random.Random,
                excluding: set | None = None) -> list[bytes]:
    seen = set() if excluding is None else set(excluding)
    out = []
    while len(out) < count:
        key = rng.getrandbits(64).to_bytes(8, "little")
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out
