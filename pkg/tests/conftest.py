import random
from dataclasses import dataclass

import pytest

import pachash as ph
from pachash.workload import unique_keys

# one line per acceptance criterion, shown after the test run
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@dataclass
class CorpusStore:
    """One randomly built store plus everything needed to check it."""

    objects: list
    data: bytes
    a: int
    block_size: int
    seed: int


def _draw_objects(rng):
    n = rng.randint(0, 70)
    shape = rng.randrange(5)
    sizes = []
    for _ in range(n):
        if shape == 0:
            sizes.append(48)
        elif shape == 1:
            sizes.append(max(0, round(rng.gauss(60, 25))))
        elif shape == 2:
            sizes.append(rng.randint(0, 200))
        elif shape == 3:
            sizes.append(rng.choice([0, 1, 2, 40, 90]))
        else:
            sizes.append(rng.randint(0, 60))
    if n and shape == 4:
        # guarantee at least one object spanning >= 3 blocks
        sizes[rng.randrange(n)] = rng.randint(3 * 256, 4 * 256)
    keys = unique_keys(n, rng)
    return [
        ph.InputObject(k, rng.randbytes(s)) for k, s in zip(keys, sizes)
    ]


@pytest.fixture(scope="session")
def store_corpus():
    """1000 random stores with mixed size distributions.

    Shared by the round-trip/audit, index-rebuild, and compressed-index
    equivalence checks so the (cheap) builds run once per session.
    """
    rng = random.Random(0xC0FFEE)
    corpus = []
    for trial in range(1000):
        objs = _draw_objects(rng)
        a = rng.choice([1, 2, 4, 8])
        bs = rng.choice([64, 128, 256])
        data, _ = ph.build(objs, a=a, block_size_bytes=bs, seed=trial)
        corpus.append(CorpusStore(objs, data, a, bs, trial))
    return corpus
