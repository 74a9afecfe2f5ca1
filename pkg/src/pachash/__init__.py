"""Static packed hash table: variable-size objects in fixed-size blocks,
located with a tiny monotone index and a single contiguous block-range read."""

from .blocks import (
    BlockDevice,
    BlockImage,
    CorruptBlockError,
    FileBlockDevice,
    MemoryBlockDevice,
    StoreHeader,
    decode_block,
    encode_block,
)
from .builder import (
    BuildError,
    DuplicateKeyError,
    InputObject,
    build,
    build_to_file,
    iter_store_objects,
    merge,
    rebuild_index,
)
from .eliasfano import BlockRange, CorruptIndexError, EliasFanoIndex
from .entropy import EntropyCodedIndex
from .params import (
    StoreParams,
    TheoryModel,
    binomial_log_bounds,
    ef_index_bits,
    expected_blocks,
    expected_blocks_refined,
    hash64,
    hash_to_bin,
    mkphf_lower_bound_bits_per_block,
    sparse_vector_rate_bits_per_block,
    succincter_bound_bits_per_block,
)
from .store import AuditReport, IntegrityError, IoStats, QueryResult, Store, audit
from .vla import VlaStore
from .workload import WorkloadSpec, generate

__version__ = "1.0.0"

__all__ = [
    "AuditReport", "BlockDevice", "BlockImage", "BlockRange", "BuildError",
    "CorruptBlockError", "CorruptIndexError", "DuplicateKeyError",
    "EliasFanoIndex", "EntropyCodedIndex", "FileBlockDevice", "InputObject",
    "IntegrityError", "IoStats", "MemoryBlockDevice", "QueryResult", "Store",
    "StoreHeader", "StoreParams", "TheoryModel", "VlaStore", "WorkloadSpec",
    "audit", "binomial_log_bounds", "build", "build_to_file", "decode_block",
    "ef_index_bits", "encode_block", "expected_blocks",
    "expected_blocks_refined", "generate", "hash64", "hash_to_bin",
    "iter_store_objects", "merge", "mkphf_lower_bound_bits_per_block",
    "rebuild_index", "sparse_vector_rate_bits_per_block",
    "succincter_bound_bits_per_block",
]
