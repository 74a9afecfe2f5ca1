"""Command-line front end: build, query, bench, merge, inspect, and the
positional-array commands, plus synthetic input generation."""

from __future__ import annotations

import argparse
import random
import struct
import sys

from . import builder, params as pp, vla, workload
from .blocks import INDEX_KIND_EC, INDEX_KIND_EF, FileBlockDevice, StoreHeader, decode_block
from .store import Store, write_csv

_INDEX_KINDS = {"ef": INDEX_KIND_EF, "ec": INDEX_KIND_EC}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pachash",
        description="Static packed hash table over fixed-size blocks",
    )
    sub = parser.add_subparsers(required=True)

    def common_store_flags(p):
        p.add_argument("--a", type=int, default=8,
                       help="bins per block (power of two, default 8)")
        p.add_argument("--block-size", type=int, default=4096,
                       help="block size in bytes (default 4096)")
        p.add_argument("--index", choices=("ef", "ec"), default="ef",
                       help="index representation (default ef)")
        p.add_argument("--seed", type=int, default=0, help="hash seed")

    p = sub.add_parser("generate", help="emit a synthetic input file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dist", choices=workload.DISTRIBUTIONS, default="normal")
    p.add_argument("--size", type=int, default=64,
                   help="object size (identical) or mean size (normal)")
    p.add_argument("--lo", type=int, default=1)
    p.add_argument("--hi", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build", help="build a store from an input file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("bin", "text"), default="bin",
                   help="bin: [key 8][len u32][value]; text: hexkey TAB value")
    p.add_argument("--out", required=True)
    common_store_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="look up one key")
    p.add_argument("--store", required=True)
    p.add_argument("--key", required=True, help="16 hex digits")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run a measured query workload")
    p.add_argument("--store", required=True)
    p.add_argument("--queries", type=int, default=100000)
    p.add_argument("--present-fraction", type=float, default=1.0)
    p.add_argument("--in-flight", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("merge", help="merge two stores into one")
    p.add_argument("--store-a", required=True)
    p.add_argument("--store-b", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--index", choices=("ef", "ec"), default="ef")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("rebuild-index",
                       help="recompute the index from the data blocks")
    p.add_argument("--store", required=True)
    p.add_argument("--out", help="write the store with the rebuilt index here")
    p.set_defaults(func=cmd_rebuild_index)

    p = sub.add_parser("inspect", help="dump header and per-block tables")
    p.add_argument("--store", required=True)
    p.add_argument("--blocks", type=int, default=None,
                   help="limit the number of blocks dumped")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("vla-build",
                       help="build a position-indexed array from [len u32][bytes] records")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--block-size", type=int, default=4096)
    p.set_defaults(func=cmd_vla_build)

    p = sub.add_parser("vla-get", help="print the i-th stored object")
    p.add_argument("--store", required=True)
    p.add_argument("--position", type=int, required=True)
    p.set_defaults(func=cmd_vla_get)

    return parser


def cmd_generate(args) -> int:
    spec = workload.WorkloadSpec(
        n=args.n, distribution=args.dist, size=args.size,
        lo=args.lo, hi=args.hi, seed=args.seed,
    )
    objects = workload.generate(spec)
    with open(args.out, "wb") as f:
        builder.write_binary_records(f, objects)
    print(f"wrote {len(objects)} records to {args.out}")
    return 0


def _read_input(path: str, fmt: str):
    if fmt == "bin":
        with open(path, "rb") as f:
            return list(builder.read_binary_records(f))
    with open(path, "r", encoding="utf-8") as f:
        return list(builder.read_text_records(f))


def cmd_build(args) -> int:
    objects = _read_input(args.input, args.format)
    builder.build_to_file(
        objects, args.out,
        a=args.a, block_size_bytes=args.block_size, seed=args.seed,
        index_kind=_INDEX_KINDS[args.index],
    )
    store = Store.open(args.out)
    try:
        h = store.header
        print(f"built {args.out}: n={h.n} m={h.m} a={h.a} "
              f"block_size={h.block_size_bytes} index={args.index}")
    finally:
        store.close()
    return 0


def cmd_query(args) -> int:
    key = bytes.fromhex(args.key)
    store = Store.open(args.store)
    try:
        res = store.query(key)
    finally:
        store.close()
    if res.error:
        print(f"error: {res.error}", file=sys.stderr)
        return 1
    if not res.found:
        print("not_found")
        return 2
    print(res.value.hex())
    return 0


def cmd_bench(args) -> int:
    if not 0.0 <= args.present_fraction <= 1.0:
        raise ValueError("--present-fraction must be in [0, 1]")
    store = Store.open(args.store)
    try:
        h = store.header
        rng = random.Random(args.seed)
        present = [
            obj.key
            for obj in builder.iter_store_objects(h, _block_reader(store))
        ]
        n_present = round(args.queries * args.present_fraction)
        keys = [(rng.choice(present), True) for _ in range(n_present)] if present else []
        absent = workload.unique_keys(args.queries - len(keys), rng,
                                      excluding=set(present))
        keys += [(k, False) for k in absent]
        rng.shuffle(keys)
        theory = pp.TheoryModel(
            params=pp.StoreParams(h.a, h.m, h.block_size_bytes, h.n,
                                  h.total_payload_bytes, h.hash_seed),
            payload_bits_per_block=8 * h.block_size_bytes,
        )
        stats, rows = store.measure_io(keys, theory)
        with open(args.out, "w", newline="") as f:
            write_csv(rows, f)
        print(f"queries={stats.query_count} mean_blocks={stats.mean_blocks:.4f} "
              f"mean_bytes={stats.mean_bytes:.2f}")
    finally:
        store.close()
    return 0


def _block_reader(store):
    bs = store.header.block_size_bytes
    return lambda i: store.device.read_raw(i * bs, bs)


def cmd_merge(args) -> int:
    sa = Store.open(args.store_a)
    sb = Store.open(args.store_b)
    try:
        data, _ = builder.merge(
            sa.header, _block_reader(sa), sb.header, _block_reader(sb),
            index_kind=_INDEX_KINDS[args.index],
        )
    finally:
        sa.close()
        sb.close()
    with open(args.out, "wb") as f:
        f.write(data)
    merged = Store.open(args.out)
    try:
        print(f"merged into {args.out}: n={merged.header.n} m={merged.header.m}")
    finally:
        merged.close()
    return 0


def cmd_rebuild_index(args) -> int:
    store = Store.open(args.store)
    try:
        h = store.header
        rebuilt = builder.rebuild_index(h, _block_reader(store))
        stored = store.device.read_raw(
            h.index_section_offset, store.device.size() - h.index_section_offset
        )
        identical = (h.index_kind == INDEX_KIND_EF
                     and rebuilt.to_bytes() == stored)
        if args.out:
            with open(args.out, "wb") as f:
                f.write(store.device.read_raw(0, h.index_section_offset))
                f.write(rebuilt.to_bytes())
        print("rebuilt index "
              + ("matches the stored one" if identical
                 else "written (stored index uses a different representation)"
                 if h.index_kind != INDEX_KIND_EF
                 else "DIFFERS from the stored one"))
        return 0 if identical or h.index_kind != INDEX_KIND_EF else 1
    finally:
        store.close()


def cmd_inspect(args) -> int:
    store = Store.open(args.store)
    try:
        h = store.header
        print(f"magic=PCHSTOR1 version=1 block_size={h.block_size_bytes} "
              f"a={h.a} m={h.m} n={h.n} payload={h.total_payload_bytes} "
              f"seed={h.hash_seed} index_kind={h.index_kind} "
              f"index_offset={h.index_section_offset}")
        limit = h.m if args.blocks is None else min(args.blocks, h.m)
        bs = h.block_size_bytes
        for i in range(1, limit + 1):
            img = decode_block(store.device.read_raw(i * bs, bs), i)
            print(f"block {i}: entries={img.entry_count} "
                  f"tail_padding={img.tail_padding}")
            for key, off in img.entries:
                print(f"  {key.hex()} @ {off}")
    finally:
        store.close()
    return 0


def cmd_vla_build(args) -> int:
    objects = []
    with open(args.input, "rb") as f:
        while True:
            raw = f.read(4)
            if not raw:
                break
            if len(raw) != 4:
                raise builder.BuildError("truncated record length")
            (ln,) = struct.unpack("<I", raw)
            data = f.read(ln)
            if len(data) != ln:
                raise builder.BuildError("truncated record")
            objects.append(data)
    vla.build_to_file(objects, args.out, block_size_bytes=args.block_size)
    print(f"built {args.out}: n={len(objects)}")
    return 0


def cmd_vla_get(args) -> int:
    store = vla.VlaStore.open(args.store)
    try:
        value = store.get(args.position)
    finally:
        store.close()
    sys.stdout.buffer.write(value)
    sys.stdout.buffer.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
