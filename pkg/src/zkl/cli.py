"""Command-line surface: compress, decompress, query, stats, generation,
and the traversal / parallel-decode benchmarks.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 corrupt input.
"""

from __future__ import annotations

import argparse
import multiprocessing
import sys
import time
from collections import deque

import numpy as np

from . import codec, graphstore
from .codec import EncoderParams, Handle
from .errors import (
    CorruptStreamError,
    FormatError,
    UnsupportedOperationError,
    ValidationError,
)
from .intcode import HybridConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CORRUPT = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_codec_flags(p):
    p.add_argument("--mode", choices=("full", "list"), default="list")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--window", type=int, default=32, metavar="W")
    p.add_argument("--max-chain", type=int, default=3, metavar="R")
    p.add_argument("--chunk", type=int, default=32, metavar="C")
    p.add_argument("--rle-threshold", type=int, default=3, metavar="L")
    p.add_argument("--iterations", type=int, default=2)


def _params(args) -> EncoderParams:
    return EncoderParams(
        mode=args.mode,
        hybrid=HybridConfig(args.k, args.i, args.j),
        W=args.window,
        R=args.max_chain,
        C=args.chunk,
        Lp=args.rle_threshold,
        iterations=args.iterations,
    )


def _load_graph(path: str, fmt: str) -> graphstore.Graph:
    if fmt == "csr":
        with open(path, "rb") as f:
            return graphstore.load_csr(f)
    with open(path, "r") as f:
        return graphstore.load_edge_list(f.read())


def _write_graph(g: graphstore.Graph, path: str, fmt: str) -> None:
    if fmt == "csr":
        with open(path, "wb") as f:
            graphstore.save_csr(g, f)
    else:
        with open(path, "w") as f:
            graphstore.write_edge_list(g, f)


def _cmd_compress(args) -> int:
    g = _load_graph(args.input, args.format)
    t0 = time.perf_counter()
    data = codec.encode_graph(g, _params(args))
    elapsed = time.perf_counter() - t0
    with open(args.output, "wb") as f:
        f.write(data)
    bpe = 8 * len(data) / g.m if g.m else float("inf")
    eps = g.m / elapsed if elapsed > 0 else float("inf")
    print(f"{len(data)} bytes, {bpe:.3f} bits/edge, {eps:.0f} edges/s")
    return EXIT_OK


def _cmd_decompress(args) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    g = codec.decode_graph(data)
    _write_graph(g, args.output, args.format)
    print(f"{g.n} nodes, {g.m} edges")
    return EXIT_OK


def _cmd_ls(args) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    h = codec.open_handle(data)
    t0 = time.perf_counter()
    lst = codec.neighbors(h, args.node)
    micros = (time.perf_counter() - t0) * 1e6
    for v in lst:
        print(v)
    print(f"{micros:.1f} us/adj list", file=sys.stderr)
    return EXIT_OK


def _cmd_stats(args) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    br = codec.stats(data)
    total = br["total"]
    for key in ("header", "degrees", "references", "blocks",
                "first_residuals", "residuals"):
        pct = 100.0 * br[key] / total if total else 0.0
        print(f"{key:16s} {br[key]:12d} bits  {pct:5.1f}%")
    print(f"{'total':16s} {total:12d} bits")
    return EXIT_OK


def _cmd_gen(args) -> int:
    g = graphstore.generate_copying_graph(
        args.nodes, seed=args.seed, avg_degree=args.avg_degree
    )
    _write_graph(g, args.output, args.format)
    print(f"{g.n} nodes, {g.m} edges")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def bfs_order(neigh, n: int, source: int = 0) -> list[int]:
    """Whole-graph BFS restarting from the lowest unvisited node."""
    if not 0 <= source < max(n, 1):
        raise ValueError(f"source {source} out of range")
    visited = np.zeros(n, dtype=bool)
    order = []
    starts = [source] + [u for u in range(n) if u != source]
    for s in starts:
        if visited[s]:
            continue
        visited[s] = True
        q = deque([s])
        while q:
            u = q.popleft()
            order.append(u)
            for v in neigh(u):
                if not visited[v]:
                    visited[v] = True
                    q.append(v)
    return order


def dfs_order(neigh, n: int, source: int = 0) -> list[int]:
    """Whole-graph DFS (explicit stack, neighbors in stored order)."""
    if not 0 <= source < max(n, 1):
        raise ValueError(f"source {source} out of range")
    visited = np.zeros(n, dtype=bool)
    order = []
    starts = [source] + [u for u in range(n) if u != source]
    for s in starts:
        if visited[s]:
            continue
        stack = [s]
        while stack:
            u = stack.pop()
            if visited[u]:
                continue
            visited[u] = True
            order.append(u)
            for v in reversed(neigh(u)):
                if not visited[v]:
                    stack.append(int(v))
    return order


def _traversal_neigh(data: bytes):
    """Per-list access when the container supports it, else a decoded copy."""
    try:
        h = codec.open_handle(data)
    except UnsupportedOperationError:
        g = codec.decode_graph(data)
        return lambda u: g.neighbors(u).tolist(), g.n
    cache: dict = {}
    return lambda u: codec.neighbors(h, u, cache), h.n


def _cmd_bench_traverse(args, kind: str) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    neigh, n = _traversal_neigh(data)
    t0 = time.perf_counter()
    order = (bfs_order if kind == "bfs" else dfs_order)(neigh, n, args.source)
    elapsed = time.perf_counter() - t0
    print(f"{kind} visited {len(order)} nodes in {elapsed:.3f} s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parallel edge sum (fork-based: each worker decodes a contiguous chunk range)
# ---------------------------------------------------------------------------

_FORK_STATE: dict = {}


def _sum_chunk_range(handle: Handle, lo: int, hi: int) -> int:
    h = handle.header
    p = h.params
    C = p.C if p.C > 0 else h.n
    ext: dict = {}
    total = 0
    for c in range(lo, hi):
        first = c * C
        count = min(C, h.n - first)
        start_bit = int(h.chunk_bits[c])
        while True:
            res = codec._decode_chunk_span(handle, start_bit, first, count, ext)
            if res[0] == 0:
                break
            needed = res[1]
            ext[needed] = codec._decode_prefix(handle, needed, ext)
        _, offsets, targets, _, _ = res
        total += int(targets.sum())
        # retain a window of recent lists for the next chunk's references
        for idx in range(max(count - p.W, 0), count):
            ext[first + idx] = targets[
                int(offsets[idx]) : int(offsets[idx + 1])
            ].tolist()
        cutoff = first + count - p.W
        for stale in [x for x in ext if x < cutoff]:
            del ext[stale]
    return total


def _edgesum_worker(rng) -> int:
    return _sum_chunk_range(_FORK_STATE["handle"], rng[0], rng[1])


def edge_sum_parallel(data: bytes, threads: int) -> int:
    """Sum of destination ids over all edges, decoded by `threads` workers."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    handle = codec.open_handle(data)
    nchunks = len(handle.header.chunk_bits)
    if nchunks == 0:
        return 0
    bounds = np.linspace(0, nchunks, min(threads, nchunks) + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    if threads == 1 or len(ranges) == 1:
        return sum(_sum_chunk_range(handle, a, b) for a, b in ranges)
    _FORK_STATE["handle"] = handle
    try:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(len(ranges)) as pool:
            parts = pool.map(_edgesum_worker, ranges)
    finally:
        _FORK_STATE.clear()
    return sum(parts)


def _cmd_bench_edgesum(args) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    t0 = time.perf_counter()
    total = edge_sum_parallel(data, args.threads)
    elapsed = time.perf_counter() - t0
    print(f"edge sum {total} with {args.threads} threads in {elapsed:.3f} s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="zkl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", parents=[], help="compress an edge list")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=("edges", "csr"), default="edges")
    _add_codec_flags(p)

    p = sub.add_parser("decompress", help="expand a container")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=("edges", "csr"), default="edges")

    p = sub.add_parser("ls", help="print one adjacency list")
    p.add_argument("input")
    p.add_argument("node", type=int)

    p = sub.add_parser("stats", help="per-stream bit breakdown")
    p.add_argument("input")

    p = sub.add_parser("gen", help="generate a synthetic graph")
    p.add_argument("nodes", type=int)
    p.add_argument("output")
    p.add_argument("--format", choices=("edges", "csr"), default="edges")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--avg-degree", type=float, default=8.0)

    for kind in ("bench-bfs", "bench-dfs"):
        p = sub.add_parser(kind, help=f"time a {kind[6:].upper()} traversal")
        p.add_argument("input")
        p.add_argument("--source", type=int, default=0)

    p = sub.add_parser("bench-edgesum", help="parallel decode benchmark")
    p.add_argument("input")
    p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "compress":
            return _cmd_compress(args)
        if args.command == "decompress":
            return _cmd_decompress(args)
        if args.command == "ls":
            return _cmd_ls(args)
        if args.command == "stats":
            return _cmd_stats(args)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command in ("bench-bfs", "bench-dfs"):
            return _cmd_bench_traverse(args, args.command[6:])
        if args.command == "bench-edgesum":
            return _cmd_bench_edgesum(args)
        parser.error(f"unknown command {args.command}")
    except (CorruptStreamError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CORRUPT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, UnsupportedOperationError, ValueError,
            IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
