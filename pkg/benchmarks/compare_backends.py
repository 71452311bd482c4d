#!/usr/bin/env python3
"""Compare the pure-Python and compiled kernel backends on the hot paths.

Runs tokenization, entropy coding, whole-graph decode and per-list access on
a synthetic graph through both backend modules and prints a speedup table.

    python benchmarks/compare_backends.py [--nodes N] [--seed S]
"""

import argparse
import time

import numpy as np

from zkl import refselect
from zkl.codec import EncoderParams, _histograms
from zkl.entropy import ContextSet
from zkl.graphstore import generate_copying_graph
from zkl._kernels import pure

try:
    from zkl._kernels import _fast as fast
except ImportError:
    fast = None


def timed(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(backend, g, params, forest):
    cfg = params.hybrid
    res = {}
    t, (ctx, val, chunk_starts) = timed(lambda: backend.tokenize(
        g.offsets, g.targets, forest.ref, cfg.k, cfg.i, cfg.j,
        params.C, params.Lp))
    res["tokenize"] = t
    t, (sym, nbits, raw) = timed(lambda: backend.hybrid_encode_array(
        val, cfg.k, cfg.i, cfg.j))
    res["hybrid encode"] = t

    dists = ContextSet.from_histograms("huffman", _histograms(ctx, sym))
    lengths, revcodes, hfirst, hcount, hbase, hsyms = dists.huffman_tables()
    t, (payload, chunk_bits) = timed(lambda: backend.huff_encode(
        ctx, sym, nbits, raw, lengths, revcodes, chunk_starts))
    res["huffman encode"] = t

    lut = pure.hybrid_nbits_lut(cfg.k, cfg.i, cfg.j, dists.alphabet_size)
    t, decoded = timed(lambda: backend.decode_graph_huff(
        payload, 0, cfg.k, cfg.i, cfg.j, params.C, params.Lp, params.W,
        g.n, 0, g.n, {}, hfirst, hcount, hbase, hsyms, lut))
    assert decoded[0] == 0
    res["graph decode"] = t

    model = refselect.CostModel.uniform(cfg, g.n)
    tabs = model.tables
    t, _ = timed(lambda: backend.candidate_gains(
        g.offsets, g.targets, params.W, cfg.k, cfg.i, cfg.j, tabs["ref"],
        tabs["bcount"], tabs["bfirst"], tabs["beven"], tabs["bodd"],
        tabs["fres"], tabs["res"]), repeat=1)
    res["candidate gains"] = t
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = generate_copying_graph(args.nodes, seed=args.seed)
    params = EncoderParams(mode="list", iterations=1)
    forest = refselect.select_references(g, params)
    print(f"graph: {g.n} nodes, {g.m} edges\n")

    rows_pure = bench(pure, g, params, forest)
    if fast is None:
        print("compiled backend unavailable; pure timings only")
        for name, t in rows_pure.items():
            print(f"{name:18s} {t * 1000:10.1f} ms")
        return
    rows_fast = bench(fast, g, params, forest)
    print(f"{'kernel':18s} {'pure':>10s} {'compiled':>10s} {'speedup':>9s}")
    for name in rows_pure:
        tp, tf = rows_pure[name], rows_fast[name]
        print(f"{name:18s} {tp * 1000:8.1f} ms {tf * 1000:8.1f} ms "
              f"{tp / tf:8.1f}x")


if __name__ == "__main__":
    main()
