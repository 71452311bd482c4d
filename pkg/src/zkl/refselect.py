"""Reference-list selection.

Builds candidate arcs (node -> earlier node within the window, weighted by
estimated bits saved), takes the per-node greedy optimum, and in list mode
prunes it with a bounded-chain dynamic program plus greedy extension, which
together guarantee a (1 - 1/(R+1)) approximation of the best bounded forest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._kernels.common import (
    CTX_BLOCK_COUNT,
    CTX_BLOCK_EVEN,
    CTX_BLOCK_FIRST,
    CTX_BLOCK_ODD,
    CTX_FIRST_RESIDUAL,
    CTX_REF,
    CTX_RESIDUAL,
    CTX_ZERO_RUN,
    NUM_CONTEXTS,
)
from .graphstore import Graph
from .intcode import HybridConfig

# streams that take part in gain estimation, in kernel argument order
_STREAMS = ("ref", "bcount", "bfirst", "beven", "bodd", "fres", "res")
_STREAM_CTX = {
    "ref": (CTX_REF, CTX_REF + 32),
    "bcount": (CTX_BLOCK_COUNT, CTX_BLOCK_COUNT + 1),
    "bfirst": (CTX_BLOCK_FIRST, CTX_BLOCK_FIRST + 1),
    "beven": (CTX_BLOCK_EVEN, CTX_BLOCK_EVEN + 1),
    "bodd": (CTX_BLOCK_ODD, CTX_BLOCK_ODD + 1),
    "fres": (CTX_FIRST_RESIDUAL, CTX_FIRST_RESIDUAL + 32),
    "res": (CTX_RESIDUAL, CTX_RESIDUAL + 32),
}
_SMOOTHING = 0.5


class CostModel:
    """Per-stream fractional bit costs, indexed by hybrid symbol.

    Raw-bit widths are folded into the tables, so the cost of coding value v
    on stream S is simply table[S][symbol(v)].
    """

    def __init__(self, cfg: HybridConfig, tables: dict[str, np.ndarray]):
        self.cfg = cfg
        self.tables = tables

    @classmethod
    def uniform(cls, cfg: HybridConfig, n: int) -> "CostModel":
        """Fixed first-iteration model: equal probability for every symbol."""
        value_bits = max((2 * max(n, 2)).bit_length(), cfg.k + 1)
        nsyms = cfg.alphabet_size(50)
        nbits = K.hybrid_nbits_lut(cfg.k, cfg.i, cfg.j, nsyms).astype(np.float64)
        base = math.log2(cfg.alphabet_size(value_bits))
        table = base + nbits
        return cls(cfg, {s: table for s in _STREAMS})

    @classmethod
    def from_token_stream(cls, cfg: HybridConfig, ctx: np.ndarray,
                          sym: np.ndarray) -> "CostModel":
        """Model trained on a previous iteration's tokenization; context
        buckets of each stream are merged, with light add-alpha smoothing."""
        nsyms = cfg.alphabet_size(50)
        nbits = K.hybrid_nbits_lut(cfg.k, cfg.i, cfg.j, nsyms).astype(np.float64)
        tables = {}
        for stream in _STREAMS:
            lo, hi = _STREAM_CTX[stream]
            sel = sym[(ctx >= lo) & (ctx < hi)]
            counts = np.bincount(sel, minlength=nsyms).astype(np.float64)
            total = counts.sum() + _SMOOTHING * nsyms
            probs = (counts + _SMOOTHING) / total
            tables[stream] = -np.log2(probs) + nbits
        return cls(cfg, tables)

    def estimate_bits(self, stream: str, value: int) -> float:
        sym, _, _ = K.hybrid_encode_array(np.array([value], dtype=np.uint64),
                                          self.cfg.k, self.cfg.i, self.cfg.j)
        return float(self.tables[stream][int(sym[0])])


@dataclass
class CandidateArcs:
    """Positive-gain (node, reference) arcs, grouped by node, r ascending."""

    n: int
    node: np.ndarray  # int64
    r: np.ndarray  # int32
    gain: np.ndarray  # float64


@dataclass
class ReferenceForest:
    """Chosen reference per node (0 = none) with the arc's gain."""

    ref: np.ndarray  # int32
    gain: np.ndarray  # float64

    @property
    def weight(self) -> float:
        return float(self.gain[self.ref > 0].sum())

    def chain_lengths(self) -> np.ndarray:
        """Hops from each node to the root of its reference chain."""
        n = len(self.ref)
        depth = np.zeros(n, dtype=np.int64)
        for u in range(n):
            if self.ref[u] > 0:
                depth[u] = depth[u - int(self.ref[u])] + 1
        return depth


def build_candidates(g: Graph, W: int, cost_model: CostModel) -> CandidateArcs:
    """All window arcs whose block-copy encoding beats explicit coding."""
    t = cost_model.tables
    node, r, gain = K.candidate_gains(
        g.offsets, g.targets, W, cost_model.cfg.k, cost_model.cfg.i,
        cost_model.cfg.j, t["ref"], t["bcount"], t["bfirst"], t["beven"],
        t["bodd"], t["fres"], t["res"],
    )
    return CandidateArcs(g.n, node, r, gain)


def greedy_forest(c: CandidateArcs) -> ReferenceForest:
    """Per-node argmax of gain (ties to the smallest r): optimal when chain
    lengths are unconstrained, since the out-degree bound is per node."""
    ref = np.zeros(c.n, dtype=np.int32)
    gain = np.zeros(c.n, dtype=np.float64)
    if len(c.node):
        best = np.zeros(c.n, dtype=np.float64)
        np.maximum.at(best, c.node, c.gain)
        hit = np.flatnonzero(c.gain == best[c.node])
        # arcs are grouped by node with r ascending: first hit per node wins
        _, first = np.unique(c.node[hit], return_index=True)
        pick = hit[first]
        ref[c.node[pick]] = c.r[pick]
        gain[c.node[pick]] = c.gain[pick]
    return ReferenceForest(ref, gain)


def bounded_dp(f: ReferenceForest, R: int) -> ReferenceForest:
    """Maximum-weight sub-forest of `f` with no reference chain longer than R.

    Bottom-up pass: for each node y with parent t, either y's subtree stays
    independent (budget R) or the arc (y, t) is taken and y's budget drops
    by one.  Per-(node, budget) choices are recorded and unwound top-down.
    O(nR) time and space.
    """
    if R < 1:
        raise ValueError("chain bound R must be >= 1")
    n = len(f.ref)
    # wt[i][u]: best weight of u's subtree when u may head chains of length <= i
    wt = np.zeros((R + 1, n), dtype=np.float64)
    take = np.zeros((R + 1, n), dtype=bool)
    ref = f.ref
    gain = f.gain
    for y in range(n - 1, -1, -1):
        r = int(ref[y])
        if r == 0:
            continue
        t = y - r
        w = float(gain[y])
        detached = wt[R, y]
        wt[0, t] += detached
        for i in range(1, R + 1):
            attached = w + wt[i - 1, y]
            if attached > detached:
                wt[i, t] += attached
                take[i, y] = True
            else:
                wt[i, t] += detached
    out_ref = np.zeros(n, dtype=np.int32)
    out_gain = np.zeros(n, dtype=np.float64)
    budget = np.full(n, R, dtype=np.int32)
    for y in range(n):
        r = int(ref[y])
        if r == 0:
            continue
        t = y - r
        if take[budget[t], y]:
            out_ref[y] = r
            out_gain[y] = gain[y]
            budget[y] = budget[t] - 1
    return ReferenceForest(out_ref, out_gain)


def greedy_extend(h: ReferenceForest, c: CandidateArcs, R: int,
                  f: ReferenceForest | None = None) -> ReferenceForest:
    """Fill nodes left unreferenced by the DP with candidate arcs that keep
    every chain within R, in decreasing gain order."""
    n = len(h.ref)
    ref = h.ref.copy()
    gain = h.gain.copy()
    # subtree heights of the current forest
    down = np.zeros(n, dtype=np.int32)
    for y in range(n - 1, -1, -1):
        if ref[y] > 0:
            t = y - int(ref[y])
            if down[y] + 1 > down[t]:
                down[t] = down[y] + 1
    skip_f = f.ref if f is not None else None
    cand = np.flatnonzero(ref[c.node] == 0)
    if skip_f is not None and len(cand):
        cand = cand[skip_f[c.node[cand]] != c.r[cand]]
    order = cand[np.lexsort((c.node[cand], c.r[cand], -c.gain[cand]))]
    for a in order:
        u = int(c.node[a])
        if ref[u] != 0:
            continue
        v = u - int(c.r[a])
        up = 0
        x = v
        while ref[x] > 0:
            up += 1
            x -= int(ref[x])
        if int(down[u]) + 1 + up > R:
            continue
        ref[u] = int(c.r[a])
        gain[u] = float(c.gain[a])
        dist = int(down[u]) + 1
        x = v
        while True:
            if down[x] < dist:
                down[x] = dist
            else:
                break
            if ref[x] == 0:
                break
            x -= int(ref[x])
            dist += 1
    return ReferenceForest(ref, gain)


def select_references(g: Graph, params) -> ReferenceForest:
    """Iterated cost-model reference selection.

    `params` carries mode, hybrid, W, R, C, Lp and iterations (see the codec
    module).  Iteration 1 uses the fixed uniform model; later iterations
    retrain the model on the previous iteration's token stream.  Full mode
    keeps the unbounded greedy forest; list mode applies the DP and greedy
    extension.
    """
    if params.iterations < 1:
        raise ValueError("need at least one iteration")
    cfg = params.hybrid
    list_mode = params.mode == "list"
    forest = None
    for it in range(params.iterations):
        if it == 0:
            model = CostModel.uniform(cfg, g.n)
        else:
            ctx, val, _ = K.tokenize(g.offsets, g.targets, forest.ref,
                                     cfg.k, cfg.i, cfg.j, params.C, params.Lp)
            sym, _, _ = K.hybrid_encode_array(val, cfg.k, cfg.i, cfg.j)
            model = CostModel.from_token_stream(cfg, ctx, sym)
        cand = build_candidates(g, params.W, model)
        forest = greedy_forest(cand)
        if list_mode:
            pruned = bounded_dp(forest, params.R)
            forest = greedy_extend(pruned, cand, params.R, f=forest)
    return forest
