"""Container format and adjacency-list codec.

Ties everything together: reference selection, per-list tokenization
(degree deltas, reference + block coding, improved residual deltas,
zero-gap run lengths), multi-context entropy coding, the container
header, full decompression, and per-list random access in list mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import graphstore, refselect
from ._kernels.common import (
    CTX_BLOCK_COUNT,
    CTX_BLOCK_EVEN,
    CTX_BLOCK_FIRST,
    CTX_BLOCK_ODD,
    CTX_BUCKETS,
    CTX_DEGREE,
    CTX_FIRST_RESIDUAL,
    CTX_REF,
    CTX_RESIDUAL,
    CTX_ZERO_RUN,
    NUM_CONTEXTS,
)
from .entropy import (
    ContextSet,
    Histogram,
    deserialize_distributions,
    serialize_distributions,
)
from .errors import (
    CorruptStreamError,
    FormatError,
    UnsupportedOperationError,
    ValidationError,
)
from .graphstore import Graph
from .intcode import HybridConfig
from .varint import read_uvarint, write_uvarint

MAGIC = b"ZKL1"
VERSION = 1

# re-exported: block splitting belongs to the codec's public surface
compute_blocks = K.compute_blocks


@dataclass(frozen=True)
class EncoderParams:
    """Knobs of the encoder; 0 stands for "unbounded" in C and Lp.

    Full mode uses the ANS backend and disables chunking and zero-run
    RLE; list mode uses Huffman so chunks decode independently.
    """

    mode: str = "list"
    hybrid: HybridConfig = field(default_factory=lambda: HybridConfig(4, 1, 0))
    W: int = 32
    R: int = 3
    C: int = 32
    Lp: int = 3
    iterations: int = 2

    def __post_init__(self):
        if self.mode not in ("full", "list"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.W < 1 or self.R < 0 or self.C < 0 or self.Lp < 0:
            raise ValueError("W must be >= 1; R, C, Lp must be >= 0")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.mode == "full":
            # chunking and RLE only pay off when list decoding is supported
            object.__setattr__(self, "C", 0)
            object.__setattr__(self, "Lp", 0)


# ---------------------------------------------------------------------------
# Context selection
# ---------------------------------------------------------------------------

_STREAM_BASE = {
    "degree": CTX_DEGREE,
    "ref": CTX_REF,
    "block_count": CTX_BLOCK_COUNT,
    "block_first": CTX_BLOCK_FIRST,
    "block_even": CTX_BLOCK_EVEN,
    "block_odd": CTX_BLOCK_ODD,
    "first_residual": CTX_FIRST_RESIDUAL,
    "residual": CTX_RESIDUAL,
    "zero_run": CTX_ZERO_RUN,
}
_BUCKETED = {"degree", "ref", "first_residual", "residual"}


def context_for(stream: str, selector: int = 0) -> int:
    """Map a stream kind and its selector state to a context id (0..132)."""
    base = _STREAM_BASE[stream]
    if stream in _BUCKETED:
        return base + min(max(selector, 0), CTX_BUCKETS - 1)
    return base


# ---------------------------------------------------------------------------
# Single-list tokenization (reference path; the kernels do this in bulk)
# ---------------------------------------------------------------------------

@dataclass
class ListState:
    """Per-chunk carry-over between consecutive lists."""

    prev_degree: int = 0


@dataclass
class ListTokens:
    """Signed token values of one adjacency list, before integer coding."""

    degree_delta: int
    ref: int = 0
    stored_block_count: int = 0
    block_lengths: list[int] = field(default_factory=list)  # stored form
    first_residual_delta: int = 0
    residual_deltas: list[int] = field(default_factory=list)  # incl. counters
    has_residuals: bool = False
    emitted_list: bool = False  # False for zero-degree nodes

    def flat(self) -> list[int]:
        """The token sequence in emission order."""
        out = [self.degree_delta]
        if not self.emitted_list:
            return out
        out.append(self.ref)
        if self.ref > 0:
            out.append(self.stored_block_count)
            out.extend(self.block_lengths)
        if self.has_residuals:
            out.append(self.first_residual_delta)
            out.extend(self.residual_deltas)
        return out


class TokenCursor:
    """Sequential reader over a flat token sequence."""

    def __init__(self, values):
        self.values = list(values)
        self.pos = 0

    def take(self) -> int:
        if self.pos >= len(self.values):
            raise CorruptStreamError("token stream exhausted")
        v = self.values[self.pos]
        self.pos += 1
        return v


def _improved_deltas(residuals, copied):
    """Gap-minus-one deltas, shrunk by copied edges falling inside each gap."""
    deltas = []
    cp = 0
    ncp = len(copied)
    while cp < ncp and copied[cp] <= residuals[0]:
        cp += 1
    for t in range(1, len(residuals)):
        d = residuals[t] - residuals[t - 1] - 1
        while cp < ncp and copied[cp] < residuals[t]:
            d -= 1
            cp += 1
        deltas.append(d)
    return deltas


def _apply_rle(deltas, Lp):
    """Insert run counters after each maximal run of exactly Lp zeros."""
    if Lp <= 0:
        return list(deltas)
    out = []
    t = 0
    n = len(deltas)
    zrun = 0
    while t < n:
        d = deltas[t]
        out.append(d)
        t += 1
        if d == 0:
            zrun += 1
            if zrun == Lp:
                zrun = 0
                if t < n:
                    z = 0
                    while t < n and deltas[t] == 0:
                        z += 1
                        t += 1
                    out.append(z)
        else:
            zrun = 0
    return out


def encode_list_tokens(u: int, g: Graph, r: int, state: ListState,
                       params: EncoderParams) -> ListTokens:
    """Tokenize the adjacency list of node u given its chosen reference.

    Mutates `state` (the previous-degree carry); context selectors are the
    caller's concern.  This is the single-list mirror of the bulk kernel.
    """
    deg = g.degree(u)
    tokens = ListTokens(degree_delta=deg - state.prev_degree)
    tokens.emitted_list = deg > 0
    state.prev_degree = deg
    if deg == 0:
        return tokens
    cur = g.neighbors(u).tolist()
    tokens.ref = r
    copied = []
    if r > 0:
        if r > u or (params.W and r > params.W):
            raise ValueError(f"reference {r} out of window at node {u}")
        ref_list = g.neighbors(u - r).tolist()
        if not ref_list:
            raise ValueError(f"node {u} references zero-degree node {u - r}")
        lengths, copied = compute_blocks(cur, ref_list)
        stored = lengths[:-1]
        tokens.stored_block_count = len(stored)
        tokens.block_lengths = [
            ln if idx == 0 else ln - 1 for idx, ln in enumerate(stored)
        ]
    cs = set(copied)
    residuals = [x for x in cur if x not in cs]
    if residuals:
        tokens.has_residuals = True
        tokens.first_residual_delta = residuals[0] - u
        tokens.residual_deltas = _apply_rle(
            _improved_deltas(residuals, copied), params.Lp
        )
    return tokens


def decode_list_tokens(cursor: TokenCursor, u: int, state: ListState,
                       params: EncoderParams, get_ref_list) -> list[int]:
    """Exact inverse of encode_list_tokens.

    `get_ref_list(node)` supplies already-decoded reference lists.  Consumes
    exactly the tokens the encoder produced and returns the sorted list.
    """
    delta = cursor.take()
    deg = state.prev_degree + delta
    if deg < 0:
        raise CorruptStreamError(f"negative degree decoded at node {u}")
    state.prev_degree = deg
    if deg == 0:
        return []
    r = cursor.take()
    copied = []
    if r > 0:
        if r > u or (params.W and r > params.W):
            raise CorruptStreamError(f"reference {r} out of window at node {u}")
        ref_list = get_ref_list(u - r)
        nstored = cursor.take()
        lengths = []
        for bi in range(nstored):
            ln = cursor.take()
            if bi > 0:
                ln += 1
            if ln < 0:
                raise CorruptStreamError(f"negative block length at node {u}")
            lengths.append(ln)
        last = len(ref_list) - sum(lengths)
        if last < 0:
            raise CorruptStreamError(f"block lengths exceed reference at node {u}")
        lengths.append(last)
        pos = 0
        for bi, ln in enumerate(lengths):
            if bi % 2 == 0:
                copied.extend(ref_list[pos : pos + ln])
            pos += ln
    nr = deg - len(copied)
    if nr < 0:
        raise CorruptStreamError(f"copied edges exceed degree at node {u}")
    residuals = []
    if nr > 0:
        first = u + cursor.take()
        residuals.append(first)
        cp = 0
        ncp = len(copied)
        while cp < ncp and copied[cp] <= first:
            if copied[cp] == first:
                raise CorruptStreamError(
                    f"residual collides with copied edge at node {u}"
                )
            cp += 1
        zrun = 0
        pending = 0
        prev = first
        while len(residuals) < nr:
            if pending:
                d = 0
                pending -= 1
                from_run = True
            else:
                d = cursor.take()
                if d < 0:
                    raise CorruptStreamError(f"negative residual delta at node {u}")
                from_run = False
            nxt = prev + 1 + d
            while cp < ncp and copied[cp] <= nxt:
                nxt += 1
                cp += 1
            residuals.append(nxt)
            prev = nxt
            # zeros expanded from a run counter never seed a new run
            if not from_run:
                if d == 0:
                    zrun += 1
                    if params.Lp > 0 and zrun == params.Lp:
                        zrun = 0
                        if len(residuals) < nr:
                            pending = cursor.take()
                else:
                    zrun = 0
        if pending:
            raise CorruptStreamError(f"zero-run overruns residuals at node {u}")
    merged = sorted(copied + residuals)
    for a in range(1, len(merged)):
        if merged[a] == merged[a - 1]:
            raise CorruptStreamError(f"duplicate edge reconstructed at node {u}")
    return merged


# ---------------------------------------------------------------------------
# Container header
# ---------------------------------------------------------------------------

@dataclass
class Header:
    params: EncoderParams
    n: int
    dists: ContextSet
    chunk_bits: np.ndarray  # payload bit offset per chunk (list mode)
    payload_start: int  # byte offset of the entropy-coded payload


def _write_header(params: EncoderParams, n: int, dists: ContextSet,
                  chunk_bits) -> bytes:
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out.append(0 if params.mode == "full" else 1)
    out.append(params.hybrid.k)
    out.append(params.hybrid.i)
    out.append(params.hybrid.j)
    for v in (params.W, params.R, params.C, params.Lp, n):
        write_uvarint(out, v)
    write_uvarint(out, NUM_CONTEXTS)
    out += serialize_distributions(dists)
    if params.mode == "list":
        write_uvarint(out, len(chunk_bits))
        prev = 0
        for b in chunk_bits:
            write_uvarint(out, int(b) - prev)
            prev = int(b)
    return bytes(out)


def _read_header(data: bytes) -> Header:
    if len(data) < 10:
        raise FormatError("file too short for a header")
    if data[:4] != MAGIC:
        raise FormatError("bad magic: not a compressed graph")
    if data[4] != VERSION:
        raise FormatError(f"unsupported version {data[4]}")
    mode_byte = data[5]
    if mode_byte not in (0, 1):
        raise FormatError(f"unknown mode byte {mode_byte}")
    mode = "full" if mode_byte == 0 else "list"
    k, i, j = data[6], data[7], data[8]
    try:
        hybrid = HybridConfig(k, i, j)
    except ValueError as e:
        raise FormatError(str(e)) from None
    pos = 9
    W, pos = read_uvarint(data, pos)
    R, pos = read_uvarint(data, pos)
    C, pos = read_uvarint(data, pos)
    Lp, pos = read_uvarint(data, pos)
    n, pos = read_uvarint(data, pos)
    T, pos = read_uvarint(data, pos)
    if T != NUM_CONTEXTS:
        raise FormatError(f"expected {NUM_CONTEXTS} contexts, found {T}")
    if W < 1:
        raise FormatError("window must be >= 1")
    backend = "ans" if mode == "full" else "huffman"
    dists, pos = deserialize_distributions(data, pos, backend, T)
    chunk_bits = np.zeros(0, dtype=np.int64)
    if mode == "list":
        nchunks, pos = read_uvarint(data, pos)
        expect = 0 if n == 0 else (n + C - 1) // C if C > 0 else 1
        if nchunks != expect:
            raise FormatError(f"chunk count {nchunks} does not match n={n}, C={C}")
        chunk_bits = np.zeros(nchunks, dtype=np.int64)
        prev = -1
        acc = 0
        for c in range(nchunks):
            d, pos = read_uvarint(data, pos)
            acc += d
            if acc <= prev:
                raise FormatError("chunk index not strictly increasing")
            prev = acc
            chunk_bits[c] = acc
    # EncoderParams normalizes C/Lp in full mode; bypass validation quirks
    params = EncoderParams(mode=mode, hybrid=hybrid, W=W, R=R,
                           C=C if mode == "list" else 0,
                           Lp=Lp if mode == "list" else 0, iterations=1)
    return Header(params, n, dists, chunk_bits, pos)


# ---------------------------------------------------------------------------
# Whole-graph encode / decode
# ---------------------------------------------------------------------------

def _tokenize_graph(g: Graph, params: EncoderParams, refs):
    cfg = params.hybrid
    ctx, val, chunk_starts = K.tokenize(
        g.offsets, g.targets, refs, cfg.k, cfg.i, cfg.j, params.C, params.Lp
    )
    sym, nbits, raw = K.hybrid_encode_array(val, cfg.k, cfg.i, cfg.j)
    return ctx, sym, nbits, raw, chunk_starts


def _histograms(ctx, sym) -> list[Histogram]:
    width = int(sym.max()) + 1 if len(sym) else 1
    counts = np.zeros((NUM_CONTEXTS, width), dtype=np.int64)
    np.add.at(counts, (ctx, sym), 1)
    return [Histogram(row.tolist()) for row in counts]


def encode_graph(g: Graph, params: EncoderParams | None = None) -> bytes:
    """Compress a validated graph into the container format."""
    if params is None:
        params = EncoderParams()
    graphstore.validate(g)
    if g.n == 0:
        dists = ContextSet.from_histograms(
            "ans" if params.mode == "full" else "huffman",
            [Histogram([0]) for _ in range(NUM_CONTEXTS)],
        )
        return _write_header(params, 0, dists, np.zeros(0, dtype=np.int64))
    forest = refselect.select_references(g, params)
    ctx, sym, nbits, raw, chunk_starts = _tokenize_graph(g, params, forest.ref)
    backend = "ans" if params.mode == "full" else "huffman"
    dists = ContextSet.from_histograms(backend, _histograms(ctx, sym))
    if params.mode == "full":
        freqs, cum, _ = dists.ans_tables()
        payload = K.ans_encode(ctx, sym, nbits, raw, freqs, cum)
        chunk_bits = np.zeros(0, dtype=np.int64)
    else:
        lengths, revcodes, *_ = dists.huffman_tables()
        payload, chunk_bits = K.huff_encode(
            ctx, sym, nbits, raw, lengths, revcodes, chunk_starts
        )
    return _write_header(params, g.n, dists, chunk_bits) + payload


def _decode_tables(h: Header):
    cfg = h.params.hybrid
    lut = K.hybrid_nbits_lut(cfg.k, cfg.i, cfg.j, h.dists.alphabet_size)
    if h.params.mode == "full":
        freqs, cum, lookup = h.dists.ans_tables()
        return (freqs, cum, lookup, lut)
    _, _, hfirst, hcount, hbase, hsyms = h.dists.huffman_tables()
    return (hfirst, hcount, hbase, hsyms, lut)


def decode_graph(data: bytes) -> Graph:
    """Decompress a container back to the exact original graph."""
    h = _read_header(data)
    if h.n == 0:
        if len(data) != h.payload_start:
            raise CorruptStreamError("trailing bytes after empty-graph header")
        return Graph(0, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
    payload = data[h.payload_start :]
    p = h.params
    cfg = p.hybrid
    tables = _decode_tables(h)
    decode = K.decode_graph_ans if p.mode == "full" else K.decode_graph_huff
    status, offsets, targets, _, end_bit = decode(
        payload, 0, cfg.k, cfg.i, cfg.j, p.C, p.Lp, p.W,
        h.n, 0, h.n, {}, *tables,
    )
    if status != 0:
        raise CorruptStreamError("decoder requested a list outside the file")
    if len(payload) != (end_bit + 7) // 8:
        raise CorruptStreamError(
            f"payload is {len(payload)} bytes but decoding consumed {end_bit} bits"
        )
    g = Graph(h.n, offsets, targets)
    try:
        graphstore.validate(g)
    except ValidationError as e:
        raise CorruptStreamError(f"decoded graph is invalid: {e}") from None
    return g


# ---------------------------------------------------------------------------
# Random access (list mode)
# ---------------------------------------------------------------------------

@dataclass
class Handle:
    """Immutable view of a list-mode container for per-list access."""

    data: bytes
    header: Header
    payload: bytes
    tables: tuple

    @property
    def n(self) -> int:
        return self.header.n

    def chunk_of(self, u: int) -> int:
        C = self.header.params.C
        return u // C if C > 0 else 0

    def chunk_first(self, c: int) -> int:
        C = self.header.params.C
        return c * C if C > 0 else 0


def open_handle(data: bytes) -> Handle:
    """Open a container for random access; full-mode files are rejected."""
    h = _read_header(data)
    if h.params.mode != "list":
        raise UnsupportedOperationError(
            "full-mode containers do not support per-list access"
        )
    return Handle(data, h, data[h.payload_start :], _decode_tables(h))


def _decode_prefix(handle: Handle, u: int, ext: dict):
    """Decode the chunk containing u from its start through u, resolving
    cross-chunk references via an explicit worklist (ids strictly decrease,
    so resolution always terminates)."""
    h = handle.header
    stack = [u]
    while stack:
        v = stack[-1]
        c = handle.chunk_of(v)
        first = handle.chunk_first(c)
        start_bit = int(h.chunk_bits[c])
        status, offsets, targets, _, _ = _decode_chunk_span(
            handle, start_bit, first, v - first + 1, ext
        )
        if status == 1:
            needed = offsets
            if not 0 <= needed < first:
                raise CorruptStreamError(
                    f"reference to node {needed} cannot be resolved"
                )
            stack.append(needed)
            continue
        lo, hi = int(offsets[v - first]), int(offsets[v - first + 1])
        ext[v] = targets[lo:hi].tolist()
        stack.pop()
    return ext[u]


def _decode_chunk_span(handle: Handle, start_bit, first, count, ext):
    h = handle.header
    p = h.params
    cfg = p.hybrid
    res = K.decode_graph_huff(
        handle.payload, start_bit, cfg.k, cfg.i, cfg.j, p.C, p.Lp, p.W,
        h.n, first, count, ext, *handle.tables,
    )
    if res[0] == 1:
        return 1, res[1], None, None, 0
    return res


def neighbors(handle: Handle, u: int, cache: dict | None = None) -> list[int]:
    """The exact adjacency list of u, decoding only what the reference
    chain requires.  An optional dict caches decoded lists across calls."""
    if not 0 <= u < handle.n:
        raise IndexError(f"node {u} out of range [0, {handle.n})")
    ext = cache if cache is not None else {}
    if u in ext:
        return list(ext[u])
    lst = _decode_prefix(handle, u, ext)
    if cache is not None:
        cache[u] = lst
    return lst


# ---------------------------------------------------------------------------
# Bit accounting
# ---------------------------------------------------------------------------

def stats(data: bytes) -> dict:
    """Exact per-stream bit breakdown; categories sum to the file size."""
    h = _read_header(data)
    total_bits = len(data) * 8
    out = {
        "header": h.payload_start * 8,
        "degrees": 0,
        "references": 0,
        "blocks": 0,
        "first_residuals": 0,
        "residuals": 0,
        "total": total_bits,
    }
    if h.n == 0:
        return out
    payload = data[h.payload_start :]
    p = h.params
    cfg = p.hybrid
    bits_out = np.zeros(NUM_CONTEXTS + 1, dtype=np.int64)
    cs = h.dists
    lut = K.hybrid_nbits_lut(cfg.k, cfg.i, cfg.j, cs.alphabet_size)
    if p.mode == "full":
        freqs, cum, lookup = cs.ans_tables()
        status, _, _, _, end_bit = K.decode_graph_ans(
            payload, 0, cfg.k, cfg.i, cfg.j, p.C, p.Lp, p.W, h.n, 0, h.n,
            {}, freqs, cum, lookup, lut, bits_out=bits_out,
        )
    else:
        _, _, hfirst, hcount, hbase, hsyms = cs.huffman_tables()
        status, _, _, _, end_bit = K.decode_graph_huff(
            payload, 0, cfg.k, cfg.i, cfg.j, p.C, p.Lp, p.W, h.n, 0, h.n,
            {}, hfirst, hcount, hbase, hsyms, lut, bits_out=bits_out,
        )
    if status != 0:
        raise CorruptStreamError("decoder requested a list outside the file")
    out["degrees"] = int(bits_out[CTX_DEGREE : CTX_DEGREE + CTX_BUCKETS].sum())
    out["references"] = int(bits_out[CTX_REF : CTX_REF + CTX_BUCKETS].sum())
    out["blocks"] = int(bits_out[CTX_BLOCK_COUNT : CTX_BLOCK_ODD + 1].sum())
    out["first_residuals"] = int(
        bits_out[CTX_FIRST_RESIDUAL : CTX_FIRST_RESIDUAL + CTX_BUCKETS].sum()
    )
    out["residuals"] = int(
        bits_out[CTX_RESIDUAL : CTX_RESIDUAL + CTX_BUCKETS].sum()
        + bits_out[CTX_ZERO_RUN]
    )
    # state flush and final-byte padding count as container overhead
    pad = len(payload) * 8 - end_bit
    out["header"] += int(bits_out[NUM_CONTEXTS]) + pad
    return out
