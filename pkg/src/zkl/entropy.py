"""Multi-context entropy coding.

Two interchangeable backends: rANS (full-decompression mode) and canonical
length-limited Huffman (list-decompression mode), plus histogram
quantization, table serialization and bit-cost estimation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._kernels.common import ANS_M, HUFFMAN_MAX_LENGTH
from .bitio import BitReader, BitWriter
from .errors import FormatError
from .intcode import Token
from .varint import read_uvarint, write_uvarint


@dataclass
class Histogram:
    counts: list[int]
    total: int = 0

    def __post_init__(self):
        self.total = sum(self.counts)

    def add(self, symbol: int, n: int = 1) -> None:
        if symbol >= len(self.counts):
            self.counts.extend([0] * (symbol + 1 - len(self.counts)))
        self.counts[symbol] += n
        self.total += n


def quantize(h: Histogram, M: int = ANS_M) -> "QuantizedDistribution":
    """Scale histogram counts to frequencies summing exactly to M.

    Proportional rounding followed by largest-remainder correction (ties to
    the lower symbol index); every occurring symbol keeps frequency >= 1.
    """
    if h.total <= 0:
        raise ValueError("cannot quantize an empty histogram")
    nonzero = [s for s, c in enumerate(h.counts) if c > 0]
    if len(nonzero) > M:
        raise ValueError(f"{len(nonzero)} symbols cannot each get freq >= 1 of {M}")
    freqs = [0] * len(h.counts)
    rems = {}
    for s in nonzero:
        ideal = h.counts[s] * M / h.total
        freqs[s] = max(1, math.floor(ideal))
        rems[s] = ideal - math.floor(ideal)
    units = M - sum(freqs)
    if units > 0:
        for s in sorted(nonzero, key=lambda s: (-rems[s], s))[:units]:
            freqs[s] += 1
    while units < 0:
        # only reachable when min-frequency clamping oversubscribed M
        donor = max((s for s in nonzero if freqs[s] > 1), key=lambda s: (freqs[s], -s))
        freqs[donor] -= 1
        units += 1
    return QuantizedDistribution(freqs)


@dataclass
class QuantizedDistribution:
    """Per-symbol frequencies summing to M, with prefix sums."""

    freqs: list[int]
    M: int = ANS_M
    cumulative: list[int] = field(default_factory=list)

    def __post_init__(self):
        if sum(self.freqs) != self.M:
            raise FormatError(f"quantized frequencies sum to {sum(self.freqs)}, not {self.M}")
        acc = 0
        self.cumulative = []
        for f in self.freqs:
            self.cumulative.append(acc)
            acc += f

    def cost_bits(self, symbol: int) -> float:
        f = self.freqs[symbol]
        if f == 0:
            raise ValueError(f"symbol {symbol} has zero frequency")
        return math.log2(self.M / f)


@dataclass
class HuffmanCode:
    """Canonical length-limited prefix code (max length 20)."""

    lengths: list[int]
    codes: list[int] = field(default_factory=list)

    def __post_init__(self):
        used = [s for s, ln in enumerate(self.lengths) if ln > 0]
        if not used:
            raise FormatError("Huffman code with no used symbols")
        if any(ln > HUFFMAN_MAX_LENGTH for ln in self.lengths):
            raise FormatError(f"Huffman length exceeds {HUFFMAN_MAX_LENGTH}")
        kraft = sum(2 ** -self.lengths[s] for s in used)
        degenerate = len(used) == 1 and self.lengths[used[0]] == 1
        if not degenerate and abs(kraft - 1.0) > 1e-12:
            raise FormatError(f"incomplete prefix code (Kraft sum {kraft})")
        self.codes = [0] * len(self.lengths)
        code = 0
        prev = 0
        for s in sorted(used, key=lambda s: (self.lengths[s], s)):
            code <<= self.lengths[s] - prev
            self.codes[s] = code
            code += 1
            prev = self.lengths[s]

    def cost_bits(self, symbol: int) -> float:
        ln = self.lengths[symbol]
        if ln == 0:
            raise ValueError(f"symbol {symbol} has no code")
        return float(ln)


def _package_merge(weights: list[int], max_len: int) -> list[int]:
    """Optimal code lengths under a length cap (package-merge)."""
    n = len(weights)
    items = sorted((w, (s,)) for s, w in enumerate(weights))
    cur = list(items)
    for _ in range(max_len - 1):
        packages = [
            (cur[a][0] + cur[a + 1][0], cur[a][1] + cur[a + 1][1])
            for a in range(0, len(cur) - 1, 2)
        ]
        cur = sorted(items + packages)
    counter: Counter[int] = Counter()
    for _, syms in cur[: 2 * n - 2]:
        counter.update(syms)
    return [counter[s] for s in range(n)]


def huffman_build(h: Histogram, max_len: int = HUFFMAN_MAX_LENGTH) -> HuffmanCode:
    """Build a canonical prefix code minimizing expected length under the cap."""
    if h.total <= 0:
        raise ValueError("cannot build a code from an empty histogram")
    used = [s for s, c in enumerate(h.counts) if c > 0]
    if len(used) > 1 << max_len:
        raise ValueError(f"alphabet of {len(used)} symbols exceeds cap {max_len}")
    lengths = [0] * len(h.counts)
    if len(used) == 1:
        lengths[used[0]] = 1
    else:
        sub = _package_merge([h.counts[s] for s in used], max_len)
        for s, ln in zip(used, sub):
            lengths[s] = ln
    return HuffmanCode(lengths)


class UniformCostModel:
    """Fixed-probability model: every symbol costs log2(alphabet size) bits."""

    def __init__(self, alphabet_size: int):
        self.symbol_cost = math.log2(max(alphabet_size, 2))

    def cost_bits(self, symbol: int) -> float:
        return self.symbol_cost


def estimate_bits(dist, token: Token) -> float:
    """Fractional bit cost of a token under a distribution or cost model."""
    return dist.cost_bits(token.symbol) + token.raw_count


@dataclass
class ContextSet:
    """One distribution per context; None marks a context never used."""

    mode: str  # "ans" or "huffman"
    dists: list

    def __post_init__(self):
        if self.mode not in ("ans", "huffman"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def num_contexts(self) -> int:
        return len(self.dists)

    @property
    def alphabet_size(self) -> int:
        return max(
            (len(d.freqs if self.mode == "ans" else d.lengths) for d in self.dists if d),
            default=1,
        )

    @classmethod
    def from_histograms(cls, mode: str, histograms: list[Histogram]) -> "ContextSet":
        dists = []
        for h in histograms:
            if h.total == 0:
                dists.append(None)
            elif mode == "ans":
                dists.append(quantize(h))
            else:
                dists.append(huffman_build(h))
        return cls(mode, dists)

    # -- numpy table export for the kernels ---------------------------------

    def ans_tables(self):
        T, A = self.num_contexts, self.alphabet_size
        freqs = np.zeros((T, A), dtype=np.int32)
        cum = np.zeros((T, A), dtype=np.int32)
        lookup = np.zeros((T, ANS_M), dtype=np.uint16)
        for c, d in enumerate(self.dists):
            if d is None:
                continue
            freqs[c, : len(d.freqs)] = d.freqs
            cum[c, : len(d.freqs)] = d.cumulative
            pos = 0
            for s, f in enumerate(d.freqs):
                lookup[c, pos : pos + f] = s
                pos += f
        return freqs, cum, lookup

    def huffman_tables(self):
        T, A = self.num_contexts, self.alphabet_size
        L = HUFFMAN_MAX_LENGTH + 2
        lengths = np.zeros((T, A), dtype=np.uint8)
        revcodes = np.zeros((T, A), dtype=np.uint32)
        hfirst = np.zeros((T, L), dtype=np.int32)
        hcount = np.zeros((T, L), dtype=np.int32)
        hbase = np.zeros((T, L), dtype=np.int32)
        hsyms = np.zeros((T, A), dtype=np.int32)
        for c, d in enumerate(self.dists):
            if d is None:
                continue
            used = sorted(
                (s for s, ln in enumerate(d.lengths) if ln > 0),
                key=lambda s: (d.lengths[s], s),
            )
            for s in used:
                ln = d.lengths[s]
                lengths[c, s] = ln
                code = d.codes[s]
                rev = 0
                for _ in range(ln):
                    rev = (rev << 1) | (code & 1)
                    code >>= 1
                revcodes[c, s] = rev
            idx = 0
            for s in used:
                ln = d.lengths[s]
                if hcount[c, ln] == 0:
                    hfirst[c, ln] = d.codes[s]
                    hbase[c, ln] = idx
                hcount[c, ln] += 1
                hsyms[c, idx] = s
                idx += 1
        return lengths, revcodes, hfirst, hcount, hbase, hsyms

    def _nbits_lut(self, raw_count_of):
        return np.array(
            [raw_count_of(s) for s in range(self.alphabet_size)], dtype=np.uint8
        )


# ---------------------------------------------------------------------------
# Stream coding (token-sequence level, backed by the kernels)
# ---------------------------------------------------------------------------

def _token_arrays(tokens):
    ctx = np.array([c for c, _ in tokens], dtype=np.uint16)
    sym = np.array([t.symbol for _, t in tokens], dtype=np.uint32)
    nbits = np.array([t.raw_count for _, t in tokens], dtype=np.uint8)
    raw = np.array([t.raw_value for _, t in tokens], dtype=np.uint64)
    return ctx, sym, nbits, raw


def ans_encode_stream(dists: ContextSet, tokens) -> bytes:
    """Encode (context, Token) pairs; the decoder reads tokens forward."""
    tokens = list(tokens)
    freqs, cum, _ = dists.ans_tables()
    ctx, sym, nbits, raw = _token_arrays(tokens)
    return K.ans_encode(ctx, sym, nbits, raw, freqs, cum)


def ans_decode_stream(dists: ContextSet, payload: bytes, contexts, raw_count_of):
    """Decode one token per expected context, in forward order."""
    freqs, cum, lookup = dists.ans_tables()
    ctx = np.asarray(contexts, dtype=np.uint16)
    lut = dists._nbits_lut(raw_count_of)
    sym, raw = K.ans_decode(payload, ctx, lut, lookup, freqs, cum)
    return [Token(int(s), int(r), int(lut[s])) for s, r in zip(sym, raw)]


def huffman_encode_stream(dists: ContextSet, tokens, checkpoints=()):
    """Encode (context, Token) pairs; returns (payload, checkpoint bit offsets)."""
    tokens = list(tokens)
    lengths, revcodes, *_ = dists.huffman_tables()
    ctx, sym, nbits, raw = _token_arrays(tokens)
    return K.huff_encode(
        ctx, sym, nbits, raw, lengths, revcodes, np.asarray(checkpoints, dtype=np.int64)
    )


def huffman_decode_stream(dists: ContextSet, payload: bytes, contexts, raw_count_of,
                          start_bit: int = 0):
    """Decode one token per expected context; returns (tokens, end bit)."""
    _, _, hfirst, hcount, hbase, hsyms = dists.huffman_tables()
    ctx = np.asarray(contexts, dtype=np.uint16)
    lut = dists._nbits_lut(raw_count_of)
    sym, raw, end = K.huff_decode(payload, start_bit, ctx, lut, hfirst, hcount, hbase, hsyms)
    return [Token(int(s), int(r), int(lut[s])) for s, r in zip(sym, raw)], end


def huffman_encode_token(code: HuffmanCode, writer: BitWriter, token: Token) -> None:
    """Write one token: codeword bits (MSB first), then the raw bits."""
    ln = code.lengths[token.symbol]
    if ln == 0:
        raise ValueError(f"symbol {token.symbol} has no code")
    cw = code.codes[token.symbol]
    rev = 0
    for _ in range(ln):
        rev = (rev << 1) | (cw & 1)
        cw >>= 1
    writer.write_bits(rev, ln)
    writer.write_bits(token.raw_value, token.raw_count)


def huffman_decode_token(code: HuffmanCode, reader: BitReader, raw_count_of) -> Token:
    """Exact inverse of huffman_encode_token."""
    by_code = {}
    for s, ln in enumerate(code.lengths):
        if ln > 0:
            by_code[(ln, code.codes[s])] = s
    acc = 0
    for ln in range(1, HUFFMAN_MAX_LENGTH + 1):
        acc = (acc << 1) | reader.read_bits(1)
        if (ln, acc) in by_code:
            s = by_code[(ln, acc)]
            nb = raw_count_of(s)
            return Token(s, reader.read_bits(nb), nb)
    raise FormatError("no codeword within the maximum length")


# ---------------------------------------------------------------------------
# Table serialization (container header wire format)
# ---------------------------------------------------------------------------

def serialize_distributions(dists: ContextSet) -> bytes:
    """Per context: varint alphabet size, then frequencies (ANS, varints)
    or code lengths (Huffman, one byte each).  Size 0 marks an unused context."""
    out = bytearray()
    for d in dists.dists:
        if d is None:
            write_uvarint(out, 0)
        elif dists.mode == "ans":
            write_uvarint(out, len(d.freqs))
            for f in d.freqs:
                write_uvarint(out, f)
        else:
            write_uvarint(out, len(d.lengths))
            out.extend(bytes(d.lengths))
    return bytes(out)


def deserialize_distributions(buf: bytes, pos: int, mode: str, num_contexts: int):
    """Inverse of serialize_distributions; returns (ContextSet, next position)."""
    dists = []
    for _ in range(num_contexts):
        a, pos = read_uvarint(buf, pos)
        if a == 0:
            dists.append(None)
        elif mode == "ans":
            freqs = []
            for _ in range(a):
                f, pos = read_uvarint(buf, pos)
                freqs.append(f)
            dists.append(QuantizedDistribution(freqs))
        else:
            if pos + a > len(buf):
                raise FormatError("truncated Huffman length table")
            dists.append(HuffmanCode(list(buf[pos : pos + a])))
            pos += a
    return ContextSet(mode, dists), pos
