"""Pure-Python kernel backend.

Mirrors the compiled extension in ``_fast.pyx``; selected at import time by
``zkl._kernels`` when the extension is unavailable (or forced off via the
ZKL_PURE_PYTHON environment variable).  Array in, array out: callers never
loop per token at the Python level.
"""

import numpy as np

from ..errors import CorruptStreamError
from .common import (
    ANS_LOW,
    ANS_M,
    ANS_PROB_BITS,
    ANS_RENORM_BITS,
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

IMPL = "pure"


# ---------------------------------------------------------------------------
# Hybrid integer coding over arrays
# ---------------------------------------------------------------------------

def _bit_length_array(values):
    # float64 mantissas are exact below 2**53; graph tokens stay below 2**50.
    v = np.asarray(values, dtype=np.uint64)
    if v.size and int(v.max()) >= 1 << 53:
        return np.array([int(x).bit_length() for x in v.tolist()], dtype=np.int64)
    _, exp = np.frexp(v.astype(np.float64))
    return exp.astype(np.int64)


def hybrid_encode_array(values, k, i, j):
    """Split nonnegative integers into (symbol, raw_count, raw_value) arrays."""
    v = np.ascontiguousarray(values, dtype=np.uint64)
    p = _bit_length_array(v)
    small = v < (1 << k)
    nbits = np.where(small, 0, p - 1 - i - j).astype(np.uint8)
    m = (v >> np.maximum(p - 1 - i, 0).astype(np.uint64)) & np.uint64((1 << i) - 1)
    l = v & np.uint64((1 << j) - 1)
    raw = (v >> np.uint64(j)) & ((np.uint64(1) << nbits.astype(np.uint64)) - np.uint64(1))
    big_sym = (
        (1 << k)
        + (p - k - 1) * (1 << (i + j))
        + m.astype(np.int64) * (1 << j)
        + l.astype(np.int64)
    )
    sym = np.where(small, v.astype(np.int64), big_sym).astype(np.uint32)
    raw = np.where(small, np.uint64(0), raw)
    return sym, nbits, raw


def hybrid_decode_array(sym, raw, k, i, j):
    s = np.asarray(sym, dtype=np.int64)
    t = np.asarray(raw, dtype=np.uint64)
    small = s < (1 << k)
    rest = np.maximum(s - (1 << k), 0)
    l = rest & ((1 << j) - 1)
    rest >>= j
    m = rest & ((1 << i) - 1)
    n = rest >> i
    big = (
        (np.uint64(1) << (n + k).astype(np.uint64))
        + (m.astype(np.uint64) << np.maximum(n + k - i, 0).astype(np.uint64))
        + (t << np.uint64(j))
        + l.astype(np.uint64)
    )
    return np.where(small, s.astype(np.uint64), big)


def hybrid_nbits_lut(k, i, j, nsyms):
    """Raw-bit width per symbol, as a lookup table."""
    s = np.arange(nsyms, dtype=np.int64)
    n = np.maximum(s - (1 << k), 0) >> (i + j)
    return np.where(s < (1 << k), 0, n + k - i - j).astype(np.uint8)


def _hyb_sym(x, k, i, j):
    if x < 1 << k:
        return x
    p = x.bit_length()
    m = (x >> (p - 1 - i)) & ((1 << i) - 1)
    return (1 << k) + (p - k - 1) * (1 << (i + j)) + (m << j) + (x & ((1 << j) - 1))


# ---------------------------------------------------------------------------
# Bit packing helpers (LSB-first, mirrored by BitWriter/BitReader)
# ---------------------------------------------------------------------------

class _Bits:
    __slots__ = ("out", "acc", "phase")

    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.phase = 0

    def push(self, value, count):
        self.acc |= value << self.phase
        self.phase += count
        while self.phase >= 8:
            self.out.append(self.acc & 0xFF)
            self.acc >>= 8
            self.phase -= 8

    def position(self):
        return len(self.out) * 8 + self.phase

    def finish(self):
        if self.phase:
            self.out.append(self.acc & 0xFF)
            self.acc = 0
            self.phase = 0
        return bytes(self.out)


class _BitCursor:
    __slots__ = ("buf", "pos", "nbits")

    def __init__(self, buf, pos=0):
        self.buf = buf
        self.pos = pos
        self.nbits = 8 * len(buf)

    def read(self, count):
        end = self.pos + count
        if end > self.nbits:
            raise CorruptStreamError("read past end of bit stream")
        chunk = int.from_bytes(self.buf[self.pos >> 3 : (end + 7) >> 3], "little")
        value = (chunk >> (self.pos & 7)) & ((1 << count) - 1)
        self.pos = end
        return value


# ---------------------------------------------------------------------------
# rANS stream coder (32-bit state, 16-bit renormalization, M = 4096)
# ---------------------------------------------------------------------------

def ans_encode(ctx, sym, nbits, raw, freqs, cum):
    """Encode a token stream; the encoder runs in reverse so that the decoder
    reads tokens in forward order with raw bits following each symbol."""
    ctx = np.asarray(ctx)
    sym = np.asarray(sym)
    nbits = np.asarray(nbits)
    raw = np.asarray(raw)
    pushes = []  # (value, count), reversed at the end
    x = ANS_LOW
    shift = ANS_RENORM_BITS
    for t in range(len(sym) - 1, -1, -1):
        nb = int(nbits[t])
        rv = int(raw[t])
        if nb:
            if nb > 57:
                pushes.append((rv >> 57, nb - 57))
                pushes.append((rv & ((1 << 57) - 1), 57))
            else:
                pushes.append((rv, nb))
        f = int(freqs[ctx[t], sym[t]])
        if f <= 0:
            raise ValueError(f"symbol {sym[t]} has zero frequency in context {ctx[t]}")
        b = int(cum[ctx[t], sym[t]])
        if x >= ((ANS_LOW >> ANS_PROB_BITS) << shift) * f:
            pushes.append((x & 0xFFFF, 16))
            x >>= shift
        x = ((x // f) << ANS_PROB_BITS) + b + (x % f)
    pushes.append((x, 32))
    bits = _Bits()
    for value, count in reversed(pushes):
        bits.push(value, count)
    return bits.finish()


def ans_decode(payload, ctx, nbits_lut, lookup, freqs, cum):
    """Decode len(ctx) tokens from an ANS payload."""
    cur = _BitCursor(payload)
    x = cur.read(32)
    n = len(ctx)
    sym = np.empty(n, dtype=np.uint32)
    raw = np.zeros(n, dtype=np.uint64)
    mask = ANS_M - 1
    for t in range(n):
        c = int(ctx[t])
        if x < ANS_LOW or x >= ANS_LOW << ANS_RENORM_BITS:
            raise CorruptStreamError("ANS state out of range")
        cf = x & mask
        s = int(lookup[c, cf])
        f = int(freqs[c, s])
        if f == 0:
            raise CorruptStreamError(f"no symbol maps to slot {cf} in context {c}")
        x = f * (x >> ANS_PROB_BITS) + cf - int(cum[c, s])
        while x < ANS_LOW:
            x = (x << ANS_RENORM_BITS) | cur.read(16)
        sym[t] = s
        nb = int(nbits_lut[s])
        if nb:
            if nb > 57:
                lo = cur.read(57)
                raw[t] = lo | (cur.read(nb - 57) << 57)
            else:
                raw[t] = cur.read(nb)
    if x != ANS_LOW:
        raise CorruptStreamError("ANS stream did not terminate in the base state")
    return sym, raw


# ---------------------------------------------------------------------------
# Canonical Huffman stream coder
# ---------------------------------------------------------------------------

def huff_encode(ctx, sym, nbits, raw, lengths, revcodes, checkpoints):
    """Encode a token stream with per-context canonical codes.

    ``checkpoints`` holds token indices (ascending); the returned offsets give
    the payload bit position at each checkpoint, for the chunk index.
    """
    bits = _Bits()
    offsets = np.zeros(len(checkpoints), dtype=np.int64)
    nxt = 0
    n = len(sym)
    for t in range(n):
        while nxt < len(checkpoints) and checkpoints[nxt] == t:
            offsets[nxt] = bits.position()
            nxt += 1
        c = int(ctx[t])
        s = int(sym[t])
        ln = int(lengths[c, s])
        if ln == 0:
            raise ValueError(f"symbol {s} has no code in context {c}")
        bits.push(int(revcodes[c, s]), ln)
        nb = int(nbits[t])
        if nb:
            rv = int(raw[t])
            if nb > 57:
                bits.push(rv & ((1 << 57) - 1), 57)
                bits.push(rv >> 57, nb - 57)
            else:
                bits.push(rv, nb)
    while nxt < len(checkpoints):
        offsets[nxt] = bits.position()
        nxt += 1
    return bits.finish(), offsets


def _huff_read_symbol(cur, c, hfirst, hcount, hbase, hsyms):
    code = 0
    for ln in range(1, hfirst.shape[1]):
        code = (code << 1) | cur.read(1)
        idx = code - int(hfirst[c, ln])
        if 0 <= idx < int(hcount[c, ln]):
            return int(hsyms[c, int(hbase[c, ln]) + idx])
    raise CorruptStreamError(f"no Huffman codeword found in context {c}")


def huff_decode(payload, start_bit, ctx, nbits_lut, hfirst, hcount, hbase, hsyms):
    """Decode len(ctx) tokens; returns (symbols, raw values, end bit)."""
    cur = _BitCursor(payload, start_bit)
    n = len(ctx)
    sym = np.empty(n, dtype=np.uint32)
    raw = np.zeros(n, dtype=np.uint64)
    for t in range(n):
        s = _huff_read_symbol(cur, int(ctx[t]), hfirst, hcount, hbase, hsyms)
        sym[t] = s
        nb = int(nbits_lut[s])
        if nb:
            if nb > 57:
                lo = cur.read(57)
                raw[t] = lo | (cur.read(nb - 57) << 57)
            else:
                raw[t] = cur.read(nb)
    return sym, raw, cur.pos


# ---------------------------------------------------------------------------
# Block splitting
# ---------------------------------------------------------------------------

def compute_blocks(cur, ref):
    """Split `ref` into maximal copy/skip runs of membership in `cur`.

    Returns (block_lengths, copied): lengths alternate copy/skip starting
    with copy (a leading zero-length copy block is allowed) and sum to
    len(ref); `copied` lists the ref elements inside copy runs, sorted.
    """
    lengths = []
    copied = []
    a = 0
    nc = len(cur)
    run = 0
    state = True  # copy run
    for x in ref:
        while a < nc and cur[a] < x:
            a += 1
        member = a < nc and cur[a] == x
        if member == state:
            run += 1
        else:
            lengths.append(run)
            state = member
            run = 1
        if member:
            copied.append(x)
    lengths.append(run)
    return lengths, copied


# ---------------------------------------------------------------------------
# Graph tokenizer (encoder side)
# ---------------------------------------------------------------------------

def tokenize(offsets, targets, refs, k, i, j, C, Lp):
    """Turn a CSR graph plus chosen references into a (context, value) token
    stream.  C == 0 disables chunking, Lp == 0 disables zero-run RLE.

    Returns (ctx uint16[], val uint64[], chunk_tok_starts int64[]).
    """
    n = len(offsets) - 1
    ctxs = []
    vals = []
    chunk_starts = []
    emit_c = ctxs.append
    emit_v = vals.append
    prev_deg = 0
    prev_deg_sym = 0
    prev_ref = 0
    for u in range(n):
        if C == 0:
            if u == 0:
                chunk_starts.append(0)
                # state already zeroed
        elif u % C == 0:
            chunk_starts.append(len(vals))
            prev_deg = 0
            prev_deg_sym = 0
            prev_ref = 0
        lo = int(offsets[u])
        hi = int(offsets[u + 1])
        deg = hi - lo
        delta = deg - prev_deg
        v = 2 * delta if delta >= 0 else -2 * delta - 1
        emit_c(CTX_DEGREE + min(prev_deg_sym, CTX_BUCKETS - 1))
        emit_v(v)
        prev_deg_sym = _hyb_sym(v, k, i, j)
        prev_deg = deg
        if deg == 0:
            continue
        r = int(refs[u])
        emit_c(CTX_REF + min(prev_ref, CTX_BUCKETS - 1))
        emit_v(r)
        prev_ref = r
        cur = targets[lo:hi]
        if r > 0:
            ref_list = targets[int(offsets[u - r]) : int(offsets[u - r + 1])]
            lengths, copied = compute_blocks(cur.tolist(), ref_list.tolist())
            stored = lengths[:-1]
            emit_c(CTX_BLOCK_COUNT)
            emit_v(len(stored))
            for idx, ln in enumerate(stored):
                if idx == 0:
                    emit_c(CTX_BLOCK_FIRST)
                    emit_v(ln)
                else:
                    emit_c(CTX_BLOCK_EVEN if idx % 2 == 0 else CTX_BLOCK_ODD)
                    emit_v(ln - 1)
            ncopied = len(copied)
            if ncopied:
                cs = set(copied)
                residuals = [x for x in cur.tolist() if x not in cs]
            else:
                residuals = cur.tolist()
        else:
            copied = []
            residuals = cur.tolist()
        nr = len(residuals)
        if nr == 0:
            continue
        emit_c(CTX_FIRST_RESIDUAL + min(_hyb_sym(nr, k, i, j), CTX_BUCKETS - 1))
        d0 = residuals[0] - u
        emit_v(2 * d0 if d0 >= 0 else -2 * d0 - 1)
        # improved deltas: gap minus one, minus copied edges inside the gap
        prev_sym = 0
        zrun = 0
        cp = 0
        ncp = len(copied)
        while cp < ncp and copied[cp] <= residuals[0]:
            cp += 1
        t = 1
        while t < nr:
            d = residuals[t] - residuals[t - 1] - 1
            while cp < ncp and copied[cp] < residuals[t]:
                d -= 1
                cp += 1
            emit_c(CTX_RESIDUAL + min(prev_sym, CTX_BUCKETS - 1))
            emit_v(d)
            prev_sym = _hyb_sym(d, k, i, j)
            t += 1
            if d == 0:
                zrun += 1
                if zrun == Lp and Lp > 0:
                    zrun = 0
                    if t < nr:
                        z = 0
                        while t < nr:
                            dz = residuals[t] - residuals[t - 1] - 1
                            cp2 = cp
                            while cp2 < ncp and copied[cp2] < residuals[t]:
                                dz -= 1
                                cp2 += 1
                            if dz != 0:
                                break
                            cp = cp2
                            z += 1
                            t += 1
                        emit_c(CTX_ZERO_RUN)
                        emit_v(z)
            else:
                zrun = 0
    return (
        np.array(ctxs, dtype=np.uint16),
        np.array(vals, dtype=np.uint64),
        np.array(chunk_starts, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# Graph decoder
# ---------------------------------------------------------------------------

class _AnsSource:
    __slots__ = ("cur", "x", "lookup", "freqs", "cum", "bits_out", "_t0")

    def __init__(self, payload, start_bit, lookup, freqs, cum, bits_out):
        self.cur = _BitCursor(payload, start_bit)
        self.x = self.cur.read(32)
        self.lookup = lookup
        self.freqs = freqs
        self.cum = cum
        self.bits_out = bits_out

    def read_symbol(self, c):
        x = self.x
        if x < ANS_LOW or x >= ANS_LOW << ANS_RENORM_BITS:
            raise CorruptStreamError("ANS state out of range")
        cf = x & (ANS_M - 1)
        s = int(self.lookup[c, cf])
        f = int(self.freqs[c, s])
        if f == 0:
            raise CorruptStreamError(f"no symbol maps to slot {cf} in context {c}")
        x = f * (x >> ANS_PROB_BITS) + cf - int(self.cum[c, s])
        while x < ANS_LOW:
            x = (x << ANS_RENORM_BITS) | self.cur.read(16)
            if self.bits_out is not None:
                self.bits_out[c] += ANS_RENORM_BITS
        self.x = x
        return s

    def read_raw(self, c, nb):
        if self.bits_out is not None:
            self.bits_out[c] += nb
        if nb > 57:
            lo = self.cur.read(57)
            return lo | (self.cur.read(nb - 57) << 57)
        return self.cur.read(nb)

    def finish(self):
        if self.x != ANS_LOW:
            raise CorruptStreamError("ANS stream did not terminate in the base state")
        return self.cur.pos


class _HuffSource:
    __slots__ = ("cur", "hfirst", "hcount", "hbase", "hsyms", "bits_out")

    def __init__(self, payload, start_bit, hfirst, hcount, hbase, hsyms, bits_out):
        self.cur = _BitCursor(payload, start_bit)
        self.hfirst = hfirst
        self.hcount = hcount
        self.hbase = hbase
        self.hsyms = hsyms
        self.bits_out = bits_out

    def read_symbol(self, c):
        start = self.cur.pos
        s = _huff_read_symbol(self.cur, c, self.hfirst, self.hcount, self.hbase, self.hsyms)
        if self.bits_out is not None:
            self.bits_out[c] += self.cur.pos - start
        return s

    def read_raw(self, c, nb):
        if self.bits_out is not None:
            self.bits_out[c] += nb
        if nb > 57:
            lo = self.cur.read(57)
            return lo | (self.cur.read(nb - 57) << 57)
        return self.cur.read(nb)

    def finish(self):
        return self.cur.pos


def _decode_nodes(src, nbits_lut, k, i, j, C, Lp, W, n_total, first_node, count, ext):
    """Shared decoding walk.  Returns (1, needed_node, ...) when a reference
    points at a node outside [first_node, first_node + count) that is not in
    `ext` (a dict: node id -> sorted target array)."""
    kpow = 1 << k

    def read_value(c):
        s = src.read_symbol(c)
        nb = int(nbits_lut[s])
        raw = src.read_raw(c, nb) if nb else 0
        if s < kpow:
            return s, s
        rest = (s - kpow) >> j
        ll = (s - kpow) & ((1 << j) - 1)
        m = rest & ((1 << i) - 1)
        nn = rest >> i
        return (1 << (nn + k)) + (m << (nn + k - i)) + (raw << j) + ll, s

    lists = []
    refs = np.zeros(count, dtype=np.int32)
    prev_deg = 0
    prev_deg_sym = 0
    prev_ref = 0
    for idx in range(count):
        u = first_node + idx
        if (C > 0 and u % C == 0) or u == 0:
            prev_deg = 0
            prev_deg_sym = 0
            prev_ref = 0
        v, s = read_value(CTX_DEGREE + min(prev_deg_sym, CTX_BUCKETS - 1))
        prev_deg_sym = _hyb_sym(v, k, i, j)
        delta = v // 2 if v % 2 == 0 else -(v + 1) // 2
        deg = prev_deg + delta
        if deg < 0:
            raise CorruptStreamError(f"negative degree decoded at node {u}")
        prev_deg = deg
        if deg == 0:
            lists.append([])
            continue
        r, _ = read_value(CTX_REF + min(prev_ref, CTX_BUCKETS - 1))
        if r > u or (W > 0 and r > W):
            raise CorruptStreamError(f"reference {r} out of window at node {u}")
        refs[idx] = r
        prev_ref = r
        copied = []
        if r > 0:
            t = u - r
            if t >= first_node:
                ref_list = lists[t - first_node]
            elif t in ext:
                ref_list = ext[t]
            else:
                return 1, t, None, None, 0
            nref = len(ref_list)
            if nref == 0:
                raise CorruptStreamError(f"node {u} references empty list {t}")
            nstored, _ = read_value(CTX_BLOCK_COUNT)
            lengths = []
            for bi in range(nstored):
                if bi == 0:
                    ln, _ = read_value(CTX_BLOCK_FIRST)
                else:
                    ln, _ = read_value(
                        CTX_BLOCK_EVEN if bi % 2 == 0 else CTX_BLOCK_ODD
                    )
                    ln += 1
                lengths.append(ln)
            last = nref - sum(lengths)
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
            fr_sym = _hyb_sym(nr, k, i, j)
            v, _ = read_value(CTX_FIRST_RESIDUAL + min(fr_sym, CTX_BUCKETS - 1))
            d0 = v // 2 if v % 2 == 0 else -(v + 1) // 2
            first = u + d0
            if not 0 <= first < n_total:
                raise CorruptStreamError(f"first residual out of range at node {u}")
            residuals.append(first)
            cp = 0
            ncp = len(copied)
            while cp < ncp and copied[cp] <= first:
                if copied[cp] == first:
                    raise CorruptStreamError(
                        f"residual collides with copied edge at node {u}"
                    )
                cp += 1
            prev_sym = 0
            zrun = 0
            got = 1
            pending_zero = 0
            prev = first
            while got < nr:
                if pending_zero:
                    d = 0
                    pending_zero -= 1
                    from_run = True
                else:
                    d, s = read_value(CTX_RESIDUAL + min(prev_sym, CTX_BUCKETS - 1))
                    prev_sym = _hyb_sym(d, k, i, j)
                    from_run = False
                nxt = prev + 1 + d
                while cp < ncp and copied[cp] <= nxt:
                    nxt += 1
                    cp += 1
                if nxt >= n_total:
                    raise CorruptStreamError(f"residual out of range at node {u}")
                residuals.append(nxt)
                prev = nxt
                got += 1
                # zeros expanded from a run counter never seed a new run
                if not from_run:
                    if d == 0:
                        zrun += 1
                        if Lp > 0 and zrun == Lp:
                            zrun = 0
                            if got < nr:
                                pending_zero, _ = read_value(CTX_ZERO_RUN)
                    else:
                        zrun = 0
            if pending_zero:
                raise CorruptStreamError(f"zero-run overruns residuals at node {u}")
        # merge copied and residual edges
        if copied and residuals:
            merged = []
            a = b = 0
            na, nb_ = len(copied), len(residuals)
            while a < na and b < nb_:
                if copied[a] < residuals[b]:
                    merged.append(copied[a])
                    a += 1
                elif copied[a] > residuals[b]:
                    merged.append(residuals[b])
                    b += 1
                else:
                    raise CorruptStreamError(
                        f"residual collides with copied edge at node {u}"
                    )
            merged.extend(copied[a:])
            merged.extend(residuals[b:])
        else:
            merged = list(copied) if copied else residuals
        lists.append(merged)
    out_offsets = np.zeros(count + 1, dtype=np.int64)
    for idx, lst in enumerate(lists):
        out_offsets[idx + 1] = out_offsets[idx] + len(lst)
    out_targets = np.empty(int(out_offsets[-1]), dtype=np.int64)
    for idx, lst in enumerate(lists):
        out_targets[int(out_offsets[idx]) : int(out_offsets[idx + 1])] = lst
    return 0, out_offsets, out_targets, refs, src.finish()


def decode_graph_ans(
    payload, start_bit, k, i, j, C, Lp, W, n_total, first_node, count,
    ext, freqs, cum, lookup, nbits_lut, bits_out=None,
):
    src = _AnsSource(payload, start_bit, lookup, freqs, cum, bits_out)
    if bits_out is not None:
        bits_out[NUM_CONTEXTS] += 32  # initial state flush
    return _decode_nodes(src, nbits_lut, k, i, j, C, Lp, W, n_total, first_node, count, ext)


def decode_graph_huff(
    payload, start_bit, k, i, j, C, Lp, W, n_total, first_node, count,
    ext, hfirst, hcount, hbase, hsyms, nbits_lut, bits_out=None,
):
    src = _HuffSource(payload, start_bit, hfirst, hcount, hbase, hsyms, bits_out)
    return _decode_nodes(src, nbits_lut, k, i, j, C, Lp, W, n_total, first_node, count, ext)


# ---------------------------------------------------------------------------
# Candidate-arc gains for reference selection
# ---------------------------------------------------------------------------

def candidate_gains(offsets, targets, W, k, i, j, cost_ref, cost_bcount,
                    cost_bfirst, cost_beven, cost_bodd, cost_fres, cost_res):
    """Estimated bits saved for every (node, reference) pair in the window.

    Cost tables are float64 arrays indexed by hybrid symbol (raw-bit widths
    already folded in).  Only strictly positive gains are returned.
    RLE savings are deliberately ignored.
    """
    n = len(offsets) - 1
    arc_u = []
    arc_r = []
    arc_gain = []

    def list_cost(residuals, copied, u):
        if not residuals:
            return 0.0
        d0 = residuals[0] - u
        v = 2 * d0 if d0 >= 0 else -2 * d0 - 1
        cost = cost_fres[_hyb_sym(v, k, i, j)]
        cp = 0
        ncp = len(copied)
        while cp < ncp and copied[cp] <= residuals[0]:
            cp += 1
        for t in range(1, len(residuals)):
            d = residuals[t] - residuals[t - 1] - 1
            while cp < ncp and copied[cp] < residuals[t]:
                d -= 1
                cp += 1
            cost += cost_res[_hyb_sym(d, k, i, j)]
        return cost

    empty = []
    for u in range(n):
        lo, hi = int(offsets[u]), int(offsets[u + 1])
        if lo == hi:
            continue
        cur = targets[lo:hi].tolist()
        explicit = cost_ref[0] + list_cost(cur, empty, u)
        for r in range(1, min(W, u) + 1):
            rlo, rhi = int(offsets[u - r]), int(offsets[u - r + 1])
            if rlo == rhi:
                continue
            ref_list = targets[rlo:rhi].tolist()
            lengths, copied = compute_blocks(cur, ref_list)
            stored = lengths[:-1]
            cost = cost_ref[_hyb_sym(r, k, i, j)] + cost_bcount[_hyb_sym(len(stored), k, i, j)]
            for idx, ln in enumerate(stored):
                if idx == 0:
                    cost += cost_bfirst[_hyb_sym(ln, k, i, j)]
                elif idx % 2 == 0:
                    cost += cost_beven[_hyb_sym(ln - 1, k, i, j)]
                else:
                    cost += cost_bodd[_hyb_sym(ln - 1, k, i, j)]
            if copied:
                cs = set(copied)
                residuals = [x for x in cur if x not in cs]
            else:
                residuals = cur
            cost += list_cost(residuals, copied, u)
            gain = explicit - cost
            if gain > 0.0:
                arc_u.append(u)
                arc_r.append(r)
                arc_gain.append(gain)
    return (
        np.array(arc_u, dtype=np.int64),
        np.array(arc_r, dtype=np.int32),
        np.array(arc_gain, dtype=np.float64),
    )
