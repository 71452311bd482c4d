# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend; behavior-identical to ``pure.py``."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint16_t, uint32_t, uint64_t

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

IMPL = "fast"

cdef extern from *:
    int __builtin_clzll(unsigned long long x) nogil

DEF C_ANS_LOW = 65536          # 1 << 16
DEF C_RENORM = 16
DEF C_PROB_BITS = 12
DEF C_M = 4096

cdef int C_DEGREE = CTX_DEGREE
cdef int C_REF = CTX_REF
cdef int C_BCOUNT = CTX_BLOCK_COUNT
cdef int C_BFIRST = CTX_BLOCK_FIRST
cdef int C_BEVEN = CTX_BLOCK_EVEN
cdef int C_BODD = CTX_BLOCK_ODD
cdef int C_FRES = CTX_FIRST_RESIDUAL
cdef int C_RES = CTX_RESIDUAL
cdef int C_ZRUN = CTX_ZERO_RUN
cdef int C_BUCKETS = CTX_BUCKETS


cdef inline int bitlen(uint64_t x) nogil:
    if x == 0:
        return 0
    return 64 - __builtin_clzll(x)


cdef inline int64_t hyb_sym(uint64_t x, int k, int i, int j) nogil:
    cdef int p
    cdef uint64_t m
    if x < (<uint64_t> 1) << k:
        return <int64_t> x
    p = bitlen(x)
    m = (x >> (p - 1 - i)) & (((<uint64_t> 1) << i) - 1)
    return ((<int64_t> 1) << k) + (<int64_t> (p - k - 1)) * ((<int64_t> 1) << (i + j)) \
        + (<int64_t> m << j) + <int64_t> (x & (((<uint64_t> 1) << j) - 1))


# ---------------------------------------------------------------------------
# Growable buffers
# ---------------------------------------------------------------------------

cdef class I64Vec:
    cdef object arr
    cdef int64_t[::1] mv
    cdef Py_ssize_t n

    def __cinit__(self, Py_ssize_t cap=64):
        if cap < 8:
            cap = 8
        self.arr = np.empty(cap, dtype=np.int64)
        self.mv = self.arr
        self.n = 0

    cdef void _grow(self):
        new = np.empty(self.mv.shape[0] * 2, dtype=np.int64)
        new[: self.n] = self.arr[: self.n]
        self.arr = new
        self.mv = new

    cdef inline void push(self, int64_t v):
        if self.n == self.mv.shape[0]:
            self._grow()
        self.mv[self.n] = v
        self.n += 1

    cdef object trimmed(self):
        return np.asarray(self.arr)[: self.n].copy()


cdef class _Sink:
    """LSB-first bit packer into a growable byte buffer."""
    cdef object arr
    cdef uint8_t[::1] mv
    cdef Py_ssize_t n
    cdef uint64_t acc
    cdef int phase

    def __cinit__(self, Py_ssize_t cap=256):
        self.arr = np.empty(cap, dtype=np.uint8)
        self.mv = self.arr
        self.n = 0
        self.acc = 0
        self.phase = 0

    cdef void _grow(self):
        new = np.empty(self.mv.shape[0] * 2, dtype=np.uint8)
        new[: self.n] = self.arr[: self.n]
        self.arr = new
        self.mv = new

    cdef inline void push(self, uint64_t value, int count):
        # count <= 57 so acc never overflows 64 bits
        self.acc |= value << self.phase
        self.phase += count
        while self.phase >= 8:
            if self.n == self.mv.shape[0]:
                self._grow()
            self.mv[self.n] = <uint8_t> (self.acc & 0xFF)
            self.n += 1
            self.acc >>= 8
            self.phase -= 8

    cdef inline int64_t position(self):
        return self.n * 8 + self.phase

    cdef bytes finish(self):
        if self.phase:
            if self.n == self.mv.shape[0]:
                self._grow()
            self.mv[self.n] = <uint8_t> (self.acc & 0xFF)
            self.n += 1
            self.acc = 0
            self.phase = 0
        return bytes(np.asarray(self.arr)[: self.n].tobytes())


cdef class _Cursor:
    """LSB-first bit reader with a 64-bit refill cache."""
    cdef const uint8_t[::1] data
    cdef int64_t nbits
    cdef int64_t pos          # logical bit position
    cdef Py_ssize_t bytepos
    cdef uint64_t bitbuf
    cdef int bitcnt

    def __cinit__(self, data, int64_t start_bit):
        self.data = data
        self.nbits = 8 * <int64_t> len(data)
        if start_bit < 0 or start_bit > self.nbits:
            raise CorruptStreamError("seek past end of bit stream")
        self.pos = start_bit
        self.bytepos = start_bit >> 3
        self.bitbuf = 0
        self.bitcnt = 0
        cdef int skew = <int> (start_bit & 7)
        if skew:
            self.bitbuf = self.data[self.bytepos] >> skew
            self.bitcnt = 8 - skew
            self.bytepos += 1

    cdef inline uint64_t read(self, int count) except? 0xFFFFFFFFFFFFFFFF:
        cdef uint64_t value
        if self.pos + count > self.nbits:
            raise CorruptStreamError("read past end of bit stream")
        while self.bitcnt < count:
            self.bitbuf |= (<uint64_t> self.data[self.bytepos]) << self.bitcnt
            self.bytepos += 1
            self.bitcnt += 8
        if count == 64:
            value = self.bitbuf
        else:
            value = self.bitbuf & (((<uint64_t> 1) << count) - 1)
        self.bitbuf >>= count
        self.bitcnt -= count
        self.pos += count
        return value


# ---------------------------------------------------------------------------
# Hybrid integer coding over arrays
# ---------------------------------------------------------------------------

def hybrid_encode_array(values, int k, int i, int j):
    cdef uint64_t[::1] v = np.ascontiguousarray(values, dtype=np.uint64)
    cdef Py_ssize_t n = v.shape[0], t
    sym_arr = np.empty(n, dtype=np.uint32)
    nb_arr = np.empty(n, dtype=np.uint8)
    raw_arr = np.zeros(n, dtype=np.uint64)
    cdef uint32_t[::1] sym = sym_arr
    cdef uint8_t[::1] nb = nb_arr
    cdef uint64_t[::1] raw = raw_arr
    cdef uint64_t x
    cdef int p, nraw
    cdef uint64_t kpow = (<uint64_t> 1) << k
    for t in range(n):
        x = v[t]
        if x < kpow:
            sym[t] = <uint32_t> x
            nb[t] = 0
        else:
            p = bitlen(x)
            nraw = p - 1 - i - j
            nb[t] = <uint8_t> nraw
            raw[t] = (x >> j) & (((<uint64_t> 1) << nraw) - 1)
            sym[t] = <uint32_t> hyb_sym(x, k, i, j)
    return sym_arr, nb_arr, raw_arr


def hybrid_decode_array(sym, raw, int k, int i, int j):
    cdef int64_t[::1] s = np.ascontiguousarray(sym, dtype=np.int64)
    cdef uint64_t[::1] t = np.ascontiguousarray(raw, dtype=np.uint64)
    cdef Py_ssize_t n = s.shape[0], a
    out_arr = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef int64_t rest, l, m, nn
    cdef int64_t kpow = (<int64_t> 1) << k
    for a in range(n):
        if s[a] < kpow:
            out[a] = <uint64_t> s[a]
        else:
            rest = s[a] - kpow
            l = rest & (((<int64_t> 1) << j) - 1)
            rest >>= j
            m = rest & (((<int64_t> 1) << i) - 1)
            nn = rest >> i
            out[a] = ((<uint64_t> 1) << (nn + k)) \
                + ((<uint64_t> m) << (nn + k - i)) \
                + (t[a] << j) + <uint64_t> l
    return out_arr


# ---------------------------------------------------------------------------
# rANS stream coder
# ---------------------------------------------------------------------------

def ans_encode(ctx, sym, nbits, raw, freqs, cum):
    cdef uint16_t[::1] c = np.ascontiguousarray(ctx, dtype=np.uint16)
    cdef uint32_t[::1] s = np.ascontiguousarray(sym, dtype=np.uint32)
    cdef uint8_t[::1] nb = np.ascontiguousarray(nbits, dtype=np.uint8)
    cdef uint64_t[::1] rv = np.ascontiguousarray(raw, dtype=np.uint64)
    cdef int32_t[:, ::1] f2 = np.ascontiguousarray(freqs, dtype=np.int32)
    cdef int32_t[:, ::1] b2 = np.ascontiguousarray(cum, dtype=np.int32)
    cdef Py_ssize_t n = s.shape[0], t, npush = 0
    # worst case three pushes per token plus the state flush
    pv_arr = np.empty(3 * n + 1, dtype=np.uint64)
    pc_arr = np.empty(3 * n + 1, dtype=np.int32)
    cdef uint64_t[::1] pv = pv_arr
    cdef int32_t[::1] pc = pc_arr
    cdef uint64_t x = C_ANS_LOW, r
    cdef int64_t f, b
    cdef int nbv
    for t in range(n - 1, -1, -1):
        nbv = nb[t]
        r = rv[t]
        if nbv:
            if nbv > 57:
                pv[npush] = r >> 57
                pc[npush] = nbv - 57
                npush += 1
                pv[npush] = r & (((<uint64_t> 1) << 57) - 1)
                pc[npush] = 57
                npush += 1
            else:
                pv[npush] = r
                pc[npush] = nbv
                npush += 1
        f = f2[c[t], s[t]]
        if f <= 0:
            raise ValueError(
                f"symbol {s[t]} has zero frequency in context {c[t]}"
            )
        b = b2[c[t], s[t]]
        if x >= ((<uint64_t> (C_ANS_LOW >> C_PROB_BITS)) << C_RENORM) * <uint64_t> f:
            pv[npush] = x & 0xFFFF
            pc[npush] = 16
            npush += 1
            x >>= C_RENORM
        x = ((x // <uint64_t> f) << C_PROB_BITS) + <uint64_t> b + (x % <uint64_t> f)
    pv[npush] = x
    pc[npush] = 32
    npush += 1
    cdef _Sink sink = _Sink(2 * n + 16)
    for t in range(npush - 1, -1, -1):
        sink.push(pv[t], pc[t])
    return sink.finish()


def ans_decode(payload, ctx, nbits_lut, lookup, freqs, cum):
    cdef _Cursor cur = _Cursor(payload, 0)
    cdef uint64_t x = cur.read(32)
    cdef uint16_t[::1] c = np.ascontiguousarray(ctx, dtype=np.uint16)
    cdef uint16_t[:, ::1] lk = np.ascontiguousarray(lookup, dtype=np.uint16)
    cdef int32_t[:, ::1] f2 = np.ascontiguousarray(freqs, dtype=np.int32)
    cdef int32_t[:, ::1] b2 = np.ascontiguousarray(cum, dtype=np.int32)
    cdef uint8_t[::1] lut = np.ascontiguousarray(nbits_lut, dtype=np.uint8)
    cdef Py_ssize_t n = c.shape[0], t
    sym_arr = np.empty(n, dtype=np.uint32)
    raw_arr = np.zeros(n, dtype=np.uint64)
    cdef uint32_t[::1] sym = sym_arr
    cdef uint64_t[::1] raw = raw_arr
    cdef uint64_t cf, lo
    cdef int64_t f
    cdef int cc, s, nbv
    for t in range(n):
        cc = c[t]
        if x < C_ANS_LOW or x >= (<uint64_t> C_ANS_LOW) << C_RENORM:
            raise CorruptStreamError("ANS state out of range")
        cf = x & (C_M - 1)
        s = lk[cc, cf]
        f = f2[cc, s]
        if f == 0:
            raise CorruptStreamError(f"no symbol maps to slot {cf} in context {cc}")
        x = <uint64_t> f * (x >> C_PROB_BITS) + cf - <uint64_t> b2[cc, s]
        while x < C_ANS_LOW:
            x = (x << C_RENORM) | cur.read(16)
        sym[t] = <uint32_t> s
        nbv = lut[s]
        if nbv:
            if nbv > 57:
                lo = cur.read(57)
                raw[t] = lo | (cur.read(nbv - 57) << 57)
            else:
                raw[t] = cur.read(nbv)
    if x != C_ANS_LOW:
        raise CorruptStreamError("ANS stream did not terminate in the base state")
    return sym_arr, raw_arr


# ---------------------------------------------------------------------------
# Canonical Huffman stream coder
# ---------------------------------------------------------------------------

def huff_encode(ctx, sym, nbits, raw, lengths, revcodes, checkpoints):
    cdef uint16_t[::1] c = np.ascontiguousarray(ctx, dtype=np.uint16)
    cdef uint32_t[::1] s = np.ascontiguousarray(sym, dtype=np.uint32)
    cdef uint8_t[::1] nb = np.ascontiguousarray(nbits, dtype=np.uint8)
    cdef uint64_t[::1] rv = np.ascontiguousarray(raw, dtype=np.uint64)
    cdef uint8_t[:, ::1] ln2 = np.ascontiguousarray(lengths, dtype=np.uint8)
    cdef uint32_t[:, ::1] cd2 = np.ascontiguousarray(revcodes, dtype=np.uint32)
    cdef int64_t[::1] cps = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t n = s.shape[0], t, ncp = cps.shape[0], nxt = 0
    offs_arr = np.zeros(ncp, dtype=np.int64)
    cdef int64_t[::1] offs = offs_arr
    cdef _Sink sink = _Sink(2 * n + 16)
    cdef int ln, nbv
    cdef uint64_t r
    for t in range(n):
        while nxt < ncp and cps[nxt] == t:
            offs[nxt] = sink.position()
            nxt += 1
        ln = ln2[c[t], s[t]]
        if ln == 0:
            raise ValueError(f"symbol {s[t]} has no code in context {c[t]}")
        sink.push(cd2[c[t], s[t]], ln)
        nbv = nb[t]
        if nbv:
            r = rv[t]
            if nbv > 57:
                sink.push(r & (((<uint64_t> 1) << 57) - 1), 57)
                sink.push(r >> 57, nbv - 57)
            else:
                sink.push(r, nbv)
    while nxt < ncp:
        offs[nxt] = sink.position()
        nxt += 1
    return sink.finish(), offs_arr


cdef inline int huff_read_symbol(_Cursor cur, int c, int32_t[:, ::1] hfirst,
                                 int32_t[:, ::1] hcount, int32_t[:, ::1] hbase,
                                 int32_t[:, ::1] hsyms) except -1:
    cdef int code = 0, ln, idx
    for ln in range(1, hfirst.shape[1]):
        code = (code << 1) | <int> cur.read(1)
        idx = code - hfirst[c, ln]
        if 0 <= idx < hcount[c, ln]:
            return hsyms[c, hbase[c, ln] + idx]
    raise CorruptStreamError(f"no Huffman codeword found in context {c}")


def huff_decode(payload, int64_t start_bit, ctx, nbits_lut, hfirst, hcount,
                hbase, hsyms):
    cdef _Cursor cur = _Cursor(payload, start_bit)
    cdef uint16_t[::1] c = np.ascontiguousarray(ctx, dtype=np.uint16)
    cdef uint8_t[::1] lut = np.ascontiguousarray(nbits_lut, dtype=np.uint8)
    cdef int32_t[:, ::1] hf = np.ascontiguousarray(hfirst, dtype=np.int32)
    cdef int32_t[:, ::1] hc = np.ascontiguousarray(hcount, dtype=np.int32)
    cdef int32_t[:, ::1] hb = np.ascontiguousarray(hbase, dtype=np.int32)
    cdef int32_t[:, ::1] hs = np.ascontiguousarray(hsyms, dtype=np.int32)
    cdef Py_ssize_t n = c.shape[0], t
    sym_arr = np.empty(n, dtype=np.uint32)
    raw_arr = np.zeros(n, dtype=np.uint64)
    cdef uint32_t[::1] sym = sym_arr
    cdef uint64_t[::1] raw = raw_arr
    cdef int s, nbv
    cdef uint64_t lo
    for t in range(n):
        s = huff_read_symbol(cur, c[t], hf, hc, hb, hs)
        sym[t] = <uint32_t> s
        nbv = lut[s]
        if nbv:
            if nbv > 57:
                lo = cur.read(57)
                raw[t] = lo | (cur.read(nbv - 57) << 57)
            else:
                raw[t] = cur.read(nbv)
    return sym_arr, raw_arr, cur.pos


# ---------------------------------------------------------------------------
# Graph tokenizer (encoder side)
# ---------------------------------------------------------------------------

cdef class _TokSink:
    cdef object carr, varr
    cdef uint16_t[::1] cmv
    cdef uint64_t[::1] vmv
    cdef Py_ssize_t n

    def __cinit__(self, Py_ssize_t cap):
        if cap < 16:
            cap = 16
        self.carr = np.empty(cap, dtype=np.uint16)
        self.varr = np.empty(cap, dtype=np.uint64)
        self.cmv = self.carr
        self.vmv = self.varr
        self.n = 0

    cdef void _grow(self):
        nc = np.empty(self.cmv.shape[0] * 2, dtype=np.uint16)
        nv = np.empty(self.vmv.shape[0] * 2, dtype=np.uint64)
        nc[: self.n] = self.carr[: self.n]
        nv[: self.n] = self.varr[: self.n]
        self.carr = nc
        self.varr = nv
        self.cmv = nc
        self.vmv = nv

    cdef inline void emit(self, int ctx, uint64_t val):
        if self.n == self.cmv.shape[0]:
            self._grow()
        self.cmv[self.n] = <uint16_t> ctx
        self.vmv[self.n] = val
        self.n += 1


cdef Py_ssize_t split_blocks(int64_t[::1] targets, Py_ssize_t clo, Py_ssize_t chi,
                             Py_ssize_t rlo, Py_ssize_t rhi,
                             I64Vec lengths, I64Vec copied):
    """compute_blocks over two target slices; appends into the two vectors."""
    cdef Py_ssize_t a = clo, p
    cdef int64_t x
    cdef bint state = True, member
    cdef int64_t run = 0
    lengths.n = 0
    copied.n = 0
    for p in range(rlo, rhi):
        x = targets[p]
        while a < chi and targets[a] < x:
            a += 1
        member = a < chi and targets[a] == x
        if member == state:
            run += 1
        else:
            lengths.push(run)
            state = member
            run = 1
        if member:
            copied.push(x)
    lengths.push(run)
    return lengths.n


def tokenize(offsets, targets, refs, int k, int i, int j, int64_t C, int64_t Lp):
    cdef int64_t[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef int64_t[::1] tg = np.ascontiguousarray(targets, dtype=np.int64)
    cdef int32_t[::1] rf = np.ascontiguousarray(refs, dtype=np.int32)
    cdef Py_ssize_t n = offs.shape[0] - 1
    cdef _TokSink out = _TokSink(2 * tg.shape[0] + 2 * n + 16)
    cdef I64Vec chunk_starts = I64Vec(64)
    cdef I64Vec lengths = I64Vec(), copied = I64Vec(), residuals = I64Vec()
    cdef int64_t prev_deg = 0, prev_deg_sym = 0, prev_ref = 0
    cdef Py_ssize_t u, lo, hi, t, cp, ncp, rl, rh, idx
    cdef int64_t deg, delta, v, r, d0, d, prev_sym, zrun, z, dz, nstored
    cdef Py_ssize_t a, b, cp2
    cdef int64_t x
    for u in range(n):
        if C == 0:
            if u == 0:
                chunk_starts.push(0)
        elif u % C == 0:
            chunk_starts.push(out.n)
            prev_deg = 0
            prev_deg_sym = 0
            prev_ref = 0
        lo = offs[u]
        hi = offs[u + 1]
        deg = hi - lo
        delta = deg - prev_deg
        v = 2 * delta if delta >= 0 else -2 * delta - 1
        out.emit(C_DEGREE + <int> min(prev_deg_sym, C_BUCKETS - 1), <uint64_t> v)
        prev_deg_sym = hyb_sym(<uint64_t> v, k, i, j)
        prev_deg = deg
        if deg == 0:
            continue
        r = rf[u]
        out.emit(C_REF + <int> min(prev_ref, C_BUCKETS - 1), <uint64_t> r)
        prev_ref = r
        copied.n = 0
        if r > 0:
            rl = offs[u - r]
            rh = offs[u - r + 1]
            split_blocks(tg, lo, hi, rl, rh, lengths, copied)
            nstored = lengths.n - 1
            out.emit(C_BCOUNT, <uint64_t> nstored)
            for idx in range(nstored):
                if idx == 0:
                    out.emit(C_BFIRST, <uint64_t> lengths.mv[0])
                elif idx % 2 == 0:
                    out.emit(C_BEVEN, <uint64_t> (lengths.mv[idx] - 1))
                else:
                    out.emit(C_BODD, <uint64_t> (lengths.mv[idx] - 1))
        # residuals = cur minus copied (both sorted)
        residuals.n = 0
        a = lo
        b = 0
        while a < hi:
            x = tg[a]
            if b < copied.n and copied.mv[b] == x:
                b += 1
            else:
                residuals.push(x)
            a += 1
        if residuals.n == 0:
            continue
        out.emit(C_FRES + <int> min(hyb_sym(<uint64_t> residuals.n, k, i, j),
                                    C_BUCKETS - 1), 0)
        d0 = residuals.mv[0] - u
        out.vmv[out.n - 1] = <uint64_t> (2 * d0 if d0 >= 0 else -2 * d0 - 1)
        prev_sym = 0
        zrun = 0
        cp = 0
        ncp = copied.n
        while cp < ncp and copied.mv[cp] <= residuals.mv[0]:
            cp += 1
        t = 1
        while t < residuals.n:
            d = residuals.mv[t] - residuals.mv[t - 1] - 1
            while cp < ncp and copied.mv[cp] < residuals.mv[t]:
                d -= 1
                cp += 1
            out.emit(C_RES + <int> min(prev_sym, C_BUCKETS - 1), <uint64_t> d)
            prev_sym = hyb_sym(<uint64_t> d, k, i, j)
            t += 1
            if d == 0:
                zrun += 1
                if zrun == Lp and Lp > 0:
                    zrun = 0
                    if t < residuals.n:
                        z = 0
                        while t < residuals.n:
                            dz = residuals.mv[t] - residuals.mv[t - 1] - 1
                            cp2 = cp
                            while cp2 < ncp and copied.mv[cp2] < residuals.mv[t]:
                                dz -= 1
                                cp2 += 1
                            if dz != 0:
                                break
                            cp = cp2
                            z += 1
                            t += 1
                        out.emit(C_ZRUN, <uint64_t> z)
            else:
                zrun = 0
    return (
        np.asarray(out.carr)[: out.n].copy(),
        np.asarray(out.varr)[: out.n].copy(),
        chunk_starts.trimmed(),
    )


# ---------------------------------------------------------------------------
# Graph decoder
# ---------------------------------------------------------------------------

cdef class _Src:
    cdef int read_symbol(self, int c) except -1:
        raise NotImplementedError

    cdef uint64_t read_raw(self, int c, int nb) except? 0xFFFFFFFFFFFFFFFF:
        raise NotImplementedError

    cdef int64_t finish(self) except -1:
        raise NotImplementedError


cdef class _AnsSrc(_Src):
    cdef _Cursor cur
    cdef uint64_t x
    cdef uint16_t[:, ::1] lookup
    cdef int32_t[:, ::1] freqs
    cdef int32_t[:, ::1] cum
    cdef int64_t[::1] bits_out
    cdef bint track

    def __cinit__(self, payload, int64_t start_bit, lookup, freqs, cum,
                  bits_out=None):
        self.cur = _Cursor(payload, start_bit)
        self.x = self.cur.read(32)
        self.lookup = np.ascontiguousarray(lookup, dtype=np.uint16)
        self.freqs = np.ascontiguousarray(freqs, dtype=np.int32)
        self.cum = np.ascontiguousarray(cum, dtype=np.int32)
        self.track = bits_out is not None
        if self.track:
            self.bits_out = bits_out

    cdef int read_symbol(self, int c) except -1:
        cdef uint64_t x = self.x, cf
        cdef int s
        cdef int64_t f
        if x < C_ANS_LOW or x >= (<uint64_t> C_ANS_LOW) << C_RENORM:
            raise CorruptStreamError("ANS state out of range")
        cf = x & (C_M - 1)
        s = self.lookup[c, cf]
        f = self.freqs[c, s]
        if f == 0:
            raise CorruptStreamError(f"no symbol maps to slot {cf} in context {c}")
        x = <uint64_t> f * (x >> C_PROB_BITS) + cf - <uint64_t> self.cum[c, s]
        while x < C_ANS_LOW:
            x = (x << C_RENORM) | self.cur.read(16)
            if self.track:
                self.bits_out[c] += C_RENORM
        self.x = x
        return s

    cdef uint64_t read_raw(self, int c, int nb) except? 0xFFFFFFFFFFFFFFFF:
        cdef uint64_t lo
        if self.track:
            self.bits_out[c] += nb
        if nb > 57:
            lo = self.cur.read(57)
            return lo | (self.cur.read(nb - 57) << 57)
        return self.cur.read(nb)

    cdef int64_t finish(self) except -1:
        if self.x != C_ANS_LOW:
            raise CorruptStreamError("ANS stream did not terminate in the base state")
        return self.cur.pos


cdef class _HuffSrc(_Src):
    cdef _Cursor cur
    cdef int32_t[:, ::1] hfirst
    cdef int32_t[:, ::1] hcount
    cdef int32_t[:, ::1] hbase
    cdef int32_t[:, ::1] hsyms
    cdef int64_t[::1] bits_out
    cdef bint track

    def __cinit__(self, payload, int64_t start_bit, hfirst, hcount, hbase,
                  hsyms, bits_out=None):
        self.cur = _Cursor(payload, start_bit)
        self.hfirst = np.ascontiguousarray(hfirst, dtype=np.int32)
        self.hcount = np.ascontiguousarray(hcount, dtype=np.int32)
        self.hbase = np.ascontiguousarray(hbase, dtype=np.int32)
        self.hsyms = np.ascontiguousarray(hsyms, dtype=np.int32)
        self.track = bits_out is not None
        if self.track:
            self.bits_out = bits_out

    cdef int read_symbol(self, int c) except -1:
        cdef int64_t start
        cdef int s
        if self.track:
            start = self.cur.pos
            s = huff_read_symbol(self.cur, c, self.hfirst, self.hcount,
                                 self.hbase, self.hsyms)
            self.bits_out[c] += self.cur.pos - start
            return s
        return huff_read_symbol(self.cur, c, self.hfirst, self.hcount,
                                self.hbase, self.hsyms)

    cdef uint64_t read_raw(self, int c, int nb) except? 0xFFFFFFFFFFFFFFFF:
        cdef uint64_t lo
        if self.track:
            self.bits_out[c] += nb
        if nb > 57:
            lo = self.cur.read(57)
            return lo | (self.cur.read(nb - 57) << 57)
        return self.cur.read(nb)

    cdef int64_t finish(self) except -1:
        return self.cur.pos


cdef _decode_nodes(_Src src, uint8_t[::1] lut, int k, int i, int j,
                   int64_t C, int64_t Lp, int64_t W, int64_t n_total,
                   int64_t first_node, int64_t count, dict ext):
    cdef I64Vec out = I64Vec(4 * count + 16)
    offs_arr = np.zeros(count + 1, dtype=np.int64)
    cdef int64_t[::1] out_offs = offs_arr
    refs_arr = np.zeros(count, dtype=np.int32)
    cdef int32_t[::1] refs = refs_arr
    cdef I64Vec copied = I64Vec(), residuals = I64Vec(), lens = I64Vec()
    cdef int64_t prev_deg = 0, prev_deg_sym = 0, prev_ref = 0
    cdef int64_t idx, u, deg, delta, v, r, t, nref, nstored, last, bi, ln
    cdef int64_t nr, d0, first, d, nxt, prev, prev_sym, zrun, got, pending
    cdef Py_ssize_t cp, ncp, pos, pa, pb, na, nb_
    cdef int s, nbv, cc, kpow = 1 << k
    cdef int64_t rest, ll, mm, nn
    cdef uint64_t rawv
    cdef int64_t[::1] ref_mv
    cdef object ext_arr
    cdef bint external, from_run
    cdef int64_t ref_lo, ref_hi

    for idx in range(count):
        u = first_node + idx
        if (C > 0 and u % C == 0) or u == 0:
            prev_deg = 0
            prev_deg_sym = 0
            prev_ref = 0
        # inline read_value for the degree
        cc = <int> (C_DEGREE + min(prev_deg_sym, C_BUCKETS - 1))
        s = src.read_symbol(cc)
        nbv = lut[s]
        rawv = src.read_raw(cc, nbv) if nbv else 0
        if s < kpow:
            v = s
        else:
            rest = (s - kpow) >> j
            ll = (s - kpow) & (((<int64_t> 1) << j) - 1)
            mm = rest & (((<int64_t> 1) << i) - 1)
            nn = rest >> i
            v = ((<int64_t> 1) << (nn + k)) + (mm << (nn + k - i)) \
                + ((<int64_t> rawv) << j) + ll
        prev_deg_sym = hyb_sym(<uint64_t> v, k, i, j)
        delta = v // 2 if v % 2 == 0 else -(v + 1) // 2
        deg = prev_deg + delta
        if deg < 0:
            raise CorruptStreamError(f"negative degree decoded at node {u}")
        prev_deg = deg
        out_offs[idx + 1] = out.n
        if deg == 0:
            continue
        r = _read_val(src, lut, k, i, j,
                      <int> (C_REF + min(prev_ref, C_BUCKETS - 1)))
        if r > u or (W > 0 and r > W):
            raise CorruptStreamError(f"reference {r} out of window at node {u}")
        refs[idx] = <int32_t> r
        prev_ref = r
        copied.n = 0
        if r > 0:
            t = u - r
            external = False
            ref_lo = ref_hi = 0
            if t >= first_node:
                ref_lo = out_offs[t - first_node]
                ref_hi = out_offs[t - first_node + 1]
                ref_mv = out.mv
                nref = ref_hi - ref_lo
            elif t in ext:
                ext_arr = np.ascontiguousarray(ext[t], dtype=np.int64)
                ref_mv = ext_arr
                nref = ref_mv.shape[0]
                external = True
                ref_hi = nref
            else:
                return 1, t, None, None, 0
            if nref == 0:
                raise CorruptStreamError(f"node {u} references empty list {t}")
            nstored = _read_val(src, lut, k, i, j, C_BCOUNT)
            lens.n = 0
            last = nref
            for bi in range(nstored):
                if bi == 0:
                    ln = _read_val(src, lut, k, i, j, C_BFIRST)
                elif bi % 2 == 0:
                    ln = _read_val(src, lut, k, i, j, C_BEVEN) + 1
                else:
                    ln = _read_val(src, lut, k, i, j, C_BODD) + 1
                lens.push(ln)
                last -= ln
            if last < 0:
                raise CorruptStreamError(f"block lengths exceed reference at node {u}")
            lens.push(last)
            pos = ref_lo
            for bi in range(lens.n):
                ln = lens.mv[bi]
                if bi % 2 == 0:
                    for pa in range(pos, pos + ln):
                        copied.push(ref_mv[pa])
                pos += ln
        nr = deg - copied.n
        if nr < 0:
            raise CorruptStreamError(f"copied edges exceed degree at node {u}")
        residuals.n = 0
        if nr > 0:
            cc = <int> (C_FRES + min(
                hyb_sym(<uint64_t> nr, k, i, j), C_BUCKETS - 1))
            s = src.read_symbol(cc)
            nbv = lut[s]
            rawv = src.read_raw(cc, nbv) if nbv else 0
            if s < kpow:
                v = s
            else:
                rest = (s - kpow) >> j
                ll = (s - kpow) & (((<int64_t> 1) << j) - 1)
                mm = rest & (((<int64_t> 1) << i) - 1)
                nn = rest >> i
                v = ((<int64_t> 1) << (nn + k)) + (mm << (nn + k - i)) \
                    + ((<int64_t> rawv) << j) + ll
            d0 = v // 2 if v % 2 == 0 else -(v + 1) // 2
            first = u + d0
            if first < 0 or first >= n_total:
                raise CorruptStreamError(f"first residual out of range at node {u}")
            residuals.push(first)
            cp = 0
            ncp = copied.n
            while cp < ncp and copied.mv[cp] <= first:
                if copied.mv[cp] == first:
                    raise CorruptStreamError(
                        f"residual collides with copied edge at node {u}"
                    )
                cp += 1
            prev_sym = 0
            zrun = 0
            got = 1
            pending = 0
            prev = first
            while got < nr:
                if pending:
                    d = 0
                    pending -= 1
                    from_run = True
                else:
                    d = _read_val(src, lut, k, i, j,
                                  <int> (C_RES + min(prev_sym, C_BUCKETS - 1)))
                    prev_sym = hyb_sym(<uint64_t> d, k, i, j)
                    from_run = False
                nxt = prev + 1 + d
                while cp < ncp and copied.mv[cp] <= nxt:
                    nxt += 1
                    cp += 1
                if nxt >= n_total:
                    raise CorruptStreamError(f"residual out of range at node {u}")
                residuals.push(nxt)
                prev = nxt
                got += 1
                # zeros expanded from a run counter never seed a new run
                if not from_run:
                    if d == 0:
                        zrun += 1
                        if Lp > 0 and zrun == Lp:
                            zrun = 0
                            if got < nr:
                                pending = _read_val(src, lut, k, i, j, C_ZRUN)
                    else:
                        zrun = 0
            if pending:
                raise CorruptStreamError(f"zero-run overruns residuals at node {u}")
        # merge copied and residuals into the output, checking for collisions
        pa = 0
        pb = 0
        na = copied.n
        nb_ = residuals.n
        while pa < na and pb < nb_:
            if copied.mv[pa] < residuals.mv[pb]:
                out.push(copied.mv[pa])
                pa += 1
            elif copied.mv[pa] > residuals.mv[pb]:
                out.push(residuals.mv[pb])
                pb += 1
            else:
                raise CorruptStreamError(
                    f"residual collides with copied edge at node {u}"
                )
        while pa < na:
            out.push(copied.mv[pa])
            pa += 1
        while pb < nb_:
            out.push(residuals.mv[pb])
            pb += 1
        out_offs[idx + 1] = out.n
    return 0, offs_arr, out.trimmed(), refs_arr, src.finish()


cdef inline int64_t _read_val(_Src src, uint8_t[::1] lut, int k, int i, int j,
                              int c) except? -1:
    cdef int s = src.read_symbol(c)
    cdef int nbv = lut[s]
    cdef uint64_t rawv = src.read_raw(c, nbv) if nbv else 0
    cdef int64_t rest, ll, mm, nn
    cdef int kpow = 1 << k
    if s < kpow:
        return s
    rest = (s - kpow) >> j
    ll = (s - kpow) & (((<int64_t> 1) << j) - 1)
    mm = rest & (((<int64_t> 1) << i) - 1)
    nn = rest >> i
    return ((<int64_t> 1) << (nn + k)) + (mm << (nn + k - i)) \
        + ((<int64_t> rawv) << j) + ll


def decode_graph_ans(payload, int64_t start_bit, int k, int i, int j,
                     int64_t C, int64_t Lp, int64_t W, int64_t n_total,
                     int64_t first_node, int64_t count, dict ext,
                     freqs, cum, lookup, nbits_lut, bits_out=None):
    if bits_out is not None:
        bits_out[NUM_CONTEXTS] += 32  # initial state flush
    cdef _AnsSrc src = _AnsSrc(payload, start_bit, lookup, freqs, cum, bits_out)
    cdef uint8_t[::1] lut = np.ascontiguousarray(nbits_lut, dtype=np.uint8)
    return _decode_nodes(src, lut, k, i, j, C, Lp, W, n_total, first_node,
                         count, ext)


def decode_graph_huff(payload, int64_t start_bit, int k, int i, int j,
                      int64_t C, int64_t Lp, int64_t W, int64_t n_total,
                      int64_t first_node, int64_t count, dict ext,
                      hfirst, hcount, hbase, hsyms, nbits_lut, bits_out=None):
    cdef _HuffSrc src = _HuffSrc(payload, start_bit, hfirst, hcount, hbase,
                                 hsyms, bits_out)
    cdef uint8_t[::1] lut = np.ascontiguousarray(nbits_lut, dtype=np.uint8)
    return _decode_nodes(src, lut, k, i, j, C, Lp, W, n_total, first_node,
                         count, ext)


# ---------------------------------------------------------------------------
# Candidate-arc gains for reference selection
# ---------------------------------------------------------------------------

cdef double _list_cost(int64_t[::1] res, Py_ssize_t nres,
                       int64_t[::1] cop, Py_ssize_t ncop,
                       int64_t u, int k, int i, int j,
                       double[::1] cost_fres, double[::1] cost_res) nogil:
    cdef double cost
    cdef int64_t d0, v, d
    cdef Py_ssize_t cp = 0, t
    if nres == 0:
        return 0.0
    d0 = res[0] - u
    v = 2 * d0 if d0 >= 0 else -2 * d0 - 1
    cost = cost_fres[hyb_sym(<uint64_t> v, k, i, j)]
    while cp < ncop and cop[cp] <= res[0]:
        cp += 1
    for t in range(1, nres):
        d = res[t] - res[t - 1] - 1
        while cp < ncop and cop[cp] < res[t]:
            d -= 1
            cp += 1
        cost += cost_res[hyb_sym(<uint64_t> d, k, i, j)]
    return cost


def candidate_gains(offsets, targets, int64_t W, int k, int i, int j,
                    cost_ref, cost_bcount, cost_bfirst, cost_beven,
                    cost_bodd, cost_fres, cost_res):
    cdef int64_t[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef int64_t[::1] tg = np.ascontiguousarray(targets, dtype=np.int64)
    cdef double[::1] c_ref = np.ascontiguousarray(cost_ref, dtype=np.float64)
    cdef double[::1] c_bc = np.ascontiguousarray(cost_bcount, dtype=np.float64)
    cdef double[::1] c_bf = np.ascontiguousarray(cost_bfirst, dtype=np.float64)
    cdef double[::1] c_be = np.ascontiguousarray(cost_beven, dtype=np.float64)
    cdef double[::1] c_bo = np.ascontiguousarray(cost_bodd, dtype=np.float64)
    cdef double[::1] c_fr = np.ascontiguousarray(cost_fres, dtype=np.float64)
    cdef double[::1] c_rs = np.ascontiguousarray(cost_res, dtype=np.float64)
    cdef Py_ssize_t n = offs.shape[0] - 1
    cdef I64Vec au = I64Vec(1024), ar = I64Vec(1024)
    cdef list gains = []
    cdef I64Vec lengths = I64Vec(), copied = I64Vec(), residuals = I64Vec()
    cdef int64_t u, r, lo, hi, rlo, rhi
    cdef Py_ssize_t idx, a, b, nstored
    cdef double explicit, cost, gain
    cdef int64_t[::1] empty = np.zeros(0, dtype=np.int64)
    for u in range(n):
        lo = offs[u]
        hi = offs[u + 1]
        if lo == hi:
            continue
        explicit = c_ref[0] + _list_cost(tg[lo:hi], hi - lo, empty, 0, u,
                                         k, i, j, c_fr, c_rs)
        for r in range(1, min(W, u) + 1):
            rlo = offs[u - r]
            rhi = offs[u - r + 1]
            if rlo == rhi:
                continue
            split_blocks(tg, lo, hi, rlo, rhi, lengths, copied)
            nstored = lengths.n - 1
            cost = c_ref[hyb_sym(<uint64_t> r, k, i, j)] \
                + c_bc[hyb_sym(<uint64_t> nstored, k, i, j)]
            for idx in range(nstored):
                if idx == 0:
                    cost += c_bf[hyb_sym(<uint64_t> lengths.mv[0], k, i, j)]
                elif idx % 2 == 0:
                    cost += c_be[hyb_sym(<uint64_t> (lengths.mv[idx] - 1), k, i, j)]
                else:
                    cost += c_bo[hyb_sym(<uint64_t> (lengths.mv[idx] - 1), k, i, j)]
            residuals.n = 0
            a = lo
            b = 0
            while a < hi:
                if b < copied.n and copied.mv[b] == tg[a]:
                    b += 1
                else:
                    residuals.push(tg[a])
                a += 1
            cost += _list_cost(residuals.mv, residuals.n, copied.mv, copied.n,
                               u, k, i, j, c_fr, c_rs)
            gain = explicit - cost
            if gain > 0.0:
                au.push(u)
                ar.push(r)
                gains.append(gain)
    return (
        au.trimmed(),
        ar.trimmed().astype(np.int32),
        np.array(gains, dtype=np.float64),
    )
