import heapq
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zkl.bitio import BitReader, BitWriter
from zkl.entropy import (
    ContextSet,
    Histogram,
    HuffmanCode,
    QuantizedDistribution,
    UniformCostModel,
    ans_decode_stream,
    ans_encode_stream,
    deserialize_distributions,
    estimate_bits,
    huffman_build,
    huffman_decode_stream,
    huffman_decode_token,
    huffman_encode_stream,
    huffman_encode_token,
    quantize,
    serialize_distributions,
)
from zkl.errors import CorruptStreamError, FormatError
from zkl.intcode import HybridConfig, Token, raw_bit_count

M = 4096


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------

def test_quantize_single_symbol():
    d = quantize(Histogram([1]))
    assert d.freqs == [4096]


def test_quantize_golden_900_100():
    d = quantize(Histogram([900, 100]))
    assert d.freqs == [3686, 410]


def test_quantize_symmetry():
    assert quantize(Histogram([1, 1])).freqs == [2048, 2048]


def test_quantize_minimum_frequency():
    d = quantize(Histogram([10**9, 1, 1, 1]))
    assert all(f >= 1 for f in d.freqs)
    assert sum(d.freqs) == M


def test_quantize_rejects_empty_and_oversized():
    with pytest.raises(ValueError):
        quantize(Histogram([0, 0]))
    with pytest.raises(ValueError):
        quantize(Histogram([1] * (M + 1)))


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=300))
def test_quantize_sums_to_m(counts):
    h = Histogram(counts)
    if h.total == 0:
        return
    d = quantize(h)
    assert sum(d.freqs) == M
    for c, f in zip(counts, d.freqs):
        assert (f > 0) == (c > 0)


# ---------------------------------------------------------------------------
# Huffman construction
# ---------------------------------------------------------------------------

def classical_huffman_lengths(counts):
    """Unlimited-depth reference construction (heap of merges)."""
    used = [(c, s) for s, c in enumerate(counts) if c > 0]
    if len(used) == 1:
        out = [0] * len(counts)
        out[used[0][1]] = 1
        return out
    heap = [(c, idx, [s]) for idx, (c, s) in enumerate(used)]
    heapq.heapify(heap)
    lengths = [0] * len(counts)
    tick = len(heap)
    while len(heap) > 1:
        ca, _, syms_a = heapq.heappop(heap)
        cb, _, syms_b = heapq.heappop(heap)
        for s in syms_a + syms_b:
            lengths[s] += 1
        heapq.heappush(heap, (ca + cb, tick, syms_a + syms_b))
        tick += 1
    return lengths


def test_huffman_single_symbol_gets_one_bit():
    code = huffman_build(Histogram([5]))
    assert code.lengths == [1]


def test_huffman_classic_fixture():
    code = huffman_build(Histogram([2, 1, 1]))
    assert code.lengths == [1, 2, 2]


def test_huffman_matches_classical_oracle():
    rng = random.Random(99)
    for _ in range(200):
        nsyms = rng.randrange(2, 257)
        counts = [rng.randrange(0, 1000) for _ in range(nsyms)]
        if sum(1 for c in counts if c > 0) < 2:
            counts[0] += 1
            counts[1] += 1
        code = huffman_build(Histogram(counts))
        oracle = classical_huffman_lengths(counts)
        if max(oracle) <= 20:  # cap not binding
            ours = sum(c * ln for c, ln in zip(counts, code.lengths))
            ref = sum(c * ln for c, ln in zip(counts, oracle))
            assert ours == ref


def test_huffman_kraft_complete():
    rng = random.Random(5)
    for _ in range(50):
        counts = [rng.randrange(0, 50) for _ in range(40)]
        if not any(counts):
            counts[0] = 1
        code = huffman_build(Histogram(counts))
        used = [ln for ln in code.lengths if ln > 0]
        if len(used) > 1:
            assert sum(2.0 ** -ln for ln in used) == pytest.approx(1.0)


def test_huffman_length_cap_respected():
    # geometric counts force very deep classical trees
    counts = [1 << i for i in range(30)]
    code = huffman_build(Histogram(counts))
    assert max(code.lengths) <= 20


def test_huffman_code_rejects_incomplete():
    with pytest.raises(FormatError):
        HuffmanCode([2, 2, 2])  # Kraft 3/4
    with pytest.raises(FormatError):
        HuffmanCode([0, 0])
    # degenerate one-symbol code is allowed at length 1
    HuffmanCode([0, 1])


# ---------------------------------------------------------------------------
# stream coding
# ---------------------------------------------------------------------------

def _random_context_set(rng, mode, ncontexts=5, nsyms=24):
    hists = []
    for _ in range(ncontexts):
        counts = [rng.randrange(0, 200) for _ in range(nsyms)]
        if not any(counts):
            counts[rng.randrange(nsyms)] = 1
        hists.append(Histogram(counts))
    return ContextSet.from_histograms(mode, hists)


def _random_tokens(rng, dists, count, cfg):
    out = []
    for _ in range(count):
        c = rng.randrange(dists.num_contexts)
        d = dists.dists[c]
        freqs = d.freqs if dists.mode == "ans" else d.lengths
        syms = [s for s, f in enumerate(freqs) if f > 0]
        s = rng.choice(syms)
        nb = raw_bit_count(cfg, s)
        out.append((c, Token(s, rng.randrange(1 << nb) if nb else 0, nb)))
    return out


def test_ans_empty_stream_is_state_flush():
    dists = ContextSet("ans", [QuantizedDistribution([4096])])
    assert len(ans_encode_stream(dists, [])) == 4


def test_ans_single_symbol_costs_nothing():
    dists = ContextSet("ans", [QuantizedDistribution([4096])])
    toks = [(0, Token(0, 0, 0))] * 10**4
    payload = ans_encode_stream(dists, toks)
    assert len(payload) == 4  # freq M symbols emit zero bits
    back = ans_decode_stream(dists, payload, [0] * 10**4, lambda s: 0)
    assert back == [t for _, t in toks]


def test_ans_roundtrip_random_streams(rng):
    cfg = HybridConfig(4, 1, 0)
    for trial in range(8):
        dists = _random_context_set(rng, "ans")
        toks = _random_tokens(rng, dists, 3000, cfg)
        payload = ans_encode_stream(dists, toks)
        back = ans_decode_stream(
            dists, payload, [c for c, _ in toks], lambda s: raw_bit_count(cfg, s)
        )
        assert back == [t for _, t in toks]


def test_ans_payload_near_cross_entropy(rng):
    cfg = HybridConfig(4, 1, 0)
    dists = _random_context_set(rng, "ans", ncontexts=3, nsyms=16)
    toks = _random_tokens(rng, dists, 200_000, cfg)
    payload = ans_encode_stream(dists, toks)
    bound = sum(estimate_bits(dists.dists[c], t) for c, t in toks)
    assert len(payload) * 8 <= bound * 1.02 + 64 * 8


def test_ans_truncated_payload_errors(rng):
    cfg = HybridConfig(4, 1, 0)
    dists = _random_context_set(rng, "ans")
    toks = _random_tokens(rng, dists, 500, cfg)
    payload = ans_encode_stream(dists, toks)
    with pytest.raises(CorruptStreamError):
        ans_decode_stream(
            dists, payload[: len(payload) // 2], [c for c, _ in toks],
            lambda s: raw_bit_count(cfg, s),
        )


def test_ans_zero_frequency_symbol_rejected():
    dists = ContextSet("ans", [QuantizedDistribution([4096, 0])])
    with pytest.raises(ValueError):
        ans_encode_stream(dists, [(0, Token(1, 0, 0))])


def test_huffman_stream_roundtrip_and_seek(rng):
    cfg = HybridConfig(4, 1, 0)
    for trial in range(8):
        dists = _random_context_set(rng, "huffman")
        toks = _random_tokens(rng, dists, 3000, cfg)
        cut = rng.randrange(len(toks))
        payload, offs = huffman_encode_stream(dists, toks, checkpoints=[0, cut])
        back, end = huffman_decode_stream(
            dists, payload, [c for c, _ in toks], lambda s: raw_bit_count(cfg, s)
        )
        assert back == [t for _, t in toks]
        # entering at the recorded offset matches the sequential decode
        tail, _ = huffman_decode_stream(
            dists, payload, [c for c, _ in toks[cut:]],
            lambda s: raw_bit_count(cfg, s), start_bit=int(offs[1]),
        )
        assert tail == [t for _, t in toks[cut:]]


def test_huffman_single_symbol_one_bit_per_token():
    dists = ContextSet("huffman", [HuffmanCode([1])])
    toks = [(0, Token(0, 0, 0))] * 800
    payload, _ = huffman_encode_stream(dists, toks)
    assert len(payload) == 100


def test_huffman_token_level_roundtrip(rng):
    cfg = HybridConfig(4, 1, 1)
    code = huffman_build(Histogram([rng.randrange(1, 60) for _ in range(30)]))
    w = BitWriter()
    toks = []
    for _ in range(200):
        s = rng.randrange(30)
        nb = raw_bit_count(cfg, s)
        t = Token(s, rng.randrange(1 << nb) if nb else 0, nb)
        toks.append(t)
        huffman_encode_token(code, w, t)
    r = BitReader(w.getvalue())
    for t in toks:
        assert huffman_decode_token(code, r, lambda s: raw_bit_count(cfg, s)) == t


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_serialize_roundtrip_both_modes(rng):
    for mode in ("ans", "huffman"):
        dists = _random_context_set(rng, mode, ncontexts=7)
        dists.dists[3] = None  # unused context
        blob = serialize_distributions(dists)
        back, pos = deserialize_distributions(blob, 0, mode, 7)
        assert pos == len(blob)
        for a, b in zip(dists.dists, back.dists):
            if a is None:
                assert b is None
            elif mode == "ans":
                assert a.freqs == b.freqs
            else:
                assert a.lengths == b.lengths


def test_serialize_single_symbol_context():
    dists = ContextSet("ans", [QuantizedDistribution([4096])])
    blob = serialize_distributions(dists)
    assert blob[0] == 1  # alphabet size varint


def test_hand_assembled_table():
    # two contexts: [1 symbol, freq 4096], [2 symbols, 1024+3072]
    blob = bytes([1, 0x80, 0x20, 2, 0x80, 0x08, 0x80, 0x18])
    back, pos = deserialize_distributions(blob, 0, "ans", 2)
    assert pos == len(blob)
    assert back.dists[0].freqs == [4096]
    assert back.dists[1].freqs == [1024, 3072]


def test_deserialize_rejects_bad_sum():
    dists = ContextSet("ans", [QuantizedDistribution([4096])])
    blob = bytearray(serialize_distributions(dists))
    blob[1:3] = bytes([0x81, 0x20])  # freq 4097
    with pytest.raises(FormatError):
        deserialize_distributions(bytes(blob), 0, "ans", 1)


def test_deserialize_rejects_bad_kraft():
    blob = bytes([3, 2, 2, 2])
    with pytest.raises(FormatError):
        deserialize_distributions(blob, 0, "huffman", 1)


# ---------------------------------------------------------------------------
# cost estimation
# ---------------------------------------------------------------------------

def test_estimate_bits_goldens():
    full = QuantizedDistribution([4096])
    assert estimate_bits(full, Token(0, 0, 5)) == 5.0
    half = QuantizedDistribution([2048, 2048])
    assert estimate_bits(half, Token(0, 0, 3)) == 4.0
    code = HuffmanCode([1, 2, 2])
    assert estimate_bits(code, Token(1, 0, 2)) == 4.0
    uni = UniformCostModel(8)
    assert estimate_bits(uni, Token(5, 0, 1)) == 4.0
