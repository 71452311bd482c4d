import numpy as np
import pytest
from hypothesis import given, strategies as st

from zkl import _kernels as K
from zkl.intcode import (
    HybridConfig,
    Token,
    decode_hybrid,
    encode_hybrid,
    pack_signed,
    raw_bit_count,
    unpack_signed,
)


def all_configs(kmax=6):
    for k in range(kmax + 1):
        for i in range(3):
            for j in range(3):
                if k >= i + j:
                    yield HybridConfig(k, i, j)


def test_config_validation():
    with pytest.raises(ValueError):
        HybridConfig(1, 1, 1)
    with pytest.raises(ValueError):
        HybridConfig(2, -1, 0)


def test_alphabet_size_formula():
    cfg = HybridConfig(4, 1, 1)
    # 2^k symbols for small values, 2^(i+j) per extra magnitude class
    assert cfg.alphabet_size(4) == 16
    assert cfg.alphabet_size(5) == 16 + 4
    assert cfg.alphabet_size(10) == 16 + 6 * 4


def test_golden_23():
    cfg = HybridConfig(4, 1, 1)
    assert encode_hybrid(cfg, 23) == Token(17, 0b11, 2)
    assert decode_hybrid(cfg, 17, 0b11) == 23
    assert raw_bit_count(cfg, 17) == 2


def test_golden_33():
    cfg = HybridConfig(4, 1, 1)
    assert encode_hybrid(cfg, 33) == Token(21, 0b000, 3)
    assert decode_hybrid(cfg, 21, 0b000) == 33
    assert raw_bit_count(cfg, 21) == 3


def test_golden_bit_pattern_11010011():
    # the worked bit pattern equals 211; (s, t) follows the pattern
    cfg = HybridConfig(4, 1, 2)
    x = 0b11010011
    assert encode_hybrid(cfg, x) == Token(47, 0b0100, 4)
    assert decode_hybrid(cfg, 47, 0b0100) == x


def test_small_value_passthrough():
    cfg = HybridConfig(4, 1, 0)
    assert encode_hybrid(cfg, 7) == Token(7, 0, 0)
    assert decode_hybrid(cfg, 3, 0) == 3
    for s in range(16):
        assert raw_bit_count(cfg, s) == 0


def test_bad_symbol_rejected():
    cfg = HybridConfig(3, 0, 0)
    with pytest.raises(ValueError):
        decode_hybrid(cfg, cfg.alphabet_size(), 0)


def test_bijection_sweep_small():
    for cfg in all_configs(kmax=5):
        seen = {}
        for x in range(1 << 12):
            t = encode_hybrid(cfg, x)
            assert t.raw_value < (1 << t.raw_count) or t.raw_count == 0
            assert raw_bit_count(cfg, t.symbol) == t.raw_count
            key = (t.symbol, t.raw_value)
            assert key not in seen, (cfg, x, seen[key])
            seen[key] = x
            assert decode_hybrid(cfg, t.symbol, t.raw_value) == x


def test_alphabet_bound_over_sweep():
    r = 14
    for cfg in all_configs(kmax=5):
        top = max(encode_hybrid(cfg, x).symbol for x in range(1 << r))
        assert top < cfg.alphabet_size(r)


@given(st.integers(min_value=0, max_value=(1 << 62) - 1))
def test_bijection_property_large(x):
    cfg = HybridConfig(4, 1, 1)
    t = encode_hybrid(cfg, x)
    assert decode_hybrid(cfg, t.symbol, t.raw_value) == x


def test_pack_signed_goldens():
    assert pack_signed(0) == 0
    assert pack_signed(3) == 6
    assert pack_signed(-4) == 7
    assert unpack_signed(0) == 0
    assert unpack_signed(7) == -4


def test_pack_signed_bijection_sweep():
    for x in range(-3000, 3000):
        u = pack_signed(x)
        assert u >= 0
        assert unpack_signed(u) == x
    for u in range(6000):
        assert pack_signed(unpack_signed(u)) == u


def test_kernel_array_coding_matches_scalar(rng):
    for cfg in (HybridConfig(4, 1, 0), HybridConfig(5, 2, 1), HybridConfig(3, 0, 0)):
        vals = np.array(
            [rng.randrange(1 << rng.randrange(1, 50)) for _ in range(2000)]
            + list(range(70)),
            dtype=np.uint64,
        )
        sym, nbits, raw = K.hybrid_encode_array(vals, cfg.k, cfg.i, cfg.j)
        for x, s, nb, rv in zip(vals.tolist(), sym, nbits, raw):
            assert encode_hybrid(cfg, x) == Token(int(s), int(rv), int(nb))
        back = K.hybrid_decode_array(sym.astype(np.int64), raw, cfg.k, cfg.i, cfg.j)
        assert np.array_equal(back, vals)


def test_nbits_lut_matches_raw_bit_count():
    cfg = HybridConfig(4, 1, 1)
    lut = K.hybrid_nbits_lut(cfg.k, cfg.i, cfg.j, cfg.alphabet_size(40))
    for s, nb in enumerate(lut.tolist()):
        assert nb == raw_bit_count(cfg, s)
