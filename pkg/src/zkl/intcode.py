"""Hybrid integer tokenization and the signed-to-unsigned bijection.

Every integer below 2**k becomes its own alphabet symbol.  A larger value
x with highest set bit at position p keeps its top `i` bits (after the
leading one) and its low `j` bits inside the entropy-coded symbol; the
middle p-i-j-1 bits travel as raw trailing bits.
"""

from dataclasses import dataclass

MAX_VALUE_BITS = 62


@dataclass(frozen=True)
class HybridConfig:
    """The (k, i, j) parameters governing integer tokenization."""

    k: int
    i: int
    j: int

    def __post_init__(self):
        if self.i < 0 or self.j < 0 or self.k < self.i + self.j:
            raise ValueError(f"invalid hybrid config {self}: need k >= i + j >= 0")

    def alphabet_size(self, value_bits: int = MAX_VALUE_BITS) -> int:
        """Number of symbols needed for integers up to `value_bits` bits."""
        if value_bits <= self.k:
            return 1 << self.k
        return (1 << self.k) + (value_bits - self.k) * (1 << (self.i + self.j))


@dataclass(frozen=True)
class Token:
    """An entropy-coded symbol plus its raw trailing bits."""

    symbol: int
    raw_value: int
    raw_count: int


def encode_hybrid(cfg: HybridConfig, x: int) -> Token:
    """Split nonnegative `x` into a Token under `cfg`."""
    if x < 0 or x >= 1 << MAX_VALUE_BITS:
        raise ValueError(f"value {x} outside [0, 2**{MAX_VALUE_BITS})")
    if x < 1 << cfg.k:
        return Token(x, 0, 0)
    p = x.bit_length()
    m = (x >> (p - 1 - cfg.i)) & ((1 << cfg.i) - 1)
    l = x & ((1 << cfg.j) - 1)
    nraw = p - 1 - cfg.i - cfg.j
    t = (x >> cfg.j) & ((1 << nraw) - 1)
    s = (1 << cfg.k) + (p - cfg.k - 1) * (1 << (cfg.i + cfg.j)) + m * (1 << cfg.j) + l
    return Token(s, t, nraw)


def raw_bit_count(cfg: HybridConfig, symbol: int) -> int:
    """Width of the raw-bit field implied by `symbol` alone."""
    if symbol < 1 << cfg.k:
        return 0
    n = (symbol - (1 << cfg.k)) >> (cfg.i + cfg.j)
    return n + cfg.k - cfg.i - cfg.j


def decode_hybrid(cfg: HybridConfig, symbol: int, raw_value: int) -> int:
    """Reassemble the integer encoded as (symbol, raw_value)."""
    if symbol < 0 or symbol >= cfg.alphabet_size():
        raise ValueError(f"symbol {symbol} outside alphabet for {cfg}")
    if symbol < 1 << cfg.k:
        return symbol
    l = (symbol - (1 << cfg.k)) & ((1 << cfg.j) - 1)
    s = (symbol - l - (1 << cfg.k)) >> cfg.j
    m = s & ((1 << cfg.i) - 1)
    n = (s - m) >> cfg.i
    return (1 << (n + cfg.k)) + (m << (n + cfg.k - cfg.i)) + (raw_value << cfg.j) + l


def pack_signed(x: int) -> int:
    """Map an integer to a natural number: 2x for x >= 0, -2x-1 otherwise."""
    return 2 * x if x >= 0 else -2 * x - 1


def unpack_signed(u: int) -> int:
    """Inverse of pack_signed."""
    return u // 2 if u % 2 == 0 else -(u + 1) // 2
