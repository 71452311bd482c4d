"""Bit-granular I/O over byte buffers.

Bits are packed LSB-first within each byte: bit b of the stream lands in
byte b // 8 at position b % 8.  Single reads and writes are capped at 57
bits so that any width plus a 7-bit phase fits in one 64-bit word.
"""

from .errors import CorruptStreamError

MAX_BITS = 57


class BitWriter:
    """Append-only bit cursor over a growable byte buffer."""

    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._phase = 0

    @property
    def bit_position(self) -> int:
        return len(self._bytes) * 8 + self._phase

    def write_bits(self, value: int, count: int) -> None:
        """Append the low `count` bits of `value`, LSB-first."""
        if not 0 <= count <= MAX_BITS:
            raise ValueError(f"bit count {count} outside [0, {MAX_BITS}]")
        if value < 0 or value >> count:
            raise ValueError(f"value {value} does not fit in {count} bits")
        self._acc |= value << self._phase
        self._phase += count
        while self._phase >= 8:
            self._bytes.append(self._acc & 0xFF)
            self._acc >>= 8
            self._phase -= 8

    def getvalue(self) -> bytes:
        """Return the buffer so far, zero-padding any trailing partial byte."""
        if self._phase:
            return bytes(self._bytes) + bytes([self._acc])
        return bytes(self._bytes)


class BitReader:
    """Seekable bit cursor over an immutable byte buffer."""

    def __init__(self, buffer: bytes, bit_position: int = 0):
        self._buf = bytes(buffer)
        self._nbits = 8 * len(self._buf)
        self.seek_to_bit(bit_position)

    @property
    def bit_position(self) -> int:
        return self._pos

    def seek_to_bit(self, offset: int) -> None:
        if not 0 <= offset <= self._nbits:
            raise CorruptStreamError(
                f"seek to bit {offset} outside stream of {self._nbits} bits"
            )
        self._pos = offset

    def read_bits(self, count: int) -> int:
        """Read the next `count` bits, LSB-first."""
        if not 0 <= count <= MAX_BITS:
            raise ValueError(f"bit count {count} outside [0, {MAX_BITS}]")
        start = self._pos
        end = start + count
        if end > self._nbits:
            raise CorruptStreamError("read past end of bit stream")
        chunk = int.from_bytes(self._buf[start >> 3 : (end + 7) >> 3], "little")
        self._pos = end
        return (chunk >> (start & 7)) & ((1 << count) - 1)
