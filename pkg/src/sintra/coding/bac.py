"""Adaptive binary range coder.

A 32-bit low/range coder with byte renormalization and carry propagation.
Each context holds P(bin = 1) as a 15-bit scaled integer, updated after
every coded bin by

    p += (2^15 - p) >> 5   on a 1
    p -= p >> 5            on a 0

which keeps p strictly inside (0, 2^15). Bypass bins split the range in
half and leave no state behind.
"""

from __future__ import annotations

import math

import numpy as np

PROB_BITS = 15
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
ADAPT_SHIFT = 5

_TOP = 1 << 24
_MASK32 = (1 << 32) - 1


class BitstreamError(ValueError):
    """Raised when a stream cannot be parsed (truncation, desync, bad syntax)."""


class ContextSet:
    """A bank of adaptive bin probabilities addressed by integer id."""

    def __init__(self, count: int):
        self.p = np.full(count, PROB_INIT, dtype=np.int64)

    def update(self, idx: int, bit: int) -> None:
        p = int(self.p[idx])
        if bit:
            self.p[idx] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
        else:
            self.p[idx] = p - (p >> ADAPT_SHIFT)

    def bits(self, idx: int, bit: int) -> float:
        """Fractional-bit cost of coding ``bit`` in this context right now."""
        p1 = int(self.p[idx]) / PROB_ONE
        return -math.log2(p1 if bit else 1.0 - p1)

    def snapshot(self) -> np.ndarray:
        return self.p.copy()

    def restore(self, snap: np.ndarray) -> None:
        self.p[:] = snap


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        if self.low < 0xFF000000 or self.low > _MASK32:
            carry = self.low >> 32
            self.out.append((self.cache + carry) & 0xFF)
            for _ in range(self.cache_size - 1):
                self.out.append((0xFF + carry) & 0xFF)
            self.cache_size = 0
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low << 8) & _MASK32

    def encode(self, ctxs: ContextSet, idx: int, bit: int) -> None:
        bound = (self.range >> PROB_BITS) * int(ctxs.p[idx])
        if bit:
            self.range = bound
        else:
            self.low += bound
            self.range -= bound
        ctxs.update(idx, bit)
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def encode_bypass(self, bit: int) -> None:
        bound = self.range >> 1
        if bit:
            self.range = bound
        else:
            self.low += bound
            self.range -= bound
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.range = _MASK32
        if self._byte() != 0:
            raise BitstreamError("bad range coder preamble")
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._byte()

    def _byte(self) -> int:
        if self.pos >= len(self.data):
            raise BitstreamError("payload exhausted (truncated or corrupt stream)")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode(self, ctxs: ContextSet, idx: int) -> int:
        bound = (self.range >> PROB_BITS) * int(ctxs.p[idx])
        if self.code < bound:
            bit = 1
            self.range = bound
        else:
            bit = 0
            self.code -= bound
            self.range -= bound
        ctxs.update(idx, bit)
        while self.range < _TOP:
            self.range <<= 8
            self.code = ((self.code << 8) | self._byte()) & _MASK32
        return bit

    def decode_bypass(self) -> int:
        bound = self.range >> 1
        if self.code < bound:
            bit = 1
            self.range = bound
        else:
            bit = 0
            self.code -= bound
            self.range -= bound
        while self.range < _TOP:
            self.range <<= 8
            self.code = ((self.code << 8) | self._byte()) & _MASK32
        return bit
