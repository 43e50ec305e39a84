"""Implicit interpolation selection: block-level reference SAD and thresholds.

Both criteria are pure functions of decoder-visible state (the substituted
reference samples and the header thresholds), so encoder and decoder reach
identical decisions without any signaled bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .intra import InterpKind, ReferenceSamples

DEFAULT_SAD_THRESHOLD = 64       # 8-bit scale
DEFAULT_PIXDIFF_THRESHOLD = 128  # 8-bit scale

_SCALABLE_BIT_DEPTHS = (8, 10, 12)


@dataclass(frozen=True)
class RefCategory:
    """One row of the mode-to-reference-subset table.

    Category 1 covers the whole left column, category 2 the corner plus the
    adjacent halves of both edges, category 3 the whole top row. Members are
    expressed as indices into the canonical 4N+1 reference array.
    """

    ident: int

    def member_indices(self, size: int) -> np.ndarray:
        n2 = 2 * size
        if self.ident == 1:
            return np.arange(0, n2)
        if self.ident == 2:
            return np.concatenate([np.arange(size, n2 + 1),
                                   np.arange(n2 + 1, n2 + 1 + size)])
        if self.ident == 3:
            return np.arange(n2 + 1, 4 * size + 1)
        raise ValueError(f"bad category {self.ident}")


_CAT1 = RefCategory(1)
_CAT2 = RefCategory(2)
_CAT3 = RefCategory(3)


def category_of(mode: int) -> RefCategory | None:
    """Reference category of an oblique mode; None for integer-slope modes."""
    if not 0 <= mode <= 34:
        raise ValueError(f"mode {mode} out of range")
    if 3 <= mode <= 9:
        return _CAT1
    if 11 <= mode <= 17 or 19 <= mode <= 25:
        return _CAT2
    if 27 <= mode <= 33:
        return _CAT3
    return None


@dataclass(frozen=True)
class SelectorConfig:
    """Thresholds at 8-bit scale plus the bit depth they scale to."""

    sad_threshold: int = DEFAULT_SAD_THRESHOLD
    pixdiff_threshold: int = DEFAULT_PIXDIFF_THRESHOLD
    bit_depth: int = 8

    def scaled_sad(self) -> int:
        return scaled_threshold(self.sad_threshold, self.bit_depth)

    def scaled_pixdiff(self) -> int:
        return scaled_threshold(self.pixdiff_threshold, self.bit_depth)


def scaled_threshold(base: int, bit_depth: int) -> int:
    """Scale an 8-bit-domain threshold to another bit depth: base * 2^(bd-8)."""
    if bit_depth not in _SCALABLE_BIT_DEPTHS:
        raise ValueError(f"unsupported bit depth {bit_depth}")
    return base << (bit_depth - 8)


def _deviation_numerator(refs: ReferenceSamples, cat: RefCategory) -> tuple[int, int]:
    members = refs.values[cat.member_indices(refs.size)].astype(np.int64)
    n = members.size
    total = int(members.sum())
    return int(np.abs(n * members - total).sum()), n


def reference_sad(refs: ReferenceSamples, cat: RefCategory) -> Fraction:
    """Sum of absolute deviations of the category members from their mean.

    Computed in exact rational arithmetic: sum_i |x_i - mean(x)|.
    """
    num, n = _deviation_numerator(refs, cat)
    return Fraction(num, n)


def select_by_sad(refs: ReferenceSamples, mode: int, cfg: SelectorConfig) -> InterpKind:
    """Block-level choice: nearest-neighbor iff the category SAD >= threshold.

    The comparison is carried out on integers (both sides multiplied by the
    member count), so there is no floating point anywhere in this decision.
    """
    cat = category_of(mode)
    if cat is None:
        raise ValueError(f"mode {mode} has no reference category")
    num, n = _deviation_numerator(refs, cat)
    if num >= n * cfg.scaled_sad():
        return InterpKind.NEAREST
    return InterpKind.BILINEAR
