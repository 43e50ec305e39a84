"""35-mode intra prediction with selectable bilinear or nearest-neighbor interpolation.

Mode layout follows the HEVC convention:

- Mode 0: Planar, mode 1: DC
- Modes 2-17: horizontal family (project onto the left reference column)
- Modes 18-34: vertical family (project onto the top reference row)
- Modes 2, 10, 18, 26, 34 land on integer reference positions (no interpolation)

Fractional positions are expressed in 1/32 sample units. At a fractional
offset f with flanking references B (floor side) and C (ceil side):

- bilinear:          a' = ((32 - f) * B + f * C + 16) >> 5
- nearest-neighbor:  a' = B if f < 16 else C   (the half-sample tie goes to C)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .core import BlockRef, Plane

PLANAR = 0
DC = 1
HORIZONTAL = 10
VERTICAL = 26
NUM_MODES = 35

# Displacement per sample step for modes 2..34, in 1/32 units.
ANGLES = (
    32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26, -32,   # 2..18
    -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32,        # 19..34
)

# round(8192 / angle) for the negative angles; used to project the extended
# part of the reference array onto the side reference.
INV_ANGLE = {-2: -4096, -5: -1638, -9: -910, -13: -630,
             -17: -482, -21: -390, -26: -315, -32: -256}

INTEGER_SLOPE_MODES = frozenset({PLANAR, DC, 2, HORIZONTAL, 18, VERTICAL, 34})

# At 4x4 the nearest-neighbor predictors of these modes collapse onto the
# neighboring integer-slope mode.
NN_MERGE_4X4 = {9: 10, 11: 10, 25: 26, 27: 26}


class InterpKind(IntEnum):
    """Interpolation used at fractional positions; the value is the wire flag."""

    BILINEAR = 0
    NEAREST = 1


def is_integer_slope(mode: int) -> bool:
    """True for modes whose projections always land on integer reference positions."""
    if not 0 <= mode < NUM_MODES:
        raise ValueError(f"mode {mode} out of range")
    return mode in INTEGER_SLOPE_MODES


def nn_merge_target(mode: int, size: int) -> int | None:
    """Mode whose nearest-neighbor predictor is sample-identical at 4x4, if any."""
    if size != 4:
        return None
    return NN_MERGE_4X4.get(mode)


def mode_angle(mode: int) -> int:
    return ANGLES[mode - 2]


# ---------------------------------------------------------------------------
# reference samples


@dataclass
class ReferenceSamples:
    """The 4N+1 boundary predictors of an NxN block, after substitution.

    ``values`` is ordered bottom-left upward along the left column
    (indices 0..2N-1, index 2N-1 adjacent to the block's top-left row),
    then the corner (index 2N), then the top row left to right
    (indices 2N+1..4N). ``available`` records the pre-substitution state.
    """

    size: int
    bit_depth: int
    values: np.ndarray
    available: np.ndarray

    def left_with_corner(self) -> np.ndarray:
        """Corner followed by the left column top-down (length 2N+1)."""
        n2 = 2 * self.size
        return self.values[n2::-1]

    def top_with_corner(self) -> np.ndarray:
        """Corner followed by the top row left-to-right (length 2N+1)."""
        return self.values[2 * self.size:]


def _raster_available(block: BlockRef, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    # Raster coding of equal-size blocks: everything strictly above the block,
    # plus rows covered by the block to its left. Below-left is not yet coded.
    above = ys < block.y
    left = (xs < block.x) & (ys < block.y + block.size)
    return above | left


def build_reference_samples(recon, block: BlockRef, bit_depth: int | None = None,
                            coded: np.ndarray | None = None) -> ReferenceSamples:
    """Gather and substitute the 4N+1 boundary references for a block.

    ``recon`` is a Plane or a 2D sample array of already-reconstructed
    content. ``coded`` optionally marks reconstructed 4x4 units (as produced
    by the quadtree coding order); when omitted, raster-scan causality of
    equal-size blocks is assumed. Unavailable entries are filled by scanning
    from the bottom-left entry upward then rightward, propagating the last
    available value; if nothing is available every entry becomes the
    mid-range value 2^(bit_depth-1).
    """
    if isinstance(recon, Plane):
        if bit_depth is None:
            bit_depth = recon.bit_depth
        recon = recon.samples
    if bit_depth is None:
        raise ValueError("bit_depth required when recon is a bare array")
    h, w = recon.shape
    n = block.size
    n2 = 2 * n
    # entry coordinates in canonical order
    xs = np.empty(4 * n + 1, dtype=np.int64)
    ys = np.empty(4 * n + 1, dtype=np.int64)
    xs[:n2] = block.x - 1
    ys[:n2] = block.y + n2 - 1 - np.arange(n2)
    xs[n2] = block.x - 1
    ys[n2] = block.y - 1
    xs[n2 + 1:] = block.x + np.arange(n2)
    ys[n2 + 1:] = block.y - 1

    inside = (xs >= 0) & (ys >= 0) & (xs < w) & (ys < h)
    if coded is None:
        avail = inside & _raster_available(block, xs, ys)
    else:
        cx = np.clip(xs, 0, w - 1) >> 2
        cy = np.clip(ys, 0, h - 1) >> 2
        avail = inside & coded[cy, cx]

    gx = np.clip(xs, 0, w - 1)
    gy = np.clip(ys, 0, h - 1)
    vals = recon[gy, gx].astype(np.int32)

    if not avail.any():
        vals[:] = 1 << (bit_depth - 1)
    elif not avail.all():
        # forward propagation from the bottom-left scan origin
        idx = np.where(avail, np.arange(vals.size), -1)
        ff = np.maximum.accumulate(idx)
        first = int(np.argmax(avail))
        ff[ff < 0] = first
        vals = vals[ff]
    return ReferenceSamples(n, bit_depth, vals, avail)


# ---------------------------------------------------------------------------
# prediction tables
#
# For every angular mode and block size we precompute, per predicted sample,
# the canonical reference indices of the flanking samples B and C and the
# fractional offset f. Prediction is then a pair of gathers.


@dataclass(frozen=True)
class _ModeTable:
    bidx: np.ndarray
    cidx: np.ndarray
    fact: np.ndarray


def _map_extended_index(e: np.ndarray, angle: int, size: int, vertical: bool) -> np.ndarray:
    """Map extended-reference positions to indices into the canonical array."""
    n2 = 2 * size
    out = np.where(e >= 0, (n2 + e) if vertical else (n2 - e), 0)
    neg = e < 0
    if neg.any():
        inv = INV_ANGLE[angle]
        k = (e[neg] * inv + 128) >> 8
        if int(k.max()) > n2:
            raise AssertionError("reference projection out of range")
        out[neg] = (n2 - k) if vertical else (n2 + k)
    return out


@lru_cache(maxsize=None)
def _mode_tables(size: int) -> dict[int, _ModeTable]:
    tabs = {}
    cross = np.arange(size)
    scaled = np.arange(1, size + 1)
    for mode in range(2, NUM_MODES):
        angle = ANGLES[mode - 2]
        vertical = mode >= 18
        pos = scaled * angle
        idx = pos >> 5
        fact = pos & 31
        if vertical:
            e_b = cross[None, :] + idx[:, None] + 1
            f = np.broadcast_to(fact[:, None], (size, size)).copy()
        else:
            e_b = cross[:, None] + idx[None, :] + 1
            f = np.broadcast_to(fact[None, :], (size, size)).copy()
        e_c = e_b + (f > 0)  # C is unused at integer positions
        bidx = _map_extended_index(e_b, angle, size, vertical)
        cidx = _map_extended_index(e_c, angle, size, vertical)
        tabs[mode] = _ModeTable(bidx, cidx, f)
    return tabs


@lru_cache(maxsize=None)
def _stacked_tables(size: int) -> _ModeTable:
    tabs = _mode_tables(size)
    return _ModeTable(
        np.stack([tabs[m].bidx for m in range(2, NUM_MODES)]),
        np.stack([tabs[m].cidx for m in range(2, NUM_MODES)]),
        np.stack([tabs[m].fact for m in range(2, NUM_MODES)]),
    )


# ---------------------------------------------------------------------------
# predictors


@dataclass
class PredBlock:
    """Predicted samples plus a per-sample record of the interpolation used."""

    size: int
    samples: np.ndarray
    used_nearest: np.ndarray


def _predict_planar(refs: ReferenceSamples) -> np.ndarray:
    n = refs.size
    top = refs.top_with_corner()[1:].astype(np.int32)
    left = refs.left_with_corner()[1:].astype(np.int32)
    top_right = int(top[n])
    bottom_left = int(left[n])
    x = np.arange(n)
    y = np.arange(n)
    horiz = (n - 1 - x)[None, :] * left[:n, None] + (x + 1)[None, :] * top_right
    vert = (n - 1 - y)[:, None] * top[None, :n] + (y + 1)[:, None] * bottom_left
    shift = n.bit_length()  # log2(n) + 1
    return (horiz + vert + n) >> shift


def _predict_dc(refs: ReferenceSamples) -> np.ndarray:
    n = refs.size
    top = refs.top_with_corner()[1 : n + 1].astype(np.int64)
    left = refs.left_with_corner()[1 : n + 1].astype(np.int64)
    dc = int((top.sum() + left.sum() + n) >> (n.bit_length()))
    return np.full((n, n), dc, dtype=np.int32)


class AngularPredictions:
    """Batched predictions of all 33 angular modes for one reference set.

    The bilinear and nearest variants are computed lazily so that encoder
    configurations which never use one of them never touch its code path.
    Arrays are indexed by ``mode - 2``.
    """

    def __init__(self, refs: ReferenceSamples):
        self.refs = refs
        t = _stacked_tables(refs.size)
        vals = refs.values.astype(np.int32)
        self._b = vals[t.bidx]
        self._c = vals[t.cidx]
        self._f = t.fact
        self._bilinear = None
        self._nearest = None

    @property
    def bilinear(self) -> np.ndarray:
        if self._bilinear is None:
            f = self._f
            self._bilinear = ((32 - f) * self._b + f * self._c + 16) >> 5
        return self._bilinear

    @property
    def nearest(self) -> np.ndarray:
        if self._nearest is None:
            self._nearest = np.where(self._f < 16, self._b, self._c)
        return self._nearest

    def adaptive(self, threshold: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-pixel hybrid: nearest where |B - C| >= threshold, else bilinear.

        Returns (samples, nearest-used mask), both stacked over the 33 modes.
        """
        mask = (np.abs(self._b - self._c) >= threshold) & (self._f > 0)
        return np.where(mask, self.nearest, self.bilinear), mask


def predict(refs: ReferenceSamples, mode: int, interp: InterpKind) -> PredBlock:
    """Predict an NxN block from substituted references.

    Planar and DC ignore ``interp``; angular modes interpolate fractional
    positions with the requested kind. Integer positions (f = 0) are copied
    directly under either kind.
    """
    n = refs.size
    if mode == PLANAR:
        return PredBlock(n, _predict_planar(refs), np.zeros((n, n), dtype=bool))
    if mode == DC:
        return PredBlock(n, _predict_dc(refs), np.zeros((n, n), dtype=bool))
    t = _mode_tables(n)[mode]
    vals = refs.values.astype(np.int32)
    b = vals[t.bidx]
    c = vals[t.cidx]
    f = t.fact
    if interp == InterpKind.NEAREST:
        out = np.where(f < 16, b, c)
        used = f > 0
    else:
        out = ((32 - f) * b + f * c + 16) >> 5
        used = np.zeros((n, n), dtype=bool)
    return PredBlock(n, out, used)


def predict_adaptive(refs: ReferenceSamples, mode: int, threshold: int) -> PredBlock:
    """Pixel-level hybrid predictor.

    Each fractional position uses the nearest-neighbor rule when its flanking
    references differ by at least ``threshold`` (in this plane's sample
    units), and bilinear interpolation otherwise.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    n = refs.size
    if mode in (PLANAR, DC):
        return predict(refs, mode, InterpKind.BILINEAR)
    t = _mode_tables(n)[mode]
    vals = refs.values.astype(np.int32)
    b = vals[t.bidx]
    c = vals[t.cidx]
    f = t.fact
    mask = (np.abs(b - c) >= threshold) & (f > 0)
    bil = ((32 - f) * b + f * c + 16) >> 5
    nn = np.where(f < 16, b, c)
    return PredBlock(n, np.where(mask, nn, bil), mask)
