"""Bin-level syntax shared by the encoder and the decoder.

Writers expose ``ctx(idx, bit)`` and ``byp(bit)``; readers expose
``ctx(idx) -> bit`` and ``byp() -> bit``. The same functions drive the
committed encode, the decoder parse, and (via the ``est_*`` helpers) the
fractional-bit rate estimates used during mode decision.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .bac import PROB_ONE, ContextSet

# context ids
CTX_SPLIT = 0          # 3 contexts, index = split-likelihood of left/up neighbors
CTX_MODE_ANGULAR = 3
CTX_CHROMA_DERIVED = 4
CTX_INTERP = 5         # 3 contexts, index = flag_up + flag_left
CTX_CBF_LUMA = 8
CTX_CBF_CHROMA = 9
CTX_SIG = 10           # 3 contexts by scan-position class
NUM_CONTEXTS = 13

_N_ANGULAR = 33  # modes 2..34


def new_contexts() -> ContextSet:
    return ContextSet(NUM_CONTEXTS)


def interp_context_index(flag_up: int | None, flag_left: int | None) -> int:
    """Context for the interpolation flag: flag_up + flag_left, absent -> 0."""
    total = 0
    for flag in (flag_up, flag_left):
        if flag is None:
            continue
        if flag not in (0, 1):
            raise ValueError(f"flag must be 0, 1 or None, got {flag!r}")
        total += flag
    return total


# ---------------------------------------------------------------------------
# scan order and helpers


@lru_cache(maxsize=None)
def zigzag_positions(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Up-right diagonal scan as (ys, xs) index arrays."""
    order = sorted(((x + y, -y, y, x) for y in range(n) for x in range(n)))
    ys = np.array([o[2] for o in order], dtype=np.int64)
    xs = np.array([o[3] for o in order], dtype=np.int64)
    return ys, xs


@lru_cache(maxsize=None)
def sig_ctx_classes(n: int) -> np.ndarray:
    """Significance context class per zigzag rank: DC, low band, high band."""
    ranks = np.arange(n * n)
    cls = np.full(n * n, 2, dtype=np.int64)
    cls[ranks <= (n * n) // 4] = 1
    cls[0] = 0
    return cls


def _eg_bit_length(values: np.ndarray, k: int) -> np.ndarray:
    v = values.astype(np.int64) + (1 << k)
    m = np.floor(np.log2(v)).astype(np.int64)
    return 2 * m - k + 1


def signed_to_unsigned(values: np.ndarray) -> np.ndarray:
    """Map signed residuals to the non-negative exp-Golomb alphabet."""
    v = values.astype(np.int64)
    return np.where(v > 0, 2 * v - 1, -2 * v)


def write_eg(w, value: int, k: int) -> None:
    v = value + (1 << k)
    m = v.bit_length() - 1
    for _ in range(m - k):
        w.byp(0)
    for shift in range(m, -1, -1):
        w.byp((v >> shift) & 1)


def read_eg(r, k: int) -> int:
    m = k
    while r.byp() == 0:
        m += 1
    v = 1
    for _ in range(m):
        v = (v << 1) | r.byp()
    return v - (1 << k)


# ---------------------------------------------------------------------------
# intra mode


def write_intra_mode(w, mode: int) -> None:
    if mode < 2:
        w.ctx(CTX_MODE_ANGULAR, 0)
        w.byp(mode)  # 0: planar, 1: dc
        return
    w.ctx(CTX_MODE_ANGULAR, 1)
    _write_truncated_binary(w, mode - 2, _N_ANGULAR)


def read_intra_mode(r) -> int:
    if r.ctx(CTX_MODE_ANGULAR) == 0:
        return r.byp()
    return 2 + _read_truncated_binary(r, _N_ANGULAR)


def _write_truncated_binary(w, value: int, n: int) -> None:
    k = n.bit_length() - 1
    u = (1 << (k + 1)) - n
    if value < u:
        for shift in range(k - 1, -1, -1):
            w.byp((value >> shift) & 1)
    else:
        value += u
        for shift in range(k, -1, -1):
            w.byp((value >> shift) & 1)


def _read_truncated_binary(r, n: int) -> int:
    k = n.bit_length() - 1
    u = (1 << (k + 1)) - n
    v = 0
    for _ in range(k):
        v = (v << 1) | r.byp()
    if v < u:
        return v
    v = (v << 1) | r.byp()
    return v - u


def est_intra_mode_bits(ctxs: ContextSet, mode: int) -> float:
    if mode < 2:
        return ctxs.bits(CTX_MODE_ANGULAR, 0) + 1.0
    k = _N_ANGULAR.bit_length() - 1
    u = (1 << (k + 1)) - _N_ANGULAR
    tb = k if (mode - 2) < u else k + 1
    return ctxs.bits(CTX_MODE_ANGULAR, 1) + tb


# ---------------------------------------------------------------------------
# interpolation flag (Nearest = 1)


def write_interp_flag(w, bit: int, ctx_index: int, single_context: bool) -> None:
    w.ctx(CTX_INTERP + (0 if single_context else ctx_index), bit)


def read_interp_flag(r, ctx_index: int, single_context: bool) -> int:
    return r.ctx(CTX_INTERP + (0 if single_context else ctx_index))


def est_interp_flag_bits(ctxs: ContextSet, bit: int, ctx_index: int,
                         single_context: bool) -> float:
    return ctxs.bits(CTX_INTERP + (0 if single_context else ctx_index), bit)


# ---------------------------------------------------------------------------
# chroma mode: "derived" bin, else fixed 2-bit index


def chroma_candidates(luma_mode: int) -> list[int]:
    """The four fixed chroma modes with the luma duplicate replaced by 34."""
    base = [0, 26, 10, 1]
    if luma_mode in base:
        base[base.index(luma_mode)] = 34
    return base


def write_chroma_mode(w, index: int) -> None:
    """index 4 is the derived mode; 0..3 select from chroma_candidates."""
    if index == 4:
        w.ctx(CTX_CHROMA_DERIVED, 1)
        return
    w.ctx(CTX_CHROMA_DERIVED, 0)
    w.byp((index >> 1) & 1)
    w.byp(index & 1)


def read_chroma_mode(r) -> int:
    if r.ctx(CTX_CHROMA_DERIVED):
        return 4
    return (r.byp() << 1) | r.byp()


def est_chroma_mode_bits(ctxs: ContextSet, index: int) -> float:
    if index == 4:
        return ctxs.bits(CTX_CHROMA_DERIVED, 1)
    return ctxs.bits(CTX_CHROMA_DERIVED, 0) + 2.0


# ---------------------------------------------------------------------------
# residual
#
# Lossy: coded-block flag, then per zigzag position a context-coded
# significance bin; significant coefficients carry a bypass sign and an
# order-0 exp-Golomb magnitude. Lossless: coded-block flag, then the raw
# residual samples in raster order as signed order-1 exp-Golomb, all bypass.


def write_residual(w, levels: np.ndarray, luma: bool, lossless: bool) -> None:
    n = levels.shape[0]
    any_nz = bool(levels.any())
    w.ctx(CTX_CBF_LUMA if luma else CTX_CBF_CHROMA, int(any_nz))
    if not any_nz:
        return
    if lossless:
        for v in signed_to_unsigned(levels.ravel()):
            write_eg(w, int(v), 1)
        return
    ys, xs = zigzag_positions(n)
    cls = sig_ctx_classes(n)
    scan = levels[ys, xs]
    for rank in range(n * n):
        lv = int(scan[rank])
        w.ctx(CTX_SIG + int(cls[rank]), int(lv != 0))
        if lv:
            w.byp(int(lv < 0))
            write_eg(w, abs(lv) - 1, 0)


def read_residual(r, n: int, luma: bool, lossless: bool) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.int64)
    if not r.ctx(CTX_CBF_LUMA if luma else CTX_CBF_CHROMA):
        return out
    if lossless:
        flat = np.empty(n * n, dtype=np.int64)
        for i in range(n * n):
            u = read_eg(r, 1)
            flat[i] = (u + 1) >> 1 if u & 1 else -(u >> 1)
        return flat.reshape(n, n)
    ys, xs = zigzag_positions(n)
    cls = sig_ctx_classes(n)
    for rank in range(n * n):
        if r.ctx(CTX_SIG + int(cls[rank])):
            neg = r.byp()
            mag = read_eg(r, 0) + 1
            out[ys[rank], xs[rank]] = -mag if neg else mag
    return out


def est_residual_bits(ctxs: ContextSet, levels: np.ndarray, luma: bool,
                      lossless: bool) -> float:
    """Rate estimate with context probabilities frozen at their current state."""
    n = levels.shape[0]
    cbf_ctx = CTX_CBF_LUMA if luma else CTX_CBF_CHROMA
    any_nz = bool(levels.any())
    bits = ctxs.bits(cbf_ctx, int(any_nz))
    if not any_nz:
        return bits
    if lossless:
        return bits + float(_eg_bit_length(signed_to_unsigned(levels.ravel()), 1).sum())
    ys, xs = zigzag_positions(n)
    scan = levels[ys, xs]
    sig = scan != 0
    p1 = ctxs.p[CTX_SIG + sig_ctx_classes(n)] / PROB_ONE
    prob = np.where(sig, p1, 1.0 - p1)
    bits += float(-np.log2(prob).sum())
    nz = np.abs(scan[sig])
    if nz.size:
        bits += nz.size  # signs
        bits += float(_eg_bit_length(nz - 1, 0).sum())
    return bits


def est_ctx_bits(ctxs: ContextSet, idx: int, bit: int) -> float:
    return ctxs.bits(idx, bit)


def ideal_code_length(p_scaled: int, bit: int) -> float:
    p1 = p_scaled / PROB_ONE
    return -math.log2(p1 if bit else 1.0 - p1)
