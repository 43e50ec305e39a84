"""Integer block transform and scalar quantization.

The transform matrices are HEVC-style integer DCT-II approximations built
recursively: even rows of the 2N-point matrix are the N-point rows mirrored,
odd rows draw from a fixed per-size coefficient set. Rows have an L2 norm of
approximately 64*sqrt(N), so a 2D forward pass scales samples by 4096*N and
the forward/inverse pair normalizes with pure bit shifts.

Quantization uses step = 2^((qp-4)/6), held as the classic 6-per-octave
integer scale table, with a deadzone rounding offset of 1/3 on the forward
side. In lossless mode the whole stage is bypassed and the "coefficients"
are the residual itself.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Odd-row coefficient magnitudes per transform size.
_ODD_COEFFS = {
    4: (83, 36),
    8: (89, 75, 50, 18),
    16: (90, 87, 80, 70, 57, 43, 25, 9),
    32: (90, 90, 88, 85, 82, 78, 73, 67, 61, 54, 46, 38, 31, 22, 13, 4),
}

# Dequantization scale for qp % 6; doubles every 6 qp steps. Equals
# round(64 * 2^((qp-4)/6)).
_LEVEL_SCALE = (40, 45, 51, 57, 64, 72)

MAX_QP = 51


@lru_cache(maxsize=None)
def transform_matrix(n: int) -> np.ndarray:
    if n == 2:
        return np.array([[64, 64], [64, -64]], dtype=np.int64)
    half = transform_matrix(n // 2)
    t = np.zeros((n, n), dtype=np.int64)
    t[0::2, : n // 2] = half
    t[0::2, n // 2:] = half[:, ::-1]
    legal = np.array(_ODD_COEFFS[n], dtype=np.float64)
    j = 2 * np.arange(n // 2) + 1
    for r in range(1, n, 2):
        ideal = 64.0 * np.sqrt(2.0) * np.cos(np.pi * r * j / (2 * n))
        snapped = legal[np.argmin(np.abs(np.abs(ideal)[:, None] - legal[None, :]), axis=1)]
        row = (np.sign(ideal) * snapped).astype(np.int64)
        t[r, : n // 2] = row
        t[r, n // 2:] = -row[::-1]
    return t


def dequant_scale(qp: int) -> int:
    if not 0 <= qp <= MAX_QP:
        raise ValueError(f"qp {qp} out of range")
    return _LEVEL_SCALE[qp % 6] << (qp // 6)


def quant_step(qp: int) -> float:
    """The effective quantizer step size in sample units."""
    return dequant_scale(qp) / 64.0


def transform_quant(residual: np.ndarray, qp: int, lossless: bool) -> np.ndarray:
    """Forward transform plus quantization; identity in lossless mode."""
    residual = np.asarray(residual, dtype=np.int64)
    n = residual.shape[0]
    if residual.shape != (n, n):
        raise ValueError("residual must be square")
    if lossless:
        return residual.copy()
    t = transform_matrix(n)
    coeffs = t @ residual @ t.T
    q = 64 * n * dequant_scale(qp)
    mag = (3 * np.abs(coeffs) + q) // (3 * q)
    return (np.sign(coeffs) * mag).astype(np.int64)


def dequant_inverse(levels: np.ndarray, qp: int, lossless: bool) -> np.ndarray:
    """Dequantize and inverse-transform back to a residual block."""
    levels = np.asarray(levels, dtype=np.int64)
    if lossless:
        return levels.copy()
    n = levels.shape[0]
    t = transform_matrix(n)
    x = t.T @ (levels * dequant_scale(qp)) @ t
    shift = 18 + (n.bit_length() - 1)
    return (x + (1 << (shift - 1))) >> shift


def reconstruct_block(pred: np.ndarray, levels: np.ndarray, qp: int,
                      lossless: bool, bit_depth: int) -> np.ndarray:
    res = dequant_inverse(levels, qp, lossless)
    return np.clip(pred.astype(np.int64) + res, 0, (1 << bit_depth) - 1)
