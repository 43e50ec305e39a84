"""Rate-distortion optimized mode and interpolation decisions.

The search is two-stage: candidates are first ranked by prediction SAD plus
a flat mode-bit estimate, then the surviving modes run through the full
trial pipeline (transform, quantization, fractional-bit rate estimate from
the arithmetic coder's context probabilities, reconstruction) and the
cheapest (mode, interpolation) pair wins. Context state is never mutated by
a trial, so encoder decisions are reproducible from decoder-visible state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coding import syntax
from .coding.bac import ContextSet
from .coding.transform import reconstruct_block, transform_quant
from .core import BlockRef, Plane, sse
from .intra import (DC, PLANAR, AngularPredictions, InterpKind,
                    ReferenceSamples, build_reference_samples, is_integer_slope,
                    nn_merge_target, predict)
from .selectors import SelectorConfig, category_of, select_by_sad

VARIANTS = ("bilinear-only", "nn-all-blocks", "nn-4x4-only", "sad", "pixdiff", "rdo")

_STAGE1_MODE_BITS = 6.0  # flat estimate; no most-probable-mode modeling


def lambda_from_qp(qp: int) -> float:
    """Lagrange multiplier 0.85 * 2^((qp - 12) / 3).

    At qp 0 the codec runs lossless and selection minimizes rate alone; the
    returned value is unused there.
    """
    if not 0 <= qp <= 51:
        raise ValueError(f"qp {qp} out of range [0, 51]")
    return 0.85 * 2.0 ** ((qp - 12) / 3.0)


def rd_cost(distortion: float, rate: float, lam: float) -> float:
    if distortion < 0 or rate < 0:
        raise ValueError("distortion and rate must be non-negative")
    return distortion + lam * rate


@dataclass(frozen=True)
class RdoConfig:
    """Search configuration: variant, lambda, and the fast-decision knobs."""

    variant: str = "rdo"
    lam: float = lambda_from_qp(27)
    candidate_list_size: int = 8
    restrict_4x4: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.candidate_list_size < 1:
            raise ValueError("candidate_list_size must be >= 1")


@dataclass(frozen=True)
class ModeDecision:
    """Per-block outcome of the search; drives signaling and the hit maps."""

    block: BlockRef
    mode: int
    interp: InterpKind
    flag_signaled: bool
    cost: float
    distortion: int
    rate: float


@dataclass
class CoderState:
    """Rate-estimation context for trials: adaptive contexts plus the regime."""

    ctxs: ContextSet
    lam: float
    qp: int
    lossless: bool
    bit_depth: int
    single_context: bool = False


@dataclass
class LeafPlan:
    """Everything the encoder needs to emit and commit the chosen candidate."""

    pred: np.ndarray
    levels: np.ndarray
    recon: np.ndarray
    used_nearest: np.ndarray


def size_allows_nn(size: int, cfg: RdoConfig) -> bool:
    return size == 4 or not cfg.restrict_4x4


def nn_candidate_allowed(mode: int, size: int, cfg: RdoConfig) -> bool:
    """Whether (mode, Nearest) is a distinct, searchable, signalable option."""
    if is_integer_slope(mode):
        return False
    if not size_allows_nn(size, cfg):
        return False
    if nn_merge_target(mode, size) is not None:
        return False
    return True


def enumerate_candidates(mode_list, block: BlockRef,
                         cfg: RdoConfig) -> list[tuple[int, InterpKind]]:
    """(mode, interpolation) pairs eligible for the RD search on this block.

    Every mode contributes its bilinear prediction; a nearest-neighbor twin
    is added only for oblique modes at eligible sizes, skipping the 4x4
    modes whose nearest predictor collapses onto horizontal/vertical.
    """
    out = []
    for mode in mode_list:
        out.append((mode, InterpKind.BILINEAR))
        if nn_candidate_allowed(mode, block.size, cfg):
            out.append((mode, InterpKind.NEAREST))
    return out


def derive_chroma_interp(luma_decision: ModeDecision,
                         chroma_mode_is_derived: bool) -> InterpKind:
    """Chroma inherits luma's interpolation with the derived mode, else bilinear."""
    if chroma_mode_is_derived:
        return luma_decision.interp
    return InterpKind.BILINEAR


# ---------------------------------------------------------------------------
# candidate assembly


@dataclass
class _Candidate:
    mode: int
    interp: InterpKind
    pred: np.ndarray
    used_nearest: np.ndarray
    flag_bin: int | None = None  # None: no flag in the stream
    sad: int = 0
    cost: float = 0.0
    levels: np.ndarray | None = None
    recon: np.ndarray | None = None
    distortion: int = 0
    rate: float = 0.0


def _angular_candidates(refs: ReferenceSamples, batch: AngularPredictions,
                        cfg: RdoConfig, scfg: SelectorConfig,
                        size: int) -> list[_Candidate]:
    """Angular (mode >= 2) candidates under the configured variant."""
    zeros = np.zeros((size, size), dtype=bool)
    out = []
    eligible_size = size_allows_nn(size, cfg)
    if cfg.variant == "pixdiff" and eligible_size:
        adapt, masks = batch.adaptive(scfg.scaled_pixdiff())
    for mode in range(2, 35):
        i = mode - 2
        bil = batch.bilinear[i]
        if cfg.variant == "rdo":
            out.append(_Candidate(mode, InterpKind.BILINEAR, bil, zeros,
                                  0 if nn_candidate_allowed(mode, size, cfg) else None))
            if nn_candidate_allowed(mode, size, cfg):
                mask = _mode_frac_mask(size, mode)
                out.append(_Candidate(mode, InterpKind.NEAREST, batch.nearest[i],
                                      mask, 1))
            continue
        if cfg.variant == "bilinear-only" or is_integer_slope(mode):
            out.append(_Candidate(mode, InterpKind.BILINEAR, bil, zeros))
            continue
        if cfg.variant == "nn-all-blocks":
            out.append(_Candidate(mode, InterpKind.NEAREST, batch.nearest[i],
                                  _mode_frac_mask(size, mode)))
            continue
        if cfg.variant == "nn-4x4-only":
            if size == 4:
                out.append(_Candidate(mode, InterpKind.NEAREST, batch.nearest[i],
                                      _mode_frac_mask(size, mode)))
            else:
                out.append(_Candidate(mode, InterpKind.BILINEAR, bil, zeros))
            continue
        if cfg.variant == "sad":
            if eligible_size and category_of(mode) is not None:
                kind = select_by_sad(refs, mode, scfg)
            else:
                kind = InterpKind.BILINEAR
            if kind == InterpKind.NEAREST:
                out.append(_Candidate(mode, kind, batch.nearest[i],
                                      _mode_frac_mask(size, mode)))
            else:
                out.append(_Candidate(mode, kind, bil, zeros))
            continue
        # pixdiff
        if eligible_size:
            out.append(_Candidate(
                mode,
                InterpKind.NEAREST if masks[i].any() else InterpKind.BILINEAR,
                adapt[i], masks[i]))
        else:
            out.append(_Candidate(mode, InterpKind.BILINEAR, bil, zeros))
    return out


def _mode_frac_mask(size: int, mode: int) -> np.ndarray:
    from .intra import _mode_tables
    return _mode_tables(size)[mode].fact > 0


def _all_candidates(refs: ReferenceSamples, cfg: RdoConfig, scfg: SelectorConfig,
                    size: int) -> list[_Candidate]:
    zeros = np.zeros((size, size), dtype=bool)
    batch = AngularPredictions(refs)
    cands = [
        _Candidate(PLANAR, InterpKind.BILINEAR, predict(refs, PLANAR, InterpKind.BILINEAR).samples, zeros),
        _Candidate(DC, InterpKind.BILINEAR, predict(refs, DC, InterpKind.BILINEAR).samples, zeros),
    ]
    cands.extend(_angular_candidates(refs, batch, cfg, scfg, size))
    return cands


# ---------------------------------------------------------------------------
# search


def _trial(cand: _Candidate, orig_blk: np.ndarray, state: CoderState,
           flag_ctx_index: int, luma: bool) -> None:
    residual = orig_blk.astype(np.int64) - cand.pred
    cand.levels = transform_quant(residual, state.qp, state.lossless)
    cand.recon = reconstruct_block(cand.pred, cand.levels, state.qp,
                                   state.lossless, state.bit_depth)
    cand.distortion = sse(orig_blk, cand.recon)
    bits = syntax.est_intra_mode_bits(state.ctxs, cand.mode)
    if cand.flag_bin is not None:
        bits += syntax.est_interp_flag_bits(state.ctxs, cand.flag_bin,
                                            flag_ctx_index, state.single_context)
    bits += syntax.est_residual_bits(state.ctxs, cand.levels, luma, state.lossless)
    cand.rate = bits
    cand.cost = bits if state.lossless else rd_cost(cand.distortion, bits, state.lam)


def search_leaf(block: BlockRef, orig: np.ndarray, recon: np.ndarray,
                coded: np.ndarray | None, cfg: RdoConfig, scfg: SelectorConfig,
                state: CoderState, flag_ctx_index: int = 0,
                luma: bool = True) -> tuple[ModeDecision, LeafPlan]:
    """Two-stage search over the block's eligible (mode, interpolation) pairs."""
    n = block.size
    x, y = block.x, block.y
    orig_blk = orig[y : y + n, x : x + n].astype(np.int64)
    refs = build_reference_samples(recon, block, state.bit_depth, coded)
    cands = _all_candidates(refs, cfg, scfg, n)

    # stage 1: SAD ranking, keep the best modes
    preds = np.stack([c.pred for c in cands])
    sads = np.abs(preds - orig_blk[None]).sum(axis=(1, 2))
    for c, s in zip(cands, sads):
        c.sad = int(s)
    best_by_mode: dict[int, float] = {}
    for c in cands:
        cost1 = c.sad + state.lam * _STAGE1_MODE_BITS
        if c.mode not in best_by_mode or cost1 < best_by_mode[c.mode]:
            best_by_mode[c.mode] = cost1
    ranked = sorted(best_by_mode, key=lambda m: (best_by_mode[m], m))
    keep = set(ranked[: cfg.candidate_list_size])
    finalists = [c for c in cands if c.mode in keep]

    # stage 2: full trial pipeline
    for c in finalists:
        _trial(c, orig_blk, state, flag_ctx_index, luma)
    winner = min(finalists, key=lambda c: (c.cost, c.mode, int(c.interp)))

    decision = ModeDecision(
        block=block, mode=winner.mode, interp=winner.interp,
        flag_signaled=winner.flag_bin is not None, cost=winner.cost,
        distortion=winner.distortion, rate=winner.rate)
    plan = LeafPlan(pred=winner.pred, levels=winner.levels, recon=winner.recon,
                    used_nearest=winner.used_nearest)
    return decision, plan


def choose(block: BlockRef, orig, recon, cfg: RdoConfig, coder_state: CoderState,
           *, selector_cfg: SelectorConfig | None = None,
           coded: np.ndarray | None = None, flag_ctx_index: int = 0) -> ModeDecision:
    """Pick the cheapest (mode, interpolation) pair for one block.

    ``orig`` and ``recon`` are Planes or bare sample arrays; ``coded``
    optionally narrows reference availability to the quadtree coding order.
    """
    if isinstance(orig, Plane):
        orig = orig.samples
    if isinstance(recon, Plane):
        recon = recon.samples
    if selector_cfg is None:
        selector_cfg = SelectorConfig(bit_depth=coder_state.bit_depth)
    decision, _ = search_leaf(block, orig, recon, coded, cfg, selector_cfg,
                              coder_state, flag_ctx_index)
    return decision


# ---------------------------------------------------------------------------
# chroma


@dataclass
class ChromaPlan:
    mode_index: int            # 0..3 fixed candidates, 4 = derived
    mode: int
    preds: list[np.ndarray] = field(default_factory=list)
    levels: list[np.ndarray] = field(default_factory=list)
    recons: list[np.ndarray] = field(default_factory=list)
    distortion: int = 0
    rate: float = 0.0
    cost: float = 0.0


def _chroma_pred(refs: ReferenceSamples, mode: int, variant: str,
                 luma_interp: InterpKind, derived: bool, cfg: RdoConfig,
                 scfg: SelectorConfig):
    """Chroma prediction under the variant's interpolation policy."""
    size = refs.size
    if is_integer_slope(mode) or variant == "bilinear-only":
        return predict(refs, mode, InterpKind.BILINEAR)
    if variant == "rdo":
        kind = luma_interp if derived else InterpKind.BILINEAR
        return predict(refs, mode, kind)
    if variant == "nn-all-blocks":
        return predict(refs, mode, InterpKind.NEAREST)
    if variant == "nn-4x4-only":
        kind = InterpKind.NEAREST if size == 4 else InterpKind.BILINEAR
        return predict(refs, mode, kind)
    if variant == "sad":
        if size_allows_nn(size, cfg) and category_of(mode) is not None:
            return predict(refs, mode, select_by_sad(refs, mode, scfg))
        return predict(refs, mode, InterpKind.BILINEAR)
    # pixdiff
    if size_allows_nn(size, cfg):
        from .intra import predict_adaptive
        return predict_adaptive(refs, mode, scfg.scaled_pixdiff())
    return predict(refs, mode, InterpKind.BILINEAR)


def search_chroma(block: BlockRef, origs: list[np.ndarray],
                  recons: list[np.ndarray], coded: np.ndarray | None,
                  luma_decision: ModeDecision, cfg: RdoConfig,
                  scfg: SelectorConfig, state: CoderState) -> ChromaPlan:
    """Joint Cb/Cr mode decision over the five chroma candidates."""
    n = block.size
    x, y = block.x, block.y
    refs = [build_reference_samples(r, block, state.bit_depth, coded) for r in recons]
    orig_blks = [o[y : y + n, x : x + n].astype(np.int64) for o in origs]
    modes = syntax.chroma_candidates(luma_decision.mode) + [luma_decision.mode]

    best = None
    for index, mode in enumerate(modes):
        derived = index == 4
        plan = ChromaPlan(mode_index=index, mode=mode)
        bits = syntax.est_chroma_mode_bits(state.ctxs, index)
        for refs_p, orig_blk in zip(refs, orig_blks):
            pred = _chroma_pred(refs_p, mode, cfg.variant,
                                luma_decision.interp, derived, cfg, scfg)
            levels = transform_quant(orig_blk - pred.samples, state.qp, state.lossless)
            rec = reconstruct_block(pred.samples, levels, state.qp,
                                    state.lossless, state.bit_depth)
            plan.preds.append(pred.samples)
            plan.levels.append(levels)
            plan.recons.append(rec)
            plan.distortion += sse(orig_blk, rec)
            bits += syntax.est_residual_bits(state.ctxs, levels, False, state.lossless)
        plan.rate = bits
        plan.cost = bits if state.lossless else rd_cost(plan.distortion, bits, state.lam)
        if best is None or (plan.cost, plan.mode_index) < (best.cost, best.mode_index):
            best = plan
    return best
