"""Belief propagation with ordered-statistics post-processing.

``bp_decode`` runs min-sum or sum-product BP on the factor graph of a
parity-check matrix; ``osd_post`` turns the resulting soft reliabilities
into a syndrome-satisfying correction by solving on the most-likely-errored
information set (order 0), optionally sweeping low-weight flips of the
least reliable free bits (exhaustive order w).  ``bp_osd_decode`` chains
the two.  All tie-breaks are by ascending bit index, so outputs are
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from qec3d import _kernels, gf2
from qec3d.gf2 import SparseBitMatrix

LLR_CLAMP = 30.0


class UnsatisfiableSyndromeError(ValueError):
    """The target syndrome is not in the image of the check matrix."""


@dataclass(frozen=True)
class BpConfig:
    max_iters: int = 30
    variant: str = "min-sum"  # "min-sum" | "sum-product"
    schedule: str = "parallel"  # "parallel" | "serial"
    ms_scale: float = 0.625
    prior: float = 0.05  # channel error probability

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.variant not in ("min-sum", "sum-product"):
            raise ValueError(f"unknown BP variant {self.variant!r}")
        if self.schedule not in ("parallel", "serial"):
            raise ValueError(f"unknown BP schedule {self.schedule!r}")
        if not (0.0 < self.ms_scale <= 1.0):
            raise ValueError("ms_scale must lie in (0, 1]")
        if not (0.0 < self.prior < 1.0):
            raise ValueError("prior must lie in (0, 1)")


@dataclass(frozen=True)
class OsdConfig:
    order: int = 0  # 0 = OSD-0; w >= 1 = exhaustive weight-<=w sweep
    #: number of least-reliable free bits included in the exhaustive sweep
    sweep_bits: int = 10
    max_order: int = 6

    def __post_init__(self):
        if not (0 <= self.order <= self.max_order):
            raise ValueError(
                f"OSD order must lie in [0, {self.max_order}]")
        if self.sweep_bits < 1:
            raise ValueError("sweep_bits must be >= 1")


class _Graph:
    """Check-major CSR edge structure of a parity-check matrix."""

    def __init__(self, h: SparseBitMatrix):
        indptr, indices = h.csr()
        self.check_ptr = indptr.astype(np.int64)
        self.edge_var = indices.astype(np.int64)
        order = np.argsort(self.edge_var, kind="stable")
        counts = np.bincount(self.edge_var, minlength=h.cols)
        self.var_ptr = np.concatenate(
            ([0], np.cumsum(counts))).astype(np.int64)
        self.var_edge = order.astype(np.int64)


_graph_cache: dict[SparseBitMatrix, _Graph] = {}


def _graph_for(h: SparseBitMatrix) -> _Graph:
    g = _graph_cache.get(h)
    if g is None:
        g = _Graph(h)
        _graph_cache[h] = g
    return g


def bp_decode(h: SparseBitMatrix, s, cfg: BpConfig
              ) -> tuple[np.ndarray, np.ndarray, bool]:
    """Run BP; returns (soft LLRs, hard decision, converged)."""
    s = gf2.as_bitvector(s, h.rows)
    g = _graph_for(h)
    prior_llr = np.full(h.cols, math.log((1.0 - cfg.prior) / cfg.prior))
    llr = np.empty(h.cols, dtype=np.float64)
    hard = np.empty(h.cols, dtype=np.uint8)
    variant = (_kernels.BP_MIN_SUM if cfg.variant == "min-sum"
               else _kernels.BP_SUM_PRODUCT)
    schedule = (_kernels.SCHED_PARALLEL if cfg.schedule == "parallel"
                else _kernels.SCHED_SERIAL)
    converged, _ = _kernels.bp_run(
        g.check_ptr, g.edge_var, g.var_ptr, g.var_edge,
        s.astype(np.uint8), prior_llr, cfg.max_iters,
        variant, schedule, cfg.ms_scale, llr, hard)
    return llr, hard, bool(converged)


def _reliability_order(soft: np.ndarray) -> np.ndarray:
    """Column order for OSD: most-likely-errored first (ascending clamped
    LLR, ties by ascending index)."""
    clamped = np.clip(soft, -LLR_CLAMP, LLR_CLAMP)
    return np.argsort(clamped, kind="stable").astype(np.int64)


def osd_post(h: SparseBitMatrix, s, soft, cfg: OsdConfig) -> np.ndarray:
    """Ordered-statistics solve of H r = s guided by soft reliabilities."""
    s = gf2.as_bitvector(s, h.rows)
    soft = np.asarray(soft, dtype=np.float64)
    if soft.shape != (h.cols,):
        raise gf2.DimensionError("soft vector length != column count")
    col_order = _reliability_order(soft)

    # augmented packed matrix [H | s], eliminated in reliability order
    ncols = h.cols
    nwords = max(1, (ncols + 1 + 63) // 64)
    aug = np.zeros((h.rows, nwords), dtype=np.uint64)
    packed = h.packed()
    aug[:, :packed.shape[1]] = packed
    one = np.uint64(1)
    for r in np.nonzero(s)[0]:
        aug[r, ncols >> 6] |= one << np.uint64(ncols & 63)
    piv_pos = _kernels.gauss_jordan_ordered(aug, col_order)
    npiv = len(piv_pos)
    for r in range(npiv, h.rows):
        if (aug[r, ncols >> 6] >> np.uint64(ncols & 63)) & one:
            raise UnsatisfiableSyndromeError(
                "syndrome outside the image of the check matrix")
    pivot_cols = col_order[piv_pos]

    def bits_of_column(c: int) -> int:
        word, bit = c >> 6, np.uint64(c & 63)
        acc = 0
        for i in range(npiv):
            if (aug[i, word] >> bit) & one:
                acc |= 1 << i
        return acc

    base = bits_of_column(ncols)  # pivot values with all free bits zero

    def assemble(free_cols: tuple[int, ...], piv_bits: int) -> np.ndarray:
        x = np.zeros(ncols, dtype=np.uint8)
        for c in free_cols:
            x[c] = 1
        for i in range(npiv):
            if (piv_bits >> i) & 1:
                x[pivot_cols[i]] = 1
        return x

    if cfg.order == 0:
        return assemble((), base)

    # exhaustive sweep: flip low-weight patterns of the most-likely-errored
    # free columns (earliest in col_order among non-pivots)
    piv_set = set(int(c) for c in pivot_cols)
    free_order = [int(c) for c in col_order if int(c) not in piv_set]
    sweep = free_order[:cfg.sweep_bits]
    col_bits = {c: bits_of_column(c) for c in sweep}

    best_weight = base.bit_count()
    best = ((), base)
    for w in range(1, min(cfg.order, len(sweep)) + 1):
        for combo in combinations(sweep, w):
            piv_bits = base
            for c in combo:
                piv_bits ^= col_bits[c]
            weight = w + piv_bits.bit_count()
            if weight < best_weight:
                best_weight = weight
                best = (combo, piv_bits)
    return assemble(*best)


def bp_osd_decode(h: SparseBitMatrix, s, bp_cfg: BpConfig,
                  osd_cfg: OsdConfig) -> np.ndarray:
    """BP first; fall back to OSD on the soft output if BP fails to
    satisfy the syndrome."""
    s = gf2.as_bitvector(s, h.rows)
    soft, hard, converged = bp_decode(h, s, bp_cfg)
    if converged:
        return hard
    return osd_post(h, s, soft, osd_cfg)
