"""Numba kernels for packed GF(2) elimination and belief propagation.

Bit vectors are packed LSB-first into uint64 words: column ``c`` of a row
lives in word ``c >> 6``, bit ``c & 63``.  All kernels are cache-compiled;
the first call in a fresh environment pays the JIT cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit


def pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, nwords) uint64."""
    rows, cols = dense.shape
    nwords = (cols + 63) // 64 if cols else 1
    packed = np.zeros((rows, nwords), dtype=np.uint64)
    cols_idx = np.nonzero(dense)
    for r, c in zip(*cols_idx):
        packed[r, c >> 6] |= np.uint64(1) << np.uint64(c & 63)
    return packed


def unpack_row(row: np.ndarray, cols: int) -> np.ndarray:
    out = np.zeros(cols, dtype=np.uint8)
    for c in range(cols):
        if (row[c >> 6] >> np.uint64(c & 63)) & np.uint64(1):
            out[c] = 1
    return out


@njit(cache=True)
def _get_bit(row, c):
    return (row[c >> 6] >> np.uint64(c & 63)) & np.uint64(1)


@njit(cache=True)
def _set_bit(row, c):
    row[c >> 6] |= np.uint64(1) << np.uint64(c & 63)


@njit(cache=True)
def gauss_jordan(mat, ncols):
    """In-place Gauss-Jordan over GF(2) on packed rows.

    Scans columns left to right; returns the pivot column of each pivot
    row (rows are swapped so pivot rows come first, in order).
    """
    nrows = mat.shape[0]
    pivots = np.empty(min(nrows, ncols), dtype=np.int64)
    npiv = 0
    for col in range(ncols):
        if npiv >= nrows:
            break
        pivot = -1
        for r in range(npiv, nrows):
            if _get_bit(mat[r], col):
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != npiv:
            for w in range(mat.shape[1]):
                tmp = mat[npiv, w]
                mat[npiv, w] = mat[pivot, w]
                mat[pivot, w] = tmp
        for r in range(nrows):
            if r != npiv and _get_bit(mat[r], col):
                mat[r] ^= mat[npiv]
        pivots[npiv] = col
        npiv += 1
    return pivots[:npiv]


@njit(cache=True)
def rank_packed(mat, ncols):
    """GF(2) rank; destroys ``mat``."""
    return gauss_jordan(mat, ncols).shape[0]


@njit(cache=True)
def gauss_jordan_ordered(mat, col_order):
    """Gauss-Jordan visiting columns in ``col_order``.

    Returns positions into ``col_order`` of the pivot columns, one per
    pivot row (rows swapped so pivot rows come first).
    """
    nrows = mat.shape[0]
    pivots = np.empty(min(nrows, col_order.shape[0]), dtype=np.int64)
    npiv = 0
    for oi in range(col_order.shape[0]):
        if npiv >= nrows:
            break
        col = col_order[oi]
        pivot = -1
        for r in range(npiv, nrows):
            if _get_bit(mat[r], col):
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != npiv:
            for w in range(mat.shape[1]):
                tmp = mat[npiv, w]
                mat[npiv, w] = mat[pivot, w]
                mat[pivot, w] = tmp
        for r in range(nrows):
            if r != npiv and _get_bit(mat[r], col):
                mat[r] ^= mat[npiv]
        pivots[npiv] = oi
        npiv += 1
    return pivots[:npiv]


# ---------------------------------------------------------------------------
# Belief propagation on a check-major CSR factor graph.
#
# Edge e runs over the nonzeros of H in check-major order.  var_edges maps
# each variable's incident edges (positions into the edge arrays).

BP_SUM_PRODUCT = 0
BP_MIN_SUM = 1
SCHED_PARALLEL = 0
SCHED_SERIAL = 1

_LLR_CLAMP = 30.0


@njit(cache=True)
def bp_run(check_ptr, edge_var, var_ptr, var_edge, syndrome, prior_llr,
           max_iters, variant, schedule, ms_scale, llr_out, hard_out):
    """Run BP; returns (converged, iterations used).

    llr_out receives the final posterior LLR per variable; hard_out the
    hard decision.  Convergence means H @ hard == syndrome.
    """
    n_checks = check_ptr.shape[0] - 1
    n_vars = var_ptr.shape[0] - 1
    n_edges = edge_var.shape[0]

    c2v = np.zeros(n_edges, dtype=np.float64)
    v2c = np.empty(n_edges, dtype=np.float64)
    for v in range(n_vars):
        for k in range(var_ptr[v], var_ptr[v + 1]):
            v2c[var_edge[k]] = prior_llr[v]

    for v in range(n_vars):
        llr_out[v] = prior_llr[v]
        hard_out[v] = 1 if prior_llr[v] < 0.0 else 0
    if _syndrome_ok(check_ptr, edge_var, syndrome, hard_out):
        return True, 0

    for it in range(1, max_iters + 1):
        if schedule == SCHED_PARALLEL:
            # check update
            for c in range(n_checks):
                lo, hi = check_ptr[c], check_ptr[c + 1]
                if variant == BP_MIN_SUM:
                    sgn = 1.0 if syndrome[c] == 0 else -1.0
                    min1 = 1.0e300
                    min2 = 1.0e300
                    argmin = -1
                    for k in range(lo, hi):
                        m = v2c[k]
                        if m < 0.0:
                            sgn = -sgn
                            m = -m
                        if m < min1:
                            min2 = min1
                            min1 = m
                            argmin = k
                        elif m < min2:
                            min2 = m
                    for k in range(lo, hi):
                        m = v2c[k]
                        s = sgn if m >= 0.0 else -sgn
                        mag = min2 if k == argmin else min1
                        if mag > _LLR_CLAMP:
                            mag = _LLR_CLAMP
                        c2v[k] = ms_scale * s * mag
                else:
                    sgn = 1.0 if syndrome[c] == 0 else -1.0
                    for k in range(lo, hi):
                        if v2c[k] < 0.0:
                            sgn = -sgn
                    # product of tanh magnitudes, excluding self by division
                    prod = 1.0
                    for k in range(lo, hi):
                        t = np.tanh(min(abs(v2c[k]), _LLR_CLAMP) / 2.0)
                        if t < 1e-12:
                            t = 1e-12
                        prod *= t
                    for k in range(lo, hi):
                        t = np.tanh(min(abs(v2c[k]), _LLR_CLAMP) / 2.0)
                        if t < 1e-12:
                            t = 1e-12
                        excl = prod / t
                        if excl > 0.9999999999999:
                            excl = 0.9999999999999
                        s = sgn if v2c[k] >= 0.0 else -sgn
                        c2v[k] = s * 2.0 * np.arctanh(excl)
            # variable update
            for v in range(n_vars):
                tot = prior_llr[v]
                for k in range(var_ptr[v], var_ptr[v + 1]):
                    tot += c2v[var_edge[k]]
                llr_out[v] = tot
                for k in range(var_ptr[v], var_ptr[v + 1]):
                    v2c[var_edge[k]] = tot - c2v[var_edge[k]]
        else:
            # serial (check-sequential) schedule on running totals
            for v in range(n_vars):
                tot = prior_llr[v]
                for k in range(var_ptr[v], var_ptr[v + 1]):
                    tot += c2v[var_edge[k]]
                llr_out[v] = tot
            for c in range(n_checks):
                lo, hi = check_ptr[c], check_ptr[c + 1]
                for k in range(lo, hi):
                    v2c[k] = llr_out[edge_var[k]] - c2v[k]
                if variant == BP_MIN_SUM:
                    sgn = 1.0 if syndrome[c] == 0 else -1.0
                    min1 = 1.0e300
                    min2 = 1.0e300
                    argmin = -1
                    for k in range(lo, hi):
                        m = v2c[k]
                        if m < 0.0:
                            sgn = -sgn
                            m = -m
                        if m < min1:
                            min2 = min1
                            min1 = m
                            argmin = k
                        elif m < min2:
                            min2 = m
                    for k in range(lo, hi):
                        s = sgn if v2c[k] >= 0.0 else -sgn
                        mag = min2 if k == argmin else min1
                        if mag > _LLR_CLAMP:
                            mag = _LLR_CLAMP
                        new = ms_scale * s * mag
                        llr_out[edge_var[k]] += new - c2v[k]
                        c2v[k] = new
                else:
                    sgn = 1.0 if syndrome[c] == 0 else -1.0
                    for k in range(lo, hi):
                        if v2c[k] < 0.0:
                            sgn = -sgn
                    prod = 1.0
                    for k in range(lo, hi):
                        t = np.tanh(min(abs(v2c[k]), _LLR_CLAMP) / 2.0)
                        if t < 1e-12:
                            t = 1e-12
                        prod *= t
                    for k in range(lo, hi):
                        t = np.tanh(min(abs(v2c[k]), _LLR_CLAMP) / 2.0)
                        if t < 1e-12:
                            t = 1e-12
                        excl = prod / t
                        if excl > 0.9999999999999:
                            excl = 0.9999999999999
                        s = sgn if v2c[k] >= 0.0 else -sgn
                        new = s * 2.0 * np.arctanh(excl)
                        llr_out[edge_var[k]] += new - c2v[k]
                        c2v[k] = new

        for v in range(n_vars):
            hard_out[v] = 1 if llr_out[v] < 0.0 else 0
        if _syndrome_ok(check_ptr, edge_var, syndrome, hard_out):
            return True, it
    return False, max_iters


@njit(cache=True)
def _syndrome_ok(check_ptr, edge_var, syndrome, hard):
    for c in range(check_ptr.shape[0] - 1):
        par = 0
        for k in range(check_ptr[c], check_ptr[c + 1]):
            par ^= hard[edge_var[k]]
        if par != syndrome[c]:
            return False
    return True
