"""Sparse linear algebra over GF(2).

Matrices are immutable and carry set-of-indices semantics: a
:class:`SparseBitMatrix` is defined by its shape and the sorted column
supports of its rows.  Internally, elimination runs on bit-packed uint64
rows (see :mod:`qec3d._kernels`).  Bit vectors are plain numpy uint8
arrays of 0/1 entries.

Tensor-product index ordering is row-major: in ``kron(A, B)`` the index of
the pair (i, j) is ``i * B.rows + j`` (leftmost factor slowest-varying).
"""

from __future__ import annotations

import json
from typing import Iterable, Optional, Sequence

import numpy as np

from qec3d import _kernels

SCHEMA_VERSION = 1


class DimensionError(ValueError):
    """Shapes of the operands do not match."""


def as_bitvector(v, length: Optional[int] = None) -> np.ndarray:
    out = np.asarray(v, dtype=np.uint8) % 2
    if out.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {out.shape}")
    if length is not None and out.shape[0] != length:
        raise DimensionError(f"expected length {length}, got {out.shape[0]}")
    return out


class SparseBitMatrix:
    """Immutable sparse GF(2) matrix, row- and column-indexable."""

    __slots__ = ("rows", "cols", "row_supports", "_packed", "_csr", "_hash")

    def __init__(self, rows: int, cols: int,
                 row_supports: Sequence[Iterable[int]]):
        if rows < 0 or cols < 0:
            raise DimensionError("negative dimensions")
        if len(row_supports) != rows:
            raise DimensionError("row_supports length != rows")
        sup = []
        for r, cs in enumerate(row_supports):
            cs = tuple(sorted(set(int(c) for c in cs)))
            if cs and (cs[0] < 0 or cs[-1] >= cols):
                raise DimensionError(f"row {r}: column index out of range")
            sup.append(cs)
        self.rows = rows
        self.cols = cols
        self.row_supports = tuple(sup)
        self._packed = None
        self._csr = None
        self._hash = None

    # -- constructors -------------------------------------------------

    @classmethod
    def from_dense(cls, dense) -> "SparseBitMatrix":
        dense = np.atleast_2d(np.asarray(dense, dtype=np.uint8) % 2)
        return cls(dense.shape[0], dense.shape[1],
                   [np.nonzero(row)[0] for row in dense])

    @classmethod
    def identity(cls, n: int) -> "SparseBitMatrix":
        return cls(n, n, [(i,) for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseBitMatrix":
        return cls(rows, cols, [()] * rows)

    # -- views --------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for r, cs in enumerate(self.row_supports):
            out[r, list(cs)] = 1
        return out

    def packed(self) -> np.ndarray:
        """Bit-packed uint64 copy of the rows (cached master, do not mutate)."""
        if self._packed is None:
            nwords = max(1, (self.cols + 63) // 64)
            packed = np.zeros((self.rows, nwords), dtype=np.uint64)
            one = np.uint64(1)
            for r, cs in enumerate(self.row_supports):
                for c in cs:
                    packed[r, c >> 6] |= one << np.uint64(c & 63)
            self._packed = packed
        return self._packed

    def csr(self):
        """(indptr, indices) arrays over the row supports."""
        if self._csr is None:
            indptr = np.zeros(self.rows + 1, dtype=np.int64)
            for r, cs in enumerate(self.row_supports):
                indptr[r + 1] = indptr[r] + len(cs)
            indices = np.fromiter(
                (c for cs in self.row_supports for c in cs),
                dtype=np.int64, count=indptr[-1])
            self._csr = (indptr, indices)
        return self._csr

    def column_supports(self) -> list[tuple[int, ...]]:
        cols: list[list[int]] = [[] for _ in range(self.cols)]
        for r, cs in enumerate(self.row_supports):
            for c in cs:
                cols[c].append(r)
        return [tuple(c) for c in cols]

    def max_row_weight(self) -> int:
        return max((len(cs) for cs in self.row_supports), default=0)

    def max_col_weight(self) -> int:
        w = np.zeros(self.cols, dtype=np.int64)
        for cs in self.row_supports:
            for c in cs:
                w[c] += 1
        return int(w.max()) if self.cols else 0

    # -- dunder -------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (isinstance(other, SparseBitMatrix)
                and self.rows == other.rows and self.cols == other.cols
                and self.row_supports == other.row_supports)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, self.row_supports))
        return self._hash

    def __repr__(self) -> str:
        nnz = sum(len(cs) for cs in self.row_supports)
        return f"SparseBitMatrix({self.rows}x{self.cols}, nnz={nnz})"

    # -- serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols,
                "row_supports": [list(cs) for cs in self.row_supports]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "SparseBitMatrix":
        return cls(d["rows"], d["cols"], d["row_supports"])

    def to_alist(self) -> str:
        """MacKay alist text (1-based indices, column-major header)."""
        colsup = self.column_supports()
        lines = [f"{self.cols} {self.rows}"]
        max_c = max((len(c) for c in colsup), default=0)
        max_r = self.max_row_weight()
        lines.append(f"{max_c} {max_r}")
        lines.append(" ".join(str(len(c)) for c in colsup))
        lines.append(" ".join(str(len(r)) for r in self.row_supports))
        for c in colsup:
            lines.append(" ".join(str(r + 1) for r in c))
        for r in self.row_supports:
            lines.append(" ".join(str(c + 1) for c in r))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_alist(cls, text: str) -> "SparseBitMatrix":
        toks = text.split("\n")
        toks = [t for t in toks if t.strip() != ""]
        ncols, nrows = (int(x) for x in toks[0].split())
        col_degs = [int(x) for x in toks[2].split()]
        row_degs = [int(x) for x in toks[3].split()]
        if len(col_degs) != ncols or len(row_degs) != nrows:
            raise ValueError("alist degree lists do not match dimensions")
        row_lines = toks[4 + ncols: 4 + ncols + nrows]
        supports = []
        for deg, line in zip(row_degs, row_lines):
            idx = [int(x) - 1 for x in line.split() if int(x) != 0]
            if len(idx) != deg:
                raise ValueError("alist row entry count mismatch")
            supports.append(idx)
        return cls(nrows, ncols, supports)


# ---------------------------------------------------------------------------
# operations


def mat_vec(m: SparseBitMatrix, v) -> np.ndarray:
    v = as_bitvector(v, m.cols)
    indptr, indices = m.csr()
    out = np.zeros(m.rows, dtype=np.uint8)
    if indices.shape[0]:
        row_ids = np.repeat(np.arange(m.rows), np.diff(indptr))
        sums = np.bincount(row_ids, weights=v[indices], minlength=m.rows)
        out = (sums.astype(np.int64) % 2).astype(np.uint8)
    return out


def transpose(m: SparseBitMatrix) -> SparseBitMatrix:
    return SparseBitMatrix(m.cols, m.rows, m.column_supports())


def rank(m: SparseBitMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    work = m.packed().copy()
    return int(_kernels.rank_packed(work, m.cols))


def _rref(m: SparseBitMatrix):
    """(reduced matrix rows packed, pivot columns)."""
    work = m.packed().copy()
    pivots = _kernels.gauss_jordan(work, m.cols)
    return work, np.asarray(pivots, dtype=np.int64)


def kernel_basis(m: SparseBitMatrix) -> list[np.ndarray]:
    """Deterministic basis of the right null space (free columns in index
    order, free variable set to 1, pivots solved)."""
    if m.cols == 0:
        return []
    if m.rows == 0:
        return [as_bitvector(np.eye(m.cols, dtype=np.uint8)[i])
                for i in range(m.cols)]
    work, pivots = _rref(m)
    pivset = set(int(p) for p in pivots)
    basis = []
    one = np.uint64(1)
    for free in range(m.cols):
        if free in pivset:
            continue
        vec = np.zeros(m.cols, dtype=np.uint8)
        vec[free] = 1
        for i, p in enumerate(pivots):
            if (work[i, free >> 6] >> np.uint64(free & 63)) & one:
                vec[p] = 1
        basis.append(vec)
    return basis


def solve(m: SparseBitMatrix, b) -> Optional[np.ndarray]:
    """Any solution of M x = b (free variables zero), or None."""
    b = as_bitvector(b, m.rows)
    if m.cols == 0:
        return np.zeros(0, dtype=np.uint8) if not b.any() else None
    nwords = max(1, (m.cols + 1 + 63) // 64)
    aug = np.zeros((m.rows, nwords), dtype=np.uint64)
    packed = m.packed()
    aug[:, :packed.shape[1]] = packed
    one = np.uint64(1)
    bc = m.cols
    for r in np.nonzero(b)[0]:
        aug[r, bc >> 6] |= one << np.uint64(bc & 63)
    pivots = _kernels.gauss_jordan(aug, m.cols)
    # inconsistent iff a nonzero row remains with only the augmented bit set
    npiv = len(pivots)
    for r in range(npiv, m.rows):
        if (aug[r, bc >> 6] >> np.uint64(bc & 63)) & one:
            return None
    x = np.zeros(m.cols, dtype=np.uint8)
    for i, p in enumerate(pivots):
        if (aug[i, bc >> 6] >> np.uint64(bc & 63)) & one:
            x[p] = 1
    return x


def in_image(m: SparseBitMatrix, b) -> bool:
    return solve(m, b) is not None


def kron(a: SparseBitMatrix, b: SparseBitMatrix) -> SparseBitMatrix:
    supports = []
    for ra in a.row_supports:
        for rb in b.row_supports:
            supports.append([ca * b.cols + cb for ca in ra for cb in rb])
    return SparseBitMatrix(a.rows * b.rows, a.cols * b.cols, supports)


def stack_rows(*ms: SparseBitMatrix) -> SparseBitMatrix:
    if not ms:
        raise DimensionError("nothing to stack")
    cols = ms[0].cols
    supports = []
    for m in ms:
        if m.cols != cols:
            raise DimensionError("column counts differ in stack_rows")
        supports.extend(m.row_supports)
    return SparseBitMatrix(sum(m.rows for m in ms), cols, supports)


def stack_cols(*ms: SparseBitMatrix) -> SparseBitMatrix:
    if not ms:
        raise DimensionError("nothing to stack")
    rows = ms[0].rows
    for m in ms:
        if m.rows != rows:
            raise DimensionError("row counts differ in stack_cols")
    supports = []
    offsets = np.cumsum([0] + [m.cols for m in ms])
    for r in range(rows):
        row = []
        for m, off in zip(ms, offsets):
            row.extend(c + int(off) for c in m.row_supports[r])
        supports.append(row)
    return SparseBitMatrix(rows, int(offsets[-1]), supports)


def block(grid: Sequence[Sequence[Optional[SparseBitMatrix]]],
          row_dims: Sequence[int], col_dims: Sequence[int]) -> SparseBitMatrix:
    """Assemble a block matrix; None entries are zero blocks."""
    rows = []
    for bi, brow in enumerate(grid):
        if len(brow) != len(col_dims):
            raise DimensionError("block grid is ragged")
        parts = []
        for bj, blk in enumerate(brow):
            if blk is None:
                blk = SparseBitMatrix.zeros(row_dims[bi], col_dims[bj])
            if blk.rows != row_dims[bi] or blk.cols != col_dims[bj]:
                raise DimensionError(
                    f"block ({bi},{bj}) has shape {blk.rows}x{blk.cols}, "
                    f"expected {row_dims[bi]}x{col_dims[bj]}")
            parts.append(blk)
        rows.append(stack_cols(*parts))
    return stack_rows(*rows)


def mat_mul(a: SparseBitMatrix, b: SparseBitMatrix) -> SparseBitMatrix:
    if a.cols != b.rows:
        raise DimensionError("inner dimensions differ in mat_mul")
    bd = b.to_dense()
    out = []
    for cs in a.row_supports:
        if cs:
            out.append(np.bitwise_xor.reduce(bd[list(cs)], axis=0))
        else:
            out.append(np.zeros(b.cols, dtype=np.uint8))
    return SparseBitMatrix.from_dense(np.array(out, dtype=np.uint8)
                                      if out else
                                      np.zeros((0, b.cols), dtype=np.uint8))


def is_zero(m: SparseBitMatrix) -> bool:
    return all(len(cs) == 0 for cs in m.row_supports)


def save_json(m: SparseBitMatrix, path) -> None:
    with open(path, "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, **m.to_json_dict()}, fh)


def load_json(path) -> SparseBitMatrix:
    with open(path) as fh:
        return SparseBitMatrix.from_json_dict(json.load(fh))
