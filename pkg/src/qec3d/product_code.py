"""Three-fold product construction of CSS codes from classical seeds.

Three seed parity-check matrices dA, dB, dC define a length-3 chain
complex C0 -> C1 -> C2 -> C3 with boundary maps

    d0 = [dA x 1 x 1 ; 1 x dB x 1 ; 1 x 1 x dC]
    d1 = [[1 x dB x 1, dA x 1 x 1, 0        ],
          [1 x 1 x dC, 0,          dA x 1 x 1],
          [0,          1 x 1 x dC, 1 x dB x 1]]
    d2 = [1 x 1 x dC, 1 x dB x 1, dA x 1 x 1]

(x is the Kronecker product, leftmost factor slowest-varying).  The CSS
code is H_Z = d0^T, H_X = d1, with metacheck matrix M = d2 constraining
valid X-syndromes.  The three direct summands of C1 are the transverse,
vertical and horizontal qubit blocks, in that order; the summands of C2
are the transverse-vertical, transverse-horizontal and vertical-horizontal
stabiliser blocks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Union

import numpy as np

from qec3d import gf2
from qec3d.gf2 import SparseBitMatrix

INF = math.inf
Distance = Union[int, float, None]  # int, math.inf, or None for "unknown"

#: Codeword-enumeration cap for brute-force classical distances: skip if the
#: kernel dimension exceeds this (2^k codewords).
DISTANCE_ENUM_CAP = 22


class ConsistencyError(RuntimeError):
    """An internal cross-check failed, signalling a construction bug."""


def classical_distance(m: SparseBitMatrix,
                       enum_cap: int = DISTANCE_ENUM_CAP) -> Distance:
    """Minimum weight of a nonzero codeword of the code with check m.

    Returns inf when the code has dimension 0 and None ("unknown") when
    the kernel is too large to enumerate.
    """
    ker = gf2.kernel_basis(m)
    k = len(ker)
    if k == 0:
        return INF
    if k > enum_cap:
        return None
    packed = [int.from_bytes(np.packbits(v, bitorder="little").tobytes(),
                             "little") for v in ker]
    best = m.cols + 1
    # Gray-code sweep over all nonzero combinations.
    acc = 0
    prev = 0
    for i in range(1, 1 << k):
        gray = i ^ (i >> 1)
        acc ^= packed[(gray ^ prev).bit_length() - 1]
        prev = gray
        w = acc.bit_count()
        if w < best:
            best = w
    return best


@dataclass(frozen=True)
class ClassicalSeed:
    """A seed parity-check matrix with the parameters of its code and of
    the transpose code."""

    matrix: SparseBitMatrix
    n: int
    k: int
    d: Distance
    nt: int
    kt: int
    dt: Distance

    @classmethod
    def from_matrix(cls, m: SparseBitMatrix,
                    enum_cap: int = DISTANCE_ENUM_CAP) -> "ClassicalSeed":
        r = gf2.rank(m)
        return cls(matrix=m,
                   n=m.cols, k=m.cols - r,
                   d=classical_distance(m, enum_cap),
                   nt=m.rows, kt=m.rows - r,
                   dt=classical_distance(gf2.transpose(m), enum_cap))


@dataclass(frozen=True)
class ChainComplex3:
    """The four spaces and three boundary maps of the product complex."""

    delta0: SparseBitMatrix
    delta1: SparseBitMatrix
    delta2: SparseBitMatrix
    dims: tuple[int, int, int, int]
    #: per-block dimensions of C1 = transverse + vertical + horizontal
    c1_blocks: tuple[int, int, int]
    #: per-block dimensions of C2 = tv + th + vh
    c2_blocks: tuple[int, int, int]


@dataclass(frozen=True)
class ProductCode:
    """A CSS code with metachecks derived from a ChainComplex3."""

    complex: ChainComplex3
    seeds: tuple[ClassicalSeed, ClassicalSeed, ClassicalSeed]
    hx: SparseBitMatrix
    hz: SparseBitMatrix
    meta: SparseBitMatrix
    n: int
    k: int
    dx: Distance
    dz: Distance
    dss: Distance
    km: int
    lm: SparseBitMatrix
    fm: SparseBitMatrix
    notes: tuple[str, ...] = field(default=())

    @property
    def seed_params(self):
        return tuple((s.n, s.k, s.d, s.nt, s.kt, s.dt) for s in self.seeds)


# ---------------------------------------------------------------------------
# construction


def build_complex(a: ClassicalSeed, b: ClassicalSeed,
                  c: ClassicalSeed) -> ChainComplex3:
    """Assemble the boundary maps of the three-fold product complex."""
    da, db, dc = a.matrix, b.matrix, c.matrix
    ia0 = SparseBitMatrix.identity(da.cols)
    ia1 = SparseBitMatrix.identity(da.rows)
    ib0 = SparseBitMatrix.identity(db.cols)
    ib1 = SparseBitMatrix.identity(db.rows)
    ic0 = SparseBitMatrix.identity(dc.cols)
    ic1 = SparseBitMatrix.identity(dc.rows)

    def kron3(x, y, z):
        return gf2.kron(gf2.kron(x, y), z)

    c0 = da.cols * db.cols * dc.cols
    c1_blocks = (da.rows * db.cols * dc.cols,
                 da.cols * db.rows * dc.cols,
                 da.cols * db.cols * dc.rows)
    c2_blocks = (da.rows * db.rows * dc.cols,
                 da.rows * db.cols * dc.rows,
                 da.cols * db.rows * dc.rows)
    c3 = da.rows * db.rows * dc.rows

    delta0 = gf2.stack_rows(kron3(da, ib0, ic0),
                            kron3(ia0, db, ic0),
                            kron3(ia0, ib0, dc))
    delta1 = gf2.block(
        [[kron3(ia1, db, ic0), kron3(da, ib1, ic0), None],
         [kron3(ia1, ib0, dc), None, kron3(da, ib0, ic1)],
         [None, kron3(ia0, ib1, dc), kron3(ia0, db, ic1)]],
        row_dims=list(c2_blocks), col_dims=list(c1_blocks))
    delta2 = gf2.stack_cols(kron3(ia1, ib1, dc),
                            kron3(ia1, db, ic1),
                            kron3(da, ib1, ic1))

    cc = ChainComplex3(delta0, delta1, delta2,
                       dims=(c0, sum(c1_blocks), sum(c2_blocks), c3),
                       c1_blocks=c1_blocks, c2_blocks=c2_blocks)
    if not gf2.is_zero(gf2.mat_mul(delta1, delta0)):
        raise ConsistencyError("chain condition d1*d0 = 0 violated")
    if not gf2.is_zero(gf2.mat_mul(delta2, delta1)):
        raise ConsistencyError("chain condition d2*d1 = 0 violated")
    return cc


class _IncrementalBasis:
    """Grow a GF(2) row space one vector at a time (big-int bitsets)."""

    def __init__(self):
        self.rows: dict[int, int] = {}  # pivot bit -> reduced row

    def reduce(self, v: int) -> int:
        while v:
            p = v.bit_length() - 1
            row = self.rows.get(p)
            if row is None:
                return v
            v ^= row
        return 0

    def add(self, v: int) -> bool:
        """Insert v; True iff it increased the rank."""
        v = self.reduce(v)
        if v == 0:
            return False
        self.rows[v.bit_length() - 1] = v
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


def _vec_to_int(v: np.ndarray) -> int:
    return int.from_bytes(np.packbits(v, bitorder="little").tobytes(),
                          "little")


def _int_to_vec(x: int, length: int) -> np.ndarray:
    nbytes = (length + 7) // 8
    raw = np.frombuffer(x.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length].copy()


def homology_generators(cc: ChainComplex3
                        ) -> tuple[SparseBitMatrix, SparseBitMatrix]:
    """Generators (lm, fm) of the dual/primal second homology group.

    fm columns: kernel vectors of delta2 independent modulo the column
    space of delta1, picked greedily in kernel-basis index order.  lm
    rows: kernel vectors of delta1^T independent modulo the row space of
    delta2, same greedy rule.  The pairing lm @ fm has full rank km.
    """
    n2 = cc.dims[2]

    img = _IncrementalBasis()
    for col in gf2.transpose(cc.delta1).row_supports:
        x = 0
        for c in col:
            x |= 1 << c
        img.add(x)
    fm_cols = []
    for v in gf2.kernel_basis(cc.delta2):
        if img.add(_vec_to_int(v)):
            fm_cols.append(v)

    img2 = _IncrementalBasis()
    for sup in cc.delta2.row_supports:
        x = 0
        for c in sup:
            x |= 1 << c
        img2.add(x)
    lm_rows = []
    for v in gf2.kernel_basis(gf2.transpose(cc.delta1)):
        if img2.add(_vec_to_int(v)):
            lm_rows.append(v)

    fm = gf2.transpose(SparseBitMatrix(
        len(fm_cols), n2, [np.nonzero(v)[0] for v in fm_cols]))
    lm = SparseBitMatrix(
        len(lm_rows), n2, [np.nonzero(v)[0] for v in lm_rows])
    return lm, fm


def _dist_prod(x: Distance, y: Distance) -> Distance:
    if x is None or y is None:
        return None
    return x * y


def _dist_min(*vals: Distance) -> Distance:
    # an unknown operand could lie below every known one, so the min is
    # unknown too
    if any(v is None for v in vals):
        return None
    return min(vals)


def derive_code(cc: ChainComplex3,
                seeds: tuple[ClassicalSeed, ClassicalSeed, ClassicalSeed]
                ) -> ProductCode:
    """Derive the CSS code, metachecks, parameters and homology generators."""
    a, b, c = seeds
    hx = cc.delta1
    hz = gf2.transpose(cc.delta0)
    meta = cc.delta2

    n = cc.dims[1]
    n_formula = a.nt * b.n * c.n + a.n * b.nt * c.n + a.n * b.n * c.nt
    if n != n_formula:
        raise ConsistencyError("qubit count disagrees with the block formula")

    k_formula = a.kt * b.k * c.k + a.k * b.kt * c.k + a.k * b.k * c.kt
    k_rank = n - gf2.rank(hx) - gf2.rank(hz)
    notes = []
    if k_formula != k_rank:
        if k_formula == 0:
            # The closed-form k is only guaranteed for k != 0; trust the
            # rank computation and record the discrepancy.
            notes.append(f"k formula gave 0 but rank gives {k_rank}")
        else:
            raise ConsistencyError(
                f"k mismatch: formula {k_formula}, rank {k_rank}")
    k = k_rank

    dx = _dist_min(_dist_prod(b.d, c.d), _dist_prod(a.d, c.d),
                   _dist_prod(a.d, b.d))
    dz = _dist_min(a.dt, b.dt, c.dt)

    km = (cc.dims[2] - gf2.rank(meta)) - gf2.rank(hx)
    dss: Distance = _dist_min(a.d, b.d, c.d) if km > 0 else INF

    lm, fm = homology_generators(cc)
    if lm.rows != km or fm.cols != km:
        raise ConsistencyError("homology generator count disagrees with km")
    if not gf2.is_zero(gf2.mat_mul(meta, fm)):
        raise ConsistencyError("meta @ fm != 0")
    if not gf2.is_zero(gf2.mat_mul(lm, hx)):
        raise ConsistencyError("lm @ hx != 0")
    if gf2.rank(gf2.mat_mul(lm, fm)) != km:
        raise ConsistencyError("pairing lm @ fm is rank-deficient")

    return ProductCode(complex=cc, seeds=seeds, hx=hx, hz=hz, meta=meta,
                       n=n, k=k, dx=dx, dz=dz, dss=dss, km=km,
                       lm=lm, fm=fm, notes=tuple(notes))


def build_product_code(a: ClassicalSeed, b: ClassicalSeed,
                       c: ClassicalSeed) -> ProductCode:
    return derive_code(build_complex(a, b, c), (a, b, c))


def ldpc_degree_bounds(cc: ChainComplex3,
                       seeds: tuple[ClassicalSeed, ClassicalSeed,
                                    ClassicalSeed]) -> dict:
    """Measure row/column weights of the boundary maps and assert the
    sparsity bounds inherited from the seeds."""
    ca, cb, ccol = (s.matrix.max_col_weight() for s in seeds)
    ra, rb, rc = (s.matrix.max_row_weight() for s in seeds)
    measured = {
        "c0": cc.delta0.max_col_weight(), "r0": cc.delta0.max_row_weight(),
        "c1": cc.delta1.max_col_weight(), "r1": cc.delta1.max_row_weight(),
        "c2": cc.delta2.max_col_weight(), "r2": cc.delta2.max_row_weight(),
    }
    bounds = {
        "c0": ca + cb + ccol, "r0": max(ra, rb, rc),
        "c1": max(ca + cb, ca + ccol, cb + ccol),
        "r1": max(ra + rb, ra + rc, rb + rc),
        "c2": max(ca, cb, ccol), "r2": ra + rb + rc,
    }
    for key, got in measured.items():
        if got > bounds[key]:
            raise ConsistencyError(
                f"sparsity bound violated: {key} = {got} > {bounds[key]}")
    return {"measured": measured, "bounds": bounds, "ok": True}


# ---------------------------------------------------------------------------
# builtin seed families


def _repetition_circulant(L: int) -> SparseBitMatrix:
    """L x L circulant with rows {i, i+1 mod L} (checks of the cyclic
    repetition code)."""
    return SparseBitMatrix(L, L, [sorted({i, (i + 1) % L})
                                  for i in range(L)])


def _repetition_full_rank(L: int) -> SparseBitMatrix:
    """(L-1) x L full-rank repetition-code check with rows {i, i+1}."""
    return SparseBitMatrix(L - 1, L, [(i, i + 1) for i in range(L - 1)])


def toric_seeds(L: int) -> tuple[ClassicalSeed, ClassicalSeed, ClassicalSeed]:
    """Seeds producing the 3D toric code [[3L^3, 3, L^2, L]], d_ss = L."""
    if L < 2:
        raise ValueError("toric lattice size must be >= 2")
    s = ClassicalSeed.from_matrix(_repetition_circulant(L))
    return (s, s, s)


def surface_seeds(L: int) -> tuple[ClassicalSeed, ClassicalSeed,
                                   ClassicalSeed]:
    """Seeds producing the 3D surface code [[2L(L-1)^2 + L^3, 1, L^2, L]],
    d_ss = inf."""
    if L < 2:
        raise ValueError("surface lattice size must be >= 2")
    rep = _repetition_full_rank(L)
    s = ClassicalSeed.from_matrix(rep)
    st = ClassicalSeed.from_matrix(gf2.transpose(rep))
    return (s, s, st)


#: Frozen (3,4)-regular LDPC checks found by randomized search (full rank,
#: brute-forced distances 6 / 8 / 10).  Column degree 3, row degree 4.
_LDPC_SEEDS = {
    0: (16, [[1, 6, 11, 12], [4, 6, 8, 10], [0, 8, 12, 13], [5, 12, 14, 15],
             [3, 5, 7, 15], [3, 5, 9, 11], [0, 2, 8, 11], [1, 2, 4, 14],
             [2, 3, 6, 7], [4, 7, 9, 13], [9, 10, 13, 15], [0, 1, 10, 14]]),
    1: (20, [[1, 4, 5, 10], [2, 8, 11, 18], [2, 6, 10, 15], [4, 8, 14, 16],
             [1, 9, 14, 19], [5, 11, 13, 19], [1, 3, 15, 17], [3, 7, 16, 18],
             [6, 9, 12, 17], [7, 13, 15, 19], [0, 3, 12, 16], [0, 2, 14, 17],
             [8, 9, 13, 18], [6, 10, 11, 12], [0, 4, 5, 7]]),
    2: (24, [[2, 9, 19, 21], [0, 3, 15, 23], [0, 6, 8, 10], [10, 14, 20, 22],
             [1, 7, 11, 14], [15, 16, 17, 18], [3, 8, 12, 20], [2, 4, 12, 18],
             [4, 9, 15, 18], [5, 7, 10, 17], [5, 11, 13, 23], [1, 13, 14, 21],
             [5, 9, 12, 19], [2, 7, 16, 21], [6, 8, 16, 23], [0, 3, 20, 22],
             [1, 4, 17, 22], [6, 11, 13, 19]]),
}


def table_family_seeds(index: int) -> tuple[ClassicalSeed, ClassicalSeed,
                                            ClassicalSeed]:
    """Seeds of the non-topological LDPC family, rows 0..2: a (3,4)-LDPC
    check for A, a full-rank repetition check for B, its transpose for C.
    The products are [[1336,4,6]], [[3100,5,8]], [[5964,6,10]]."""
    if index not in _LDPC_SEEDS:
        raise ValueError("table row index must be 0, 1 or 2")
    n, supports = _LDPC_SEEDS[index]
    a = ClassicalSeed.from_matrix(SparseBitMatrix(len(supports), n, supports))
    L = (6, 8, 10)[index]
    rep = _repetition_full_rank(L)
    b = ClassicalSeed.from_matrix(rep)
    c = ClassicalSeed.from_matrix(gf2.transpose(rep))
    return (a, b, c)


# ---------------------------------------------------------------------------
# serialization


def _dist_to_json(d: Distance):
    if d is None:
        return "unknown"
    if d == INF:
        return "inf"
    return int(d)


def _dist_from_json(v) -> Distance:
    if v == "unknown":
        return None
    if v == "inf":
        return INF
    return int(v)


def code_to_json_dict(code: ProductCode) -> dict:
    return {
        "schema_version": gf2.SCHEMA_VERSION,
        "seeds": [s.matrix.to_json_dict() for s in code.seeds],
        "hx": code.hx.to_json_dict(),
        "hz": code.hz.to_json_dict(),
        "meta": code.meta.to_json_dict(),
        "lm": code.lm.to_json_dict(),
        "fm": code.fm.to_json_dict(),
        "params": {
            "n": code.n, "k": code.k,
            "dx": _dist_to_json(code.dx), "dz": _dist_to_json(code.dz),
            "dss": _dist_to_json(code.dss), "km": code.km,
        },
        "c1_blocks": list(code.complex.c1_blocks),
        "c2_blocks": list(code.complex.c2_blocks),
        "notes": list(code.notes),
    }


def save_code(code: ProductCode, path) -> None:
    with open(path, "w") as fh:
        json.dump(code_to_json_dict(code), fh)


def load_code(path) -> ProductCode:
    """Rebuild a ProductCode from its exported seed matrices (re-derives
    everything, then cross-checks the stored parameters)."""
    with open(path) as fh:
        d = json.load(fh)
    seeds = tuple(ClassicalSeed.from_matrix(
        SparseBitMatrix.from_json_dict(s)) for s in d["seeds"])
    code = build_product_code(*seeds)
    stored = d["params"]
    if code.n != stored["n"] or code.k != stored["k"]:
        raise ConsistencyError("stored parameters disagree with rebuild")
    return code
