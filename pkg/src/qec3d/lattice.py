"""Cubic-lattice embedding of a product code and geometric locality checks.

Every basis element of the chain complex maps to a point with coordinates
(z, y, x), 1-based:

* Z-stabilisers (i, j, k) -> integer points (i, j, k);
* qubits -> points with exactly one half-integer entry: transverse
  (a, j, k) -> (a+0.5, j, k), vertical (i, b, k) -> (i, b+0.5, k),
  horizontal (i, j, c) -> (i, j, c+0.5);
* X-stabilisers -> two half-integer entries: transverse-vertical
  (a, b, k) -> (a+0.5, b+0.5, k), transverse-horizontal
  (a, j, c) -> (a+0.5, j, c+0.5), vertical-horizontal
  (i, b, c) -> (i, b+0.5, c+0.5);
* metachecks (a, b, c) -> (a+0.5, b+0.5, c+0.5).

The z/y/x axes correspond to the A/B/C seed factors.  Internally
coordinates are doubled so everything is an integer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Optional

from qec3d import gf2
from qec3d.product_code import ProductCode

QUBIT_TYPES = ("transverse", "vertical", "horizontal")
XSTAB_TYPES = ("transverse-vertical", "transverse-horizontal",
               "vertical-horizontal")

LocalityType = Literal["torus", "euclidean"]


@dataclass(frozen=True)
class LatticeCoords:
    """Coordinates (z, y, x) for every object class, by index."""

    qubits: tuple[tuple[float, float, float], ...]
    qubit_types: tuple[str, ...]
    xstabs: tuple[tuple[float, float, float], ...]
    xstab_types: tuple[str, ...]
    zstabs: tuple[tuple[float, float, float], ...]
    metachecks: tuple[tuple[float, float, float], ...]
    #: axis extents nu = max(rows, cols) of the A, B, C seeds (z, y, x)
    axis_nu: tuple[int, int, int]

    def qubit_index(self, coord: tuple[float, float, float]) -> int:
        return self.qubits.index(coord)


def _shape(seed):
    return seed.matrix.rows, seed.matrix.cols


def embed(code: ProductCode) -> LatticeCoords:
    """Assign lattice coordinates to all objects of the code."""
    (ma, na), (mb, nb), (mc, nc) = (_shape(s) for s in code.seeds)

    qubits: list[tuple[float, float, float]] = []
    qtypes: list[str] = []
    for a in range(1, ma + 1):
        for j in range(1, nb + 1):
            for k in range(1, nc + 1):
                qubits.append((a + 0.5, float(j), float(k)))
                qtypes.append("transverse")
    for i in range(1, na + 1):
        for b in range(1, mb + 1):
            for k in range(1, nc + 1):
                qubits.append((float(i), b + 0.5, float(k)))
                qtypes.append("vertical")
    for i in range(1, na + 1):
        for j in range(1, nb + 1):
            for c in range(1, mc + 1):
                qubits.append((float(i), float(j), c + 0.5))
                qtypes.append("horizontal")

    xstabs: list[tuple[float, float, float]] = []
    xtypes: list[str] = []
    for a in range(1, ma + 1):
        for b in range(1, mb + 1):
            for k in range(1, nc + 1):
                xstabs.append((a + 0.5, b + 0.5, float(k)))
                xtypes.append("transverse-vertical")
    for a in range(1, ma + 1):
        for j in range(1, nb + 1):
            for c in range(1, mc + 1):
                xstabs.append((a + 0.5, float(j), c + 0.5))
                xtypes.append("transverse-horizontal")
    for i in range(1, na + 1):
        for b in range(1, mb + 1):
            for c in range(1, mc + 1):
                xstabs.append((float(i), b + 0.5, c + 0.5))
                xtypes.append("vertical-horizontal")

    zstabs = [(float(i), float(j), float(k))
              for i in range(1, na + 1)
              for j in range(1, nb + 1)
              for k in range(1, nc + 1)]
    metas = [(a + 0.5, b + 0.5, c + 0.5)
             for a in range(1, ma + 1)
             for b in range(1, mb + 1)
             for c in range(1, mc + 1)]

    if len(qubits) != code.n:
        raise RuntimeError("qubit coordinate count disagrees with code size")
    return LatticeCoords(
        qubits=tuple(qubits), qubit_types=tuple(qtypes),
        xstabs=tuple(xstabs), xstab_types=tuple(xtypes),
        zstabs=tuple(zstabs), metachecks=tuple(metas),
        axis_nu=(max(ma, na), max(mb, nb), max(mc, nc)))


# ---------------------------------------------------------------------------
# locality


def seed_locality_rho(m: gf2.SparseBitMatrix,
                      kind: LocalityType) -> Optional[int]:
    """Smallest rho for which the seed matrix is geometrically rho-local
    (every row's support within rho consecutive columns containing the row
    index, and vice versa), or None if only the trivial bound applies.

    "torus" allows the consecutive window to wrap modulo nu=max(rows,cols).
    """
    nu = max(m.rows, m.cols)

    def window(indices: list[int], anchor: int) -> Optional[int]:
        # smallest number of consecutive integers (mod nu for torus)
        # covering indices plus the anchor
        pts = sorted(set(indices + [anchor]))
        if kind == "euclidean":
            return pts[-1] - pts[0] + 1
        gaps = [(pts[(i + 1) % len(pts)] - pts[i]) % nu or nu
                for i in range(len(pts))]
        return nu - max(gaps) + 1 if len(pts) > 1 else 1

    worst = 1
    for r, sup in enumerate(m.row_supports):
        w = window([c + 1 for c in sup], r + 1)
        worst = max(worst, w)
    for c, sup in enumerate(m.column_supports()):
        w = window([r + 1 for r in sup], c + 1)
        worst = max(worst, w)
    return worst if worst <= nu else None


def detect_locality_type(m: gf2.SparseBitMatrix) -> LocalityType:
    """Pick the semantics giving the smaller locality radius (ties go to
    euclidean, which is the stricter notion)."""
    r_eu = seed_locality_rho(m, "euclidean") or 10 ** 9
    r_to = seed_locality_rho(m, "torus") or 10 ** 9
    return "euclidean" if r_eu <= r_to else "torus"


def _axis_extent(doubled: list[int], nu: int, kind: LocalityType) -> float:
    """Spatial spread of a set of doubled coordinates along one axis."""
    pts = sorted(set(doubled))
    if len(pts) <= 1:
        return 0.0
    if kind == "euclidean":
        return (pts[-1] - pts[0]) / 2.0
    period = 2 * nu
    gaps = [(pts[(i + 1) % len(pts)] - pts[i]) % period or period
            for i in range(len(pts))]
    return (period - max(gaps)) / 2.0


def check_locality(code: ProductCode, coords: LatticeCoords, rho: int,
                   locality_types: Optional[tuple[LocalityType, LocalityType,
                                                  LocalityType]] = None
                   ) -> bool:
    """True iff every X-stabiliser fits a rho x rho 2D box with weight
    <= 2*rho and every Z-stabiliser a rho x rho x rho box with weight
    <= 3*rho.  Box semantics per axis follow the seed locality type
    (auto-detected unless given)."""
    if rho < 1:
        raise ValueError("rho must be >= 1")
    if locality_types is None:
        locality_types = tuple(detect_locality_type(s.matrix)
                               for s in code.seeds)

    def fits(support_coords, weight_cap) -> bool:
        if len(support_coords) > weight_cap:
            return False
        for axis in range(3):
            doubled = [int(round(2 * p[axis])) for p in support_coords]
            if _axis_extent(doubled, coords.axis_nu[axis],
                            locality_types[axis]) >= rho:
                return False
        return True

    for sup in code.hx.row_supports:
        if not fits([coords.qubits[q] for q in sup], 2 * rho):
            return False
    for sup in code.hz.row_supports:
        if not fits([coords.qubits[q] for q in sup], 3 * rho):
            return False
    return True


# ---------------------------------------------------------------------------
# export


def lattice_to_json_dict(code: ProductCode, coords: LatticeCoords) -> dict:
    def xyz(p):
        # emitted in (x, y, z) order for plotting conventions
        return [p[2], p[1], p[0]]

    return {
        "schema_version": gf2.SCHEMA_VERSION,
        "qubits": [{"index": i, "type": coords.qubit_types[i],
                    "xyz": xyz(p)} for i, p in enumerate(coords.qubits)],
        "xstabs": [{"index": i, "type": coords.xstab_types[i],
                    "xyz": xyz(p)} for i, p in enumerate(coords.xstabs)],
        "zstabs": [{"index": i, "type": "vertex", "xyz": xyz(p)}
                   for i, p in enumerate(coords.zstabs)],
        "metachecks": [{"index": i, "type": "cell", "xyz": xyz(p)}
                       for i, p in enumerate(coords.metachecks)],
    }


def save_lattice(code: ProductCode, coords: LatticeCoords, path) -> None:
    with open(path, "w") as fh:
        json.dump(lattice_to_json_dict(code, coords), fh)
