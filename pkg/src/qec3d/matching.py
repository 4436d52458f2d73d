"""Syndrome repair by minimum-weight perfect matching on the metacheck
graph.

Each syndrome bit is an edge of the graph: a weight-2 column of the
metacheck matrix joins its two metachecks, a weight-1 column attaches its
metacheck to a virtual boundary, a weight-0 column is unprotected (it can
never flip a metacheck).  Metasyndrome defects are paired along shortest
paths (unit edge weights, BFS) by an exact blossom matching; the repair is
the XOR of the edge labels along the matched paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from qec3d import gf2
from qec3d.gf2 import SparseBitMatrix

_UNREACHABLE = -1

#: above this node count, solve_mwpm may use the nearest-neighbor sparse
#: blossom fallback when allow_approx is set (16 real defects after
#: boundary doubling); below it the matching is always exact
EXACT_NODE_LIMIT = 32


class MatchingInapplicableError(ValueError):
    """The metacheck matrix has a column of weight > 2; matching cannot
    represent it (callers fall back to BP+OSD for stage 1)."""


class UnmatchableError(ValueError):
    """Odd defect count with no boundary, or defects in disconnected
    components that cannot be paired."""


@dataclass(frozen=True)
class MetaGraph:
    """Adjacency view of a metacheck matrix with <=2-weight columns."""

    n_nodes: int
    n_edges: int  # syndrome bits
    #: per node: sorted tuple of (neighbor, syndrome bit) pairs
    adjacency: tuple[tuple[tuple[int, int], ...], ...]
    #: per node: sorted tuple of syndrome bits attaching it to the boundary
    boundary_edges: tuple[tuple[int, ...], ...]
    #: syndrome bits whose column weight is zero
    unprotected: tuple[int, ...]

    @property
    def has_boundary(self) -> bool:
        return any(self.boundary_edges)


def build_meta_graph(m: SparseBitMatrix) -> MetaGraph:
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(m.rows)]
    boundary: list[list[int]] = [[] for _ in range(m.rows)]
    unprotected: list[int] = []
    for col, rows in enumerate(m.column_supports()):
        if len(rows) == 0:
            unprotected.append(col)
        elif len(rows) == 1:
            boundary[rows[0]].append(col)
        elif len(rows) == 2:
            a, b = rows
            adjacency[a].append((b, col))
            adjacency[b].append((a, col))
        else:
            raise MatchingInapplicableError(
                f"column {col} has weight {len(rows)} > 2")
    return MetaGraph(
        n_nodes=m.rows, n_edges=m.cols,
        adjacency=tuple(tuple(sorted(a)) for a in adjacency),
        boundary_edges=tuple(tuple(sorted(b)) for b in boundary),
        unprotected=tuple(unprotected))


_metric_cache: dict[MetaGraph, tuple[sp.csr_matrix, dict]] = {}


def _metric_for(g: MetaGraph) -> tuple[sp.csr_matrix, dict]:
    """Sparse unit-weight adjacency and a (u, v) -> smallest syndrome-bit
    label lookup, cached per MetaGraph."""
    got = _metric_cache.get(g)
    if got is not None:
        return got
    rows, cols = [], []
    labels: dict[tuple[int, int], int] = {}
    for u, neigh in enumerate(g.adjacency):
        for v, label in neigh:
            rows.append(u)
            cols.append(v)
            key = (u, v)
            if key not in labels or label < labels[key]:
                labels[key] = label
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                        shape=(g.n_nodes, g.n_nodes))
    _metric_cache[g] = (adj, labels)
    return adj, labels


def _bfs_from(g: MetaGraph, sources: list[int]
              ) -> tuple[np.ndarray, np.ndarray]:
    """Unit-weight shortest paths from each source to every node.
    Returns (dist, pred) arrays of shape (len(sources), n_nodes) with
    _UNREACHABLE marking disconnected nodes."""
    adj, _ = _metric_for(g)
    dist, pred = csgraph.dijkstra(adj, unweighted=True, indices=sources,
                                  return_predecessors=True)
    dist = np.where(np.isinf(dist), _UNREACHABLE, dist).astype(np.int64)
    return dist, pred.astype(np.int64)


def _path_labels(g: MetaGraph, pred_row: np.ndarray, source: int,
                 target: int) -> list[int]:
    _, labels = _metric_for(g)
    out = []
    v = target
    while v != source:
        u = int(pred_row[v])
        if u < 0:
            raise UnmatchableError("no path between matched defects")
        out.append(labels[(u, v)])
        v = u
    return out


def _two_opt(pairs: list[tuple[int, int]], wmat: np.ndarray
             ) -> list[tuple[int, int]]:
    """Deterministic pair-swap improvement until a local optimum."""
    pairs = sorted(pairs)
    for _ in range(100):
        improved = False
        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                (i, j), (k, l) = pairs[a], pairs[b]
                cur = wmat[i, j] + wmat[k, l]
                alt1 = wmat[i, k] + wmat[j, l]
                alt2 = wmat[i, l] + wmat[j, k]
                if alt1 < cur and alt1 <= alt2:
                    pairs[a] = tuple(sorted((i, k)))
                    pairs[b] = tuple(sorted((j, l)))
                    improved = True
                elif alt2 < cur:
                    pairs[a] = tuple(sorted((i, l)))
                    pairs[b] = tuple(sorted((j, k)))
                    improved = True
        if not improved:
            break
    return sorted(pairs)


#: neighbors per node in the first sparse-matching attempt
SPARSE_NEIGHBORS = 8


def _sparse_matching(n_nodes: int, wmat: np.ndarray) -> list[tuple[int, int]]:
    """Blossom matching restricted to each node's nearest neighbors.

    Weight-exact in practice on dense defect instances (optimal pairings
    are local) at a fraction of the complete-graph cost; the neighbor
    count escalates up to the full graph if the sparse graph has no
    perfect matching.  Gated behind allow_approx because optimality is no
    longer guaranteed in general.
    """
    order = np.argsort(wmat, axis=1, kind="stable")
    scale = n_nodes * n_nodes * n_nodes + 1
    finite = wmat[np.isfinite(wmat)]
    top = (int(finite.max()) if finite.size else 0) * scale \
        + n_nodes * n_nodes + 1
    k = SPARSE_NEIGHBORS
    while True:
        graph = nx.Graph()
        graph.add_nodes_from(range(n_nodes))
        for i in range(n_nodes):
            for j in order[i, :k + 1]:
                j = int(j)
                if j == i:
                    continue
                if not np.isfinite(wmat[i, j]):
                    break
                a, b = (i, j) if i < j else (j, i)
                graph.add_edge(a, b, nw=top - (int(wmat[a, b]) * scale
                                               + a * n_nodes + b))
        pairs = nx.max_weight_matching(graph, maxcardinality=True,
                                       weight="nw")
        if len(pairs) * 2 == n_nodes:
            return _two_opt([tuple(sorted(p)) for p in pairs], wmat)
        if k >= n_nodes:
            raise UnmatchableError("no perfect matching exists")
        k = min(4 * k, n_nodes)


def solve_mwpm(n_nodes: int, weight: "callable", forbidden=None,
               allow_approx: bool = False) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching on a complete graph.

    ``weight`` is either a callable giving the (integer) cost of pairing
    i < j or a full (n, n) cost matrix; pairs in
    ``forbidden`` are excluded.  Exact (blossom) for any instance with at
    most EXACT_NODE_LIMIT nodes, and for all instances unless
    ``allow_approx`` is set; larger instances with ``allow_approx`` use
    nearest-neighbor sparse blossom.  Equal-weight exact optima are resolved
    toward lexicographically smaller pairings via an index-based epsilon
    that is too small to change the true optimum.
    """
    if n_nodes % 2:
        raise UnmatchableError("odd node count cannot be perfectly matched")
    if n_nodes == 0:
        return []
    forbidden = forbidden or set()

    if callable(weight):
        wfn = weight
    else:
        arr = np.asarray(weight, dtype=float)
        wfn = lambda i, j: arr[i, j]  # noqa: E731

    if allow_approx and n_nodes > EXACT_NODE_LIMIT:
        if callable(weight) or forbidden:
            wmat = np.full((n_nodes, n_nodes), np.inf)
            for i in range(n_nodes):
                for j in range(i + 1, n_nodes):
                    if (i, j) not in forbidden:
                        wmat[i, j] = wmat[j, i] = float(wfn(i, j))
        else:
            wmat = np.asarray(weight, dtype=float).copy()
            np.fill_diagonal(wmat, np.inf)
        return _sparse_matching(n_nodes, wmat)

    graph = nx.Graph()
    graph.add_nodes_from(range(n_nodes))
    # epsilon < 1/(number of edges in any matching * max index term)
    scale = n_nodes * n_nodes * n_nodes + 1
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if (i, j) in forbidden:
                continue
            graph.add_edge(i, j, weight=int(wfn(i, j)) * scale
                           + i * n_nodes + j)
    matching = nx.algorithms.matching.min_weight_matching(graph)
    if len(matching) * 2 != n_nodes:
        raise UnmatchableError("no perfect matching exists")
    return sorted(tuple(sorted(pair)) for pair in matching)


def repair_syndrome_mwpm(g: MetaGraph, m_vec,
                         allow_approx: bool = False) -> np.ndarray:
    """Repair r with M (s + r) = 0: match the defects flagged by the
    metasyndrome along shortest paths and XOR the path labels."""
    m_vec = gf2.as_bitvector(m_vec, g.n_nodes)
    defects = [int(d) for d in np.nonzero(m_vec)[0]]
    repair = np.zeros(g.n_edges, dtype=np.uint8)
    if not defects:
        return repair

    dist, pred = _bfs_from(g, defects)

    # nearest boundary attachment per defect (if the graph has one)
    bdist: dict[int, int] = {}
    battach: dict[int, tuple[int, int]] = {}  # defect -> (node, label)
    if g.has_boundary:
        bnodes = [v for v in range(g.n_nodes) if g.boundary_edges[v]]
        for idx, d in enumerate(defects):
            best = None
            for node in bnodes:
                if dist[idx, node] == _UNREACHABLE:
                    continue
                cand = (int(dist[idx, node]) + 1, node)
                if best is None or cand < best:
                    best = cand
            if best is not None:
                bdist[d] = best[0]
                battach[d] = (best[1], g.boundary_edges[best[1]][0])

    n_real = len(defects)
    if n_real % 2 and not bdist:
        raise UnmatchableError("odd defect count and no boundary")

    use_boundary = bool(bdist)
    n_total = 2 * n_real if use_boundary else n_real
    big = g.n_nodes * g.n_nodes + 2  # larger than any path length

    wmat = np.full((n_total, n_total), float(big))
    rr = dist[:, defects].astype(float)
    rr[rr == _UNREACHABLE] = big
    wmat[:n_real, :n_real] = rr
    if use_boundary:
        bvec = np.array([bdist.get(d, big) for d in defects], dtype=float)
        wmat[:n_real, n_real:] = bvec[:, None]
        wmat[n_real:, :n_real] = bvec[None, :]
        wmat[n_real:, n_real:] = 0.0
    np.fill_diagonal(wmat, big)

    pairs = solve_mwpm(n_total, wmat, allow_approx=allow_approx)

    for i, j in pairs:
        if i < n_real and j < n_real:
            a, b = defects[i], defects[j]
            if dist[i, b] == _UNREACHABLE:
                raise UnmatchableError(
                    "defects lie in disconnected components")
            for label in _path_labels(g, pred[i], a, b):
                repair[label] ^= 1
        elif i < n_real:  # matched to its virtual boundary node
            d = defects[i]
            if d not in battach:
                raise UnmatchableError("defect cannot reach the boundary")
            node, label = battach[d]
            for lab in _path_labels(g, pred[i], d, node):
                repair[lab] ^= 1
            repair[label] ^= 1
        # virtual-virtual pairs contribute nothing
    return repair
