"""Desk-scale exhaustive verification of confinement theory.

Tools for brute-force reduced weights, syndrome Shadows and the Shadow
decoder, confinement and (partial) soundness checks, the beta-closeness
weight function on connected graphs, and the Stochastic Shadow decoder.
Everything here enumerates exhaustively under hard instance-size guards;
nothing samples silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from qec3d import gf2
from qec3d.gf2 import SparseBitMatrix
from qec3d.product_code import ProductCode

REDUCED_WEIGHT_CAP = 4
SHADOW_SIZE_CAP = 5_000_000


class EnumerationInfeasibleError(RuntimeError):
    """The requested exhaustive enumeration exceeds the configured caps."""


def cubic_f(x: float) -> float:
    """The confinement function x^3 / 2."""
    return x ** 3 / 2.0


# ---------------------------------------------------------------------------
# bit-mask helpers (errors and syndromes as python ints)


def _column_syndromes(h: SparseBitMatrix) -> list[int]:
    """Per-qubit syndrome masks: bit r set iff check r contains the qubit."""
    cols = h.column_supports()
    out = []
    for rows in cols:
        x = 0
        for r in rows:
            x |= 1 << r
        out.append(x)
    return out


def _mask_of(support: Iterable[int]) -> int:
    x = 0
    for i in support:
        x |= 1 << i
    return x


def _vec_mask(v: np.ndarray) -> int:
    return _mask_of(np.nonzero(np.asarray(v))[0].tolist())


def _mask_vec(x: int, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.uint8)
    i = 0
    while x:
        if x & 1:
            out[i] = 1
        x >>= 1
        i += 1
    return out


def _count_weighted_enum(n: int, t: int) -> int:
    return sum(math.comb(n, w) for w in range(t + 1))


# ---------------------------------------------------------------------------
# reduced weight and Shadows


def reduced_weight(h: SparseBitMatrix, e, cap: int = REDUCED_WEIGHT_CAP
                   ) -> int:
    """Minimum weight over the coset {e' : H e' = H e}, by enumerating
    errors in increasing weight until one matches.  This is the brute
    force oracle; it fails with an error when no match is found within
    the weight cap."""
    e = gf2.as_bitvector(e, h.cols)
    target = _vec_mask(gf2.mat_vec(h, e))
    if target == 0:
        return 0
    col = _column_syndromes(h)
    limit = min(cap, int(e.sum()))
    for w in range(1, limit + 1):
        for combo in combinations(range(h.cols), w):
            acc = 0
            for q in combo:
                acc ^= col[q]
            if acc == target:
                return w
    if int(e.sum()) <= cap:
        return int(e.sum())
    raise EnumerationInfeasibleError(
        f"no coset element of weight <= {cap} found; raise the cap")


@dataclass(frozen=True)
class ShadowSet:
    """The set of syndromes {sigma(e) : |e| <= t} (as int masks)."""

    t: int
    n_checks: int
    syndromes: frozenset[int]

    def __contains__(self, s) -> bool:
        if isinstance(s, (int, np.integer)):
            return int(s) in self.syndromes
        return _vec_mask(gf2.as_bitvector(s, self.n_checks)) in self.syndromes


def _syndrome_min_weights(h: SparseBitMatrix, t: int,
                          size_cap: int = SHADOW_SIZE_CAP) -> dict[int, int]:
    """Map sigma(e) -> min |e| over all e with |e| <= t, by a single
    increasing-weight sweep."""
    if _count_weighted_enum(h.cols, t) > size_cap:
        raise EnumerationInfeasibleError(
            f"enumerating errors of weight <= {t} over {h.cols} qubits "
            "exceeds the size cap")
    col = _column_syndromes(h)
    seen: dict[int, int] = {0: 0}
    for w in range(1, t + 1):
        for combo in combinations(range(h.cols), w):
            acc = 0
            for q in combo:
                acc ^= col[q]
            if acc not in seen:
                seen[acc] = w
    return seen


def build_shadow(code_or_h, t: int,
                 size_cap: int = SHADOW_SIZE_CAP) -> ShadowSet:
    """Exact t-Shadow of the code (X-syndromes of Z errors)."""
    h = code_or_h.hx if isinstance(code_or_h, ProductCode) else code_or_h
    seen = _syndrome_min_weights(h, t, size_cap)
    return ShadowSet(t=t, n_checks=h.rows, syndromes=frozenset(seen))


def shadow_decode(code_or_h, s_observed, t: int,
                  shadow: Optional[ShadowSet] = None,
                  size_cap: int = SHADOW_SIZE_CAP
                  ) -> tuple[np.ndarray, np.ndarray]:
    """The two-stage Shadow decoder of parameter t.

    Syndrome repair: the minimum-weight s_r with s + s_r in the t-Shadow
    (ties: lexicographically first in increasing-weight enumeration).
    Qubit decode: the minimum-weight e_r with sigma(e_r) = s + s_r (same
    tie-break).  Returns (s_r, e_r).
    """
    h = code_or_h.hx if isinstance(code_or_h, ProductCode) else code_or_h
    s = gf2.as_bitvector(s_observed, h.rows)
    if shadow is None:
        shadow = build_shadow(h, t, size_cap)
    s_mask = _vec_mask(s)

    target = None
    s_r_mask = None
    for w in range(h.rows + 1):
        for combo in combinations(range(h.rows), w):
            cand = s_mask ^ _mask_of(combo)
            if cand in shadow.syndromes:
                s_r_mask = _mask_of(combo)
                target = cand
                break
        if target is not None:
            break
    assert target is not None  # the Shadow contains 0, so a repair exists

    col = _column_syndromes(h)
    e_r_support: Optional[tuple[int, ...]] = None
    for w in range(t + 1):
        for combo in combinations(range(h.cols), w):
            acc = 0
            for q in combo:
                acc ^= col[q]
            if acc == target:
                e_r_support = combo
                break
        if e_r_support is not None:
            break
    assert e_r_support is not None  # target is in the t-Shadow
    e_r = np.zeros(h.cols, dtype=np.uint8)
    for q in e_r_support:
        e_r[q] = 1
    return _mask_vec(s_r_mask, h.rows), e_r


# ---------------------------------------------------------------------------
# confinement / soundness checks


@dataclass(frozen=True)
class ConfinementReport:
    t: int
    f_descriptor: str
    verified: bool
    #: (error support, |sigma|, reduced weight) of the worst margin case
    worst_case: Optional[tuple[tuple[int, ...], int, int]]
    counterexample: Optional[tuple[tuple[int, ...], int, int]]
    checked_weight_range: tuple[int, int]
    errors_checked: int

    def to_json_dict(self) -> dict:
        def case(c):
            return None if c is None else {
                "support": list(c[0]), "syndrome_weight": c[1],
                "reduced_weight": c[2]}
        return {"schema_version": gf2.SCHEMA_VERSION, "t": self.t,
                "f": self.f_descriptor, "verified": self.verified,
                "worst_case": case(self.worst_case),
                "counterexample": case(self.counterexample),
                "checked_weight_range": list(self.checked_weight_range),
                "errors_checked": self.errors_checked}


def check_confinement(code_or_h, t: int, f: Callable[[float], float],
                      f_descriptor: str = "f",
                      size_cap: int = SHADOW_SIZE_CAP) -> ConfinementReport:
    """Exhaustively check f(|sigma(e)|) >= |e|_red for all Z errors with
    reduced weight <= t, operationalized as all errors of weight <= t
    (reduced weight never exceeds raw weight, so this covers the required
    set; higher-raw-weight coset duplicates add nothing new)."""
    h = code_or_h.hx if isinstance(code_or_h, ProductCode) else code_or_h
    if _count_weighted_enum(h.cols, t) > size_cap:
        raise EnumerationInfeasibleError(
            "confinement enumeration exceeds the size cap")
    col = _column_syndromes(h)
    # min |e| per syndrome doubles as the reduced weight for every
    # enumerated error with that syndrome
    seen: dict[int, int] = {0: 0}
    checked = 0
    for w in range(1, t + 1):
        for combo in combinations(range(h.cols), w):
            acc = 0
            for q in combo:
                acc ^= col[q]
            if acc not in seen:
                seen[acc] = w
            checked += 1

    worst = None
    worst_margin = math.inf
    counterexample = None
    # re-sweep to attach a concrete witness support per syndrome class
    reported: set[int] = set()
    for w in range(0, t + 1):
        for combo in combinations(range(h.cols), w):
            acc = 0
            for q in combo:
                acc ^= col[q]
            if acc in reported:
                continue
            reported.add(acc)
            red = seen[acc]
            sw = acc.bit_count()
            margin = f(sw) - red
            if margin < worst_margin:
                worst_margin = margin
                worst = (combo, sw, red)
            if margin < 0 and counterexample is None:
                counterexample = (combo, sw, red)
    return ConfinementReport(
        t=t, f_descriptor=f_descriptor, verified=counterexample is None,
        worst_case=worst, counterexample=counterexample,
        checked_weight_range=(0, t), errors_checked=checked)


def check_soundness_partial(code_or_h, t: int, f: Callable[[float], float],
                            w_max: int, f_descriptor: str = "f",
                            size_cap: int = SHADOW_SIZE_CAP) -> dict:
    """Check the soundness inequality f(|sigma(e)|) >= |e|_red on all
    errors of weight <= w_max whose syndrome weight is <= t.  Soundness
    quantifies over ALL errors, so this can only report "no counterexample
    up to w_max", never "verified"."""
    h = code_or_h.hx if isinstance(code_or_h, ProductCode) else code_or_h
    if _count_weighted_enum(h.cols, w_max) > size_cap:
        raise EnumerationInfeasibleError(
            "soundness enumeration exceeds the size cap")
    col = _column_syndromes(h)
    seen: dict[int, int] = {0: 0}
    for w in range(1, w_max + 1):
        for combo in combinations(range(h.cols), w):
            acc = 0
            for q in combo:
                acc ^= col[q]
            if acc not in seen:
                seen[acc] = w
    counterexample = None
    checked = 0
    for acc, red in seen.items():
        sw = acc.bit_count()
        if sw > t:
            continue
        checked += 1
        if f(sw) < red and counterexample is None:
            counterexample = {"syndrome_weight": sw, "reduced_weight": red}
    return {"status": f"no counterexample up to weight {w_max}"
            if counterexample is None else "counterexample found",
            "ok": counterexample is None,
            "counterexample": counterexample,
            "w_max": w_max, "t": t, "f": f_descriptor,
            "syndromes_checked": checked}


# ---------------------------------------------------------------------------
# qubit / syndrome graphs and the closeness weight


def qubit_graph(h: SparseBitMatrix) -> tuple[tuple[int, ...], ...]:
    """Adjacency over qubits: q1 ~ q2 iff some check supports both."""
    adj: list[set[int]] = [set() for _ in range(h.cols)]
    for sup in h.row_supports:
        for a, b in combinations(sup, 2):
            adj[a].add(b)
            adj[b].add(a)
    return tuple(tuple(sorted(s)) for s in adj)


def syndrome_graph(h: SparseBitMatrix) -> tuple[tuple[int, ...], ...]:
    """Adjacency over checks: s1 ~ s2 iff their supports share a qubit."""
    adj: list[set[int]] = [set() for _ in range(h.rows)]
    for qubit_rows in h.column_supports():
        for a, b in combinations(qubit_rows, 2):
            adj[a].add(b)
            adj[b].add(a)
    return tuple(tuple(sorted(s)) for s in adj)


def is_connected(adj: Sequence[Sequence[int]]) -> bool:
    n = len(adj)
    if n == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def connected_patches(adj: Sequence[Sequence[int]], beta: int):
    """Yield every connected beta-node subset exactly once (as a frozenset),
    via canonical DFS growth anchored at the minimum node with pruning by
    node index."""
    n = len(adj)

    def extend(sub: set, ext: list, anchor: int):
        if len(sub) == beta:
            yield frozenset(sub)
            return
        while ext:
            v = ext.pop()
            new_ext = list(ext)
            for w in adj[v]:
                if w > anchor and w not in sub and w not in ext \
                        and all(w not in adj[u] for u in sub):
                    new_ext.append(w)
            sub.add(v)
            yield from extend(sub, new_ext, anchor)
            sub.remove(v)

    for v in range(n):
        ext = [w for w in adj[v] if w > v]
        yield from extend({v}, ext, v)


def closeness(adj: Sequence[Sequence[int]], nodes: Iterable[int],
              beta: int, patch_cap: int = 2_000_000) -> int:
    """beta-closeness: max |K intersect nodes| over connected beta-node
    patches K of a connected graph."""
    n = len(adj)
    if beta < 1 or beta > n:
        raise ValueError("beta must lie in [1, node count]")
    if not is_connected(adj):
        raise ValueError("closeness requires a connected graph")
    node_set = set(int(v) for v in nodes)
    if not node_set:
        return 0
    best = 0
    count = 0
    for patch in connected_patches(adj, beta):
        count += 1
        if count > patch_cap:
            raise EnumerationInfeasibleError(
                "connected-patch enumeration exceeds the cap")
        best = max(best, len(patch & node_set))
        if best == min(beta, len(node_set)):
            break  # cannot improve further
    return best


# ---------------------------------------------------------------------------
# Stochastic Shadow decoder


def stochastic_shadow_decode(code_or_h, s_observed, alpha: float, beta: int,
                             gamma: int, error_weight_cap: int = 3,
                             repair_weight_cap: int = 3,
                             size_cap: int = SHADOW_SIZE_CAP
                             ) -> tuple[np.ndarray, np.ndarray]:
    """Shadow decoding with closeness weights on tiny instances.

    Syndrome repair: S_r of minimum gamma-closeness (on the syndrome
    graph) with s + S_r in the (alpha, beta)-Shadow = {sigma(E) :
    ||E||_beta <= alpha*beta}.  Qubit decode: E_r of minimum
    beta-closeness (on the qubit graph) with sigma(E_r) = s + S_r.  Both
    searches enumerate candidates of Hamming weight up to the configured
    caps, ties broken lexicographically.
    """
    h = code_or_h.hx if isinstance(code_or_h, ProductCode) else code_or_h
    s = gf2.as_bitvector(s_observed, h.rows)
    qadj = qubit_graph(h)
    sadj = syndrome_graph(h)
    if _count_weighted_enum(h.cols, error_weight_cap) > size_cap:
        raise EnumerationInfeasibleError("error enumeration exceeds the cap")

    col = _column_syndromes(h)
    # (alpha, beta)-Shadow: per syndrome, the best (closeness, support)
    shadow: dict[int, tuple[int, tuple[int, ...]]] = {}
    for w in range(error_weight_cap + 1):
        for combo in combinations(range(h.cols), w):
            cl = closeness(qadj, combo, beta) if combo else 0
            if cl > alpha * beta:
                continue
            acc = 0
            for q in combo:
                acc ^= col[q]
            prev = shadow.get(acc)
            if prev is None or cl < prev[0]:
                shadow[acc] = (cl, combo)

    s_mask = _vec_mask(s)
    best_repair = None  # (closeness, support, target syndrome)
    for w in range(repair_weight_cap + 1):
        for combo in combinations(range(h.rows), w):
            cand = s_mask ^ _mask_of(combo)
            if cand not in shadow:
                continue
            cl = closeness(sadj, combo, gamma) if combo else 0
            if best_repair is None or cl < best_repair[0]:
                best_repair = (cl, combo, cand)
        if best_repair is not None and best_repair[0] == 0:
            break  # zero closeness is unbeatable
    if best_repair is None:
        raise EnumerationInfeasibleError(
            "no repair found within the weight caps; raise them")

    _, s_r_support, target = best_repair
    s_r = np.zeros(h.rows, dtype=np.uint8)
    for i in s_r_support:
        s_r[i] = 1
    e_r = np.zeros(h.cols, dtype=np.uint8)
    for q in shadow[target][1]:
        e_r[q] = 1
    return s_r, e_r
