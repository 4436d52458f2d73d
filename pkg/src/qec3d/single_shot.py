"""The two-stage single-shot error-correction protocol.

Each of N cycles: accumulate a fresh phase-flip error, measure the
X-syndrome noisily, repair the syndrome against the metachecks (stage 1,
MWPM or BP+OSD), detect and fix invalid repaired syndromes via the
failure-mode subroutine, then decode the qubits (stage 2, BP+OSD) and
apply the correction.  After the last cycle one noiseless round is run and
the trial succeeds iff the residual error is a Z-stabiliser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qec3d import bposd, gf2, matching, noise
from qec3d.bposd import BpConfig, OsdConfig, UnsatisfiableSyndromeError
from qec3d.gf2 import SparseBitMatrix
from qec3d.noise import NoiseModel, RngStream
from qec3d.product_code import ProductCode

STRATEGIES = ("mwpm_bposd", "bposd_x2", "code_capacity")

CAUSE_LOGICAL = "logical"
CAUSE_METACODE = "metacode"
CAUSE_UNMATCHABLE = "unmatchable"


@dataclass(frozen=True)
class ProtocolConfig:
    n_cycles: int
    strategy: str
    noise: NoiseModel
    bp_stage1: BpConfig = BpConfig()
    osd_stage1: OsdConfig = OsdConfig()
    bp_stage2: BpConfig = BpConfig()
    osd_stage2: OsdConfig = OsdConfig()
    failure_subroutine: bool = True
    #: let stage-1 matching fall back to nearest-neighbor sparse blossom
    #: above matching.EXACT_NODE_LIMIT nodes (exact blossom below, always)
    allow_approx_matching: bool = True

    def __post_init__(self):
        if self.n_cycles < 0:
            raise ValueError("cycle count must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class CycleState:
    """Working vectors threaded through the protocol."""

    e_z: np.ndarray  # accumulated qubit error
    s_x: np.ndarray  # current working syndrome
    m: np.ndarray  # metasyndrome
    cycle_index: int = 0


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    invalid_syndrome_events: int
    stage1_fallbacks: int
    residual_weight_trace: tuple[int, ...]
    cause: Optional[str] = None  # set on failure


# ---------------------------------------------------------------------------
# per-code derived structures, cached on the (immutable) matrices


_logical_cache: dict[SparseBitMatrix, SparseBitMatrix] = {}
_metagraph_cache: dict[SparseBitMatrix, Optional[matching.MetaGraph]] = {}
_mprime_cache: dict[SparseBitMatrix, SparseBitMatrix] = {}


def logical_x_generators(code: ProductCode) -> SparseBitMatrix:
    """k rows generating ker(hz) modulo im(hx^T): a residual Z error e in
    ker(hx) is a stabiliser iff these all pair evenly with it."""
    got = _logical_cache.get(code.hx)
    if got is not None:
        return got
    from qec3d.product_code import _IncrementalBasis, _vec_to_int

    img = _IncrementalBasis()
    for sup in code.hx.row_supports:
        x = 0
        for c in sup:
            x |= 1 << c
        img.add(x)
    rows = []
    for v in gf2.kernel_basis(code.hz):
        if img.add(_vec_to_int(v)):
            rows.append(np.nonzero(v)[0])
    lx = SparseBitMatrix(len(rows), code.n, rows)
    _logical_cache[code.hx] = lx
    return lx


def is_stabiliser(code: ProductCode, e_z: np.ndarray) -> bool:
    """True iff e_z lies in the image of hz^T (row space of hz)."""
    if gf2.mat_vec(code.hx, e_z).any():
        return False
    return not gf2.mat_vec(logical_x_generators(code), e_z).any()


def meta_graph_for(code: ProductCode) -> Optional[matching.MetaGraph]:
    """The matching graph of the metachecks, or None when some column has
    weight > 2 (matching inapplicable)."""
    if code.meta not in _metagraph_cache:
        try:
            _metagraph_cache[code.meta] = matching.build_meta_graph(code.meta)
        except matching.MatchingInapplicableError:
            _metagraph_cache[code.meta] = None
    return _metagraph_cache[code.meta]


def _m_prime(code: ProductCode) -> SparseBitMatrix:
    got = _mprime_cache.get(code.meta)
    if got is None:
        got = gf2.stack_rows(code.meta, code.lm)
        _mprime_cache[code.meta] = got
    return got


# ---------------------------------------------------------------------------
# protocol steps


def is_invalid_syndrome(code: ProductCode, s: np.ndarray) -> bool:
    """For a metacheck-satisfying s: True iff s is not a valid syndrome
    (outside the image of hx), detected by the pairing lm @ s != 0."""
    if code.km == 0:
        return False
    return bool(gf2.mat_vec(code.lm, s).any())


def failure_mode_repair(code: ProductCode, s: np.ndarray, m: np.ndarray,
                        bp_cfg: BpConfig, osd_cfg: OsdConfig) -> np.ndarray:
    """Repair against the stacked checks [meta; lm] with the extended
    target (m ; lm @ s), so the repaired syndrome passes both.  Always
    consistent: s itself solves the extended system."""
    target = np.concatenate([m, gf2.mat_vec(code.lm, s)])
    return bposd.bp_osd_decode(_m_prime(code), target, bp_cfg, osd_cfg)


def _stage1(code: ProductCode, cfg: ProtocolConfig, state: CycleState,
            counters: dict) -> None:
    """Syndrome repair; mutates state.s_x so that meta @ s_x = 0 (and
    lm @ s_x = 0 when the failure subroutine is enabled)."""
    graph = meta_graph_for(code) if cfg.strategy == "mwpm_bposd" else None
    if cfg.strategy == "mwpm_bposd" and graph is None:
        counters["stage1_fallbacks"] += 1
    if graph is not None:
        r_m = matching.repair_syndrome_mwpm(
            graph, state.m, allow_approx=cfg.allow_approx_matching)
    else:
        r_m = bposd.bp_osd_decode(code.meta, state.m,
                                  cfg.bp_stage1, cfg.osd_stage1)
    state.s_x = state.s_x ^ r_m

    if cfg.failure_subroutine and is_invalid_syndrome(code, state.s_x):
        counters["invalid_syndrome_events"] += 1
        if cfg.strategy == "mwpm_bposd":
            # the stacked checks break the weight-<=2 column structure,
            # so this repair always runs through BP+OSD
            counters["stage1_fallbacks"] += 1
        state.s_x = state.s_x ^ r_m  # revert
        r_m = failure_mode_repair(code, state.s_x, state.m,
                                  cfg.bp_stage1, cfg.osd_stage1)
        state.s_x = state.s_x ^ r_m
        if is_invalid_syndrome(code, state.s_x):
            raise UnsatisfiableSyndromeError(
                "failure-mode repair left an invalid syndrome")


def run_trial(code: ProductCode, cfg: ProtocolConfig,
              stream: RngStream) -> TrialOutcome:
    """One full protocol execution; pure given (code, cfg, stream)."""
    n = code.n
    mx = code.hx.rows
    state = CycleState(e_z=np.zeros(n, dtype=np.uint8),
                       s_x=np.zeros(mx, dtype=np.uint8),
                       m=np.zeros(code.meta.rows, dtype=np.uint8))
    counters = {"invalid_syndrome_events": 0, "stage1_fallbacks": 0}
    trace: list[int] = []

    def fail(cause: str) -> TrialOutcome:
        return TrialOutcome(success=False,
                            invalid_syndrome_events=counters[
                                "invalid_syndrome_events"],
                            stage1_fallbacks=counters["stage1_fallbacks"],
                            residual_weight_trace=tuple(trace), cause=cause)

    for j in range(1, cfg.n_cycles + 1):
        state.cycle_index = j
        state.e_z ^= noise.sample_qubit_error(
            n, cfg.noise.p, stream.at(j, noise.PHASE_QUBIT))
        state.s_x = gf2.mat_vec(code.hx, state.e_z)
        state.s_x ^= noise.sample_syndrome_error(
            mx, cfg.noise.q, stream.at(j, noise.PHASE_SYNDROME))
        state.m = gf2.mat_vec(code.meta, state.s_x)

        if cfg.strategy != "code_capacity":
            try:
                _stage1(code, cfg, state, counters)
            except matching.UnmatchableError:
                return fail(CAUSE_UNMATCHABLE)
            except UnsatisfiableSyndromeError:
                return fail(CAUSE_METACODE)

        try:
            r_z = bposd.bp_osd_decode(code.hx, state.s_x,
                                      cfg.bp_stage2, cfg.osd_stage2)
        except UnsatisfiableSyndromeError:
            # the repaired syndrome was invalid (no failure subroutine)
            return fail(CAUSE_METACODE)
        state.e_z ^= r_z
        trace.append(int(state.e_z.sum()))

    # noiseless final round
    state.e_z ^= noise.sample_qubit_error(
        n, cfg.noise.p, stream.at(cfg.n_cycles + 1, noise.PHASE_QUBIT))
    s_final = gf2.mat_vec(code.hx, state.e_z)
    r_z = bposd.bp_osd_decode(code.hx, s_final,
                              cfg.bp_stage2, cfg.osd_stage2)
    state.e_z ^= r_z

    if is_stabiliser(code, state.e_z):
        return TrialOutcome(success=True,
                            invalid_syndrome_events=counters[
                                "invalid_syndrome_events"],
                            stage1_fallbacks=counters["stage1_fallbacks"],
                            residual_weight_trace=tuple(trace))
    return fail(CAUSE_LOGICAL)
