"""The twelve acceptance checks, one test each.

Checks 8, 9 and 11 are full Monte Carlo campaigns (marked ``slow``,
several CPU-hours together); everything else runs in minutes.
"""

import itertools
import math
import random
import time

import numpy as np
import pytest

from qec3d import confinement as cf
from qec3d import fitting, gf2, matching, montecarlo as mc
from qec3d import product_code as pc
from qec3d import single_shot
from qec3d.bposd import BpConfig, OsdConfig, bp_osd_decode
from qec3d.gf2 import SparseBitMatrix
from qec3d.noise import NoiseModel, RngStream
from qec3d.single_shot import ProtocolConfig, run_trial

_toric_cache = {}


def toric(L):
    if L not in _toric_cache:
        _toric_cache[L] = pc.build_product_code(*pc.toric_seeds(L))
    return _toric_cache[L]


def toric_factory(L):
    return toric(L)


# ---------------------------------------------------------------------------
# 1. construction exactness


def test_01_construction_exactness():
    t0 = time.perf_counter()
    for L in range(2, 7):
        code = pc.build_product_code(*pc.toric_seeds(L))
        assert (code.n, code.k, code.dx, code.dz, code.dss) == \
            (3 * L ** 3, 3, L * L, L, L)
        code = pc.build_product_code(*pc.surface_seeds(L))
        assert (code.n, code.k, code.dx, code.dz, code.dss) == \
            (2 * L * (L - 1) ** 2 + L ** 3, 1, L * L, L, math.inf)
    elapsed = time.perf_counter() - t0
    print(f"\n[1] toric+surface L=2..6 parameters exact in {elapsed:.2f}s")
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# 2. table family reproduction


def test_02_table_reproduction():
    want = [(1336, 4, 6), (3100, 5, 8), (5964, 6, 10)]
    for idx, (n, k, dz) in enumerate(want):
        code = pc.build_product_code(*pc.table_family_seeds(idx))
        assert (code.n, code.k) == (n, k)
        assert code.dz == dz  # seed distances brute-forced at build time
    print("\n[2] table rows rebuild to n=1336/3100/5964, k=4/5/6")


# ---------------------------------------------------------------------------
# 3. chain/homology invariants on random seeds


def test_03_chain_homology_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for case in range(100):
        seeds = []
        for _ in range(3):
            r, c = rng.integers(2, 5, size=2)
            dense = (rng.random((r, c)) < 0.45).astype(np.uint8)
            seeds.append(pc.ClassicalSeed.from_matrix(
                SparseBitMatrix.from_dense(dense)))
        a, b, c = seeds
        cc = pc.build_complex(a, b, c)
        assert gf2.is_zero(gf2.mat_mul(cc.delta1, cc.delta0)), case
        assert gf2.is_zero(gf2.mat_mul(cc.delta2, cc.delta1)), case
        code = pc.derive_code(cc, (a, b, c))
        assert gf2.is_zero(gf2.mat_mul(code.meta, code.hx)), case
        assert gf2.is_zero(gf2.mat_mul(code.lm, code.hx)), case
        assert gf2.rank(gf2.mat_mul(code.lm, code.fm)) == code.km, case
        formula = (a.kt * b.k * c.k + a.k * b.kt * c.k + a.k * b.k * c.kt)
        assert code.k == formula, case
    elapsed = time.perf_counter() - t0
    print(f"\n[3] 100 random seed triples: all invariants hold "
          f"({elapsed:.1f}s)")
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 4. cubic confinement, exhaustive


def test_04_cubic_confinement():
    t0 = time.perf_counter()
    for L in (2, 3):
        code = toric(L)
        t = min(code.dz, 3)
        report = cf.check_confinement(code, t, cf.cubic_f, "x^3/2")
        assert report.verified, report.counterexample
    elapsed = time.perf_counter() - t0
    print(f"\n[4] f(|s|)=|s|^3/2 >= reduced weight, toric L=2,3 "
          f"exhaustive ({elapsed:.1f}s)")
    assert elapsed < 600.0


# ---------------------------------------------------------------------------
# 5. Shadow-decoder residual bound, exhaustive


def test_05_shadow_decoder_bound():
    t0 = time.perf_counter()
    code = toric(2)
    h = code.hx
    shadow = cf.build_shadow(code, 2)
    checked = 0
    for ew in (0, 1):
        for esup in itertools.combinations(range(h.cols), ew):
            e = np.zeros(h.cols, dtype=np.uint8)
            for q in esup:
                e[q] = 1
            clean = gf2.mat_vec(h, e)
            for sw in (0, 1):
                for ssup in itertools.combinations(range(h.rows), sw):
                    s = clean.copy()
                    for b in ssup:
                        s[b] ^= 1
                    _, e_r = cf.shadow_decode(code, s, 2, shadow=shadow)
                    residual = cf.reduced_weight(h, e ^ e_r, cap=4)
                    assert residual <= cf.cubic_f(2 * sw), (esup, ssup)
                    checked += 1
    elapsed = time.perf_counter() - t0
    print(f"\n[5] Shadow decoder t=2: residual bound holds on all "
          f"{checked} cases ({elapsed:.1f}s)")
    assert elapsed < 300.0


# ---------------------------------------------------------------------------
# 6. closeness property suite


def _random_connected(rng, n):
    adj = [set() for _ in range(n)]
    nodes = list(range(n))
    rng.shuffle(nodes)
    for i in range(1, n):
        a, b = nodes[i], rng.choice(nodes[:i])
        adj[a].add(b)
        adj[b].add(a)
    for _ in range(rng.randrange(2 * n)):
        a, b = rng.sample(range(n), 2)
        adj[a].add(b)
        adj[b].add(a)
    return tuple(tuple(sorted(s)) for s in adj)


def test_06_closeness_properties():
    rng = random.Random(2025)
    for case in range(10_000):
        n = rng.randrange(2, 13)
        adj = _random_connected(rng, n)
        beta = rng.randrange(1, n + 1)
        e1 = set(rng.sample(range(n), rng.randrange(0, n + 1)))
        e2 = set(rng.sample(range(n), rng.randrange(0, n + 1)))
        c1 = cf.closeness(adj, e1, beta)
        c2 = cf.closeness(adj, e2, beta)
        # (i) bounded by the set size
        assert c1 <= len(e1), case
        # (ii) bounded by beta; equality needs a connected patch full of e1
        assert c1 <= beta, case
        # (iii) nonnegative, zero iff empty
        assert c1 >= 0 and (c1 == 0) == (not e1), case
        # (iv) triangle inequality under union
        assert cf.closeness(adj, e1 | e2, beta) <= c1 + c2, case
        # (v) monotone under inclusion
        if e1 <= e2:
            assert c1 <= c2, case
    print("\n[6] closeness properties (i)-(v): 10^4 random cases, exact")


# ---------------------------------------------------------------------------
# 7. decoder contracts (fuzz + brute force)


def brute_force_mwpm(n, weight):
    def rec(remaining):
        if not remaining:
            return 0
        a = remaining[0]
        best = float("inf")
        for b in remaining[1:]:
            rest = [x for x in remaining if x not in (a, b)]
            best = min(best, weight(a, b) + rec(rest))
        return best

    return rec(list(range(n)))


def test_07_decoder_contracts():
    rng = np.random.default_rng(7)
    total = 0

    # stage-2 corrections satisfy the syndrome exactly
    for L, cases in ((2, 60_000), (3, 18_000)):
        code = toric(L)
        h = code.hx
        bp, osd = BpConfig(max_iters=12), OsdConfig(order=0)
        for _ in range(cases):
            e = (rng.random(h.cols) < 0.06).astype(np.uint8)
            s = gf2.mat_vec(h, e)
            r = bp_osd_decode(h, s, bp, osd)
            assert (gf2.mat_vec(h, r) == s).all()
            total += 1

    # stage-1 MWPM repairs zero the metasyndrome
    code = toric(3)
    g = matching.build_meta_graph(code.meta)
    for case in range(22_000):
        s_err = (rng.random(code.meta.cols) < 0.03).astype(np.uint8)
        m = gf2.mat_vec(code.meta, s_err)
        r = matching.repair_syndrome_mwpm(g, m,
                                          allow_approx=bool(case % 2))
        assert not gf2.mat_vec(code.meta, s_err ^ r).any(), case
        total += 1
    assert total >= 100_000

    # exact matcher equals brute force on every random <= 8-node instance
    for case in range(500):
        n = int(rng.choice([2, 4, 6, 8]))
        w = rng.integers(0, 25, size=(n, n))
        w = w + w.T
        pairs = matching.solve_mwpm(n, lambda i, j: int(w[i, j]))
        got = sum(int(w[i, j]) for i, j in pairs)
        assert got == brute_force_mwpm(n, lambda i, j: int(w[i, j])), case
    print(f"\n[7] decoder contracts: {total} fuzz cases + 500 brute-force "
          "matchings, all exact")


# ---------------------------------------------------------------------------
# 8. code-capacity threshold (slow)


@pytest.mark.slow
def test_08_code_capacity_threshold():
    spec = mc.CampaignSpec(
        family="toric", Ls=(4, 5, 6, 7),
        ps=tuple(np.round(np.linspace(0.18, 0.25, 6), 6)),
        Ns=(0,), q_rule="zero", strategy="code_capacity",
        trials=2000, min_failures=2000, master_seed=8,
        protocol_overrides={"bp_stage2": BpConfig(max_iters=40),
                            "osd_stage2": OsdConfig(order=2)})
    ds = mc.run_campaign(toric_factory, spec)
    rows = [(r.point.L, r.point.p, r.p_fail) for r in ds.results]
    fit = fitting.fit_threshold(rows, bootstrap=30)
    p_th = fit.parameters["p_th"]
    print(f"\n[8] code-capacity threshold: fitted p_th = {p_th:.4f} "
          f"(target 0.216 +- 0.020)")
    assert abs(p_th - 0.216) <= 0.020


# ---------------------------------------------------------------------------
# 9. single-shot threshold (slow)


@pytest.mark.slow
@pytest.mark.parametrize("strategy", ["mwpm_bposd", "bposd_x2"])
def test_09_single_shot_threshold(strategy):
    spec = mc.CampaignSpec(
        family="toric", Ls=(5, 7, 9),
        ps=(0.02, 0.025, 0.03, 0.035, 0.04),
        Ns=(8,), q_rule="q=p", strategy=strategy,
        trials=1000, min_failures=1000, master_seed=9,
        protocol_overrides={
            # sum-product marginals keep the syndrome repair local on the
            # degree-2 metacode; min-sum suffices for the qubit stage
            "bp_stage1": BpConfig(max_iters=30, schedule="serial",
                                  variant="sum-product", prior=0.03),
            "osd_stage1": OsdConfig(order=2),
            "bp_stage2": BpConfig(max_iters=60, schedule="serial"),
            "osd_stage2": OsdConfig(order=2)})
    ds = mc.run_campaign(toric_factory, spec)
    rows = [(r.point.L, r.point.p, r.p_fail) for r in ds.results]
    fit = fitting.fit_threshold(rows, bootstrap=30)
    p_th = fit.parameters["p_th"]
    print(f"\n[9] single-shot crossing ({strategy}): p_th = {p_th:.4f} "
          f"(target 0.029 +- 0.008)")
    assert abs(p_th - 0.029) <= 0.008


# ---------------------------------------------------------------------------
# 10. fit self-consistency


def test_10_fit_self_consistency():
    rng = np.random.default_rng(10)

    t0 = time.perf_counter()
    rows = []
    for L in (4, 5, 6, 7):
        for p in np.linspace(0.18, 0.25, 8):
            x = (p - 0.216) * L ** (1 / 1.04)
            rows.append((L, p, 0.12 + 0.9 * x + 1.4 * x * x
                         + rng.normal(0, 0.003)))
    fit = fitting.fit_threshold(rows, bootstrap=100)
    assert abs(fit.parameters["p_th"] - 0.216) / 0.216 < 0.02
    t_thresh = time.perf_counter() - t0
    assert t_thresh < 60.0

    t0 = time.perf_counter()
    p_sus, gamma, p0 = 0.0308, 3.23, 0.216
    Ns = np.array([0, 1, 2, 4, 8, 16], dtype=float)
    pth = p_sus * (1 - (1 - p0 / p_sus) * np.exp(-gamma * Ns))
    pth += rng.normal(0, 1e-4, len(Ns))
    pth[0] = p0
    fit = fitting.fit_sustainable(list(zip(Ns, pth)), bootstrap=1000)
    assert abs(fit.parameters["p_sus"] - p_sus) / p_sus < 0.02
    t_sus = time.perf_counter() - t0
    assert t_sus < 60.0

    t0 = time.perf_counter()
    alpha, beta = 0.546, 1.91
    rows = []
    for L in (3, 5, 7, 9):
        for p in (0.01, 0.015, 0.02, 0.03):
            logp = (-0.2 * L + alpha * L ** beta * math.log(p / 0.216)
                    + rng.normal(0, 0.02))
            rows.append((L, p, math.exp(logp)))
    fit = fitting.fit_scaling(rows, p_th=0.216, bootstrap=1000)
    assert abs(fit.parameters["alpha"] - alpha) / alpha < 0.05
    assert abs(fit.parameters["beta"] - beta) / beta < 0.05
    t_scal = time.perf_counter() - t0
    assert t_scal < 60.0
    print(f"\n[10] planted parameters recovered: threshold {t_thresh:.1f}s, "
          f"sustainable {t_sus:.1f}s, scaling {t_scal:.1f}s")


# ---------------------------------------------------------------------------
# 11. failure-mode subroutine effect (slow)


@pytest.mark.slow
def test_11_failure_mode_effect():
    t0 = time.perf_counter()
    code = toric(5)
    noise = NoiseModel(p=0.1, q=0.2)
    fails = {}
    for sub in (True, False):
        cfg = ProtocolConfig(n_cycles=1, strategy="bposd_x2", noise=noise,
                             bp_stage1=BpConfig(max_iters=30, schedule="serial",
                                                variant="sum-product", prior=0.2),
                             osd_stage1=OsdConfig(order=2),
                             bp_stage2=BpConfig(max_iters=60, schedule="serial"),
                             osd_stage2=OsdConfig(order=2),
                             failure_subroutine=sub)
        fails[sub] = sum(
            not run_trial(code, cfg, RngStream(11, t)).success
            for t in range(10_000))
    elapsed = time.perf_counter() - t0
    p_with, p_without = fails[True] / 1e4, fails[False] / 1e4
    print(f"\n[11] failure-mode subroutine: p_fail {p_with:.4f} with vs "
          f"{p_without:.4f} without ({elapsed:.0f}s)")
    assert p_with <= p_without / 5.0
    assert elapsed < 3600.0


# ---------------------------------------------------------------------------
# 12. determinism across thread counts


def test_12_thread_determinism():
    spec = mc.CampaignSpec(
        family="toric", Ls=(2, 3), ps=(0.02, 0.05), Ns=(2,),
        strategy="mwpm_bposd", trials=120, min_failures=25, master_seed=12)
    outputs = {mc.dataset_to_csv(mc.run_campaign(toric_factory, spec,
                                                 threads=t))
               for t in (1, 2, 3, 8)}
    assert len(outputs) == 1
    print("\n[12] campaign CSV byte-identical for thread counts 1/2/3/8")
