import numpy as np
import pytest

from qec3d import bposd, gf2
from qec3d import product_code as pc
from qec3d.bposd import (BpConfig, OsdConfig, UnsatisfiableSyndromeError,
                         bp_decode, bp_osd_decode, osd_post)
from qec3d.gf2 import SparseBitMatrix


@pytest.fixture(scope="module")
def toric3():
    return pc.build_product_code(*pc.toric_seeds(3))


def test_config_validation():
    with pytest.raises(ValueError):
        BpConfig(max_iters=0)
    with pytest.raises(ValueError):
        BpConfig(variant="bogus")
    with pytest.raises(ValueError):
        BpConfig(ms_scale=0.0)
    with pytest.raises(ValueError):
        OsdConfig(order=-1)
    with pytest.raises(ValueError):
        OsdConfig(order=7)


def test_zero_syndrome_converges_immediately(toric3):
    h = toric3.hx
    s = np.zeros(h.rows, dtype=np.uint8)
    _, hard, converged = bp_decode(h, s, BpConfig())
    assert converged and hard.sum() == 0


@pytest.mark.parametrize("variant,schedule", [
    ("min-sum", "parallel"), ("min-sum", "serial"),
    ("sum-product", "parallel"), ("sum-product", "serial")])
def test_single_qubit_errors_decoded(toric3, variant, schedule):
    h = toric3.hx
    cfg = BpConfig(variant=variant, schedule=schedule)
    for q in range(0, h.cols, 7):
        e = np.zeros(h.cols, dtype=np.uint8)
        e[q] = 1
        s = gf2.mat_vec(h, e)
        _, hard, converged = bp_decode(h, s, cfg)
        assert converged
        assert (gf2.mat_vec(h, hard) == s).all()


def test_osd_always_satisfies_syndrome(toric3):
    h = toric3.hx
    rng = np.random.default_rng(0)
    for order in (0, 2):
        cfg = OsdConfig(order=order, sweep_bits=8)
        for _ in range(50):
            e = (rng.random(h.cols) < 0.08).astype(np.uint8)
            s = gf2.mat_vec(h, e)
            soft = rng.normal(0, 1, h.cols)
            r = osd_post(h, s, soft, cfg)
            assert (gf2.mat_vec(h, r) == s).all()


def test_osd_higher_order_never_heavier(toric3):
    h = toric3.hx
    rng = np.random.default_rng(1)
    for _ in range(30):
        e = (rng.random(h.cols) < 0.05).astype(np.uint8)
        s = gf2.mat_vec(h, e)
        soft = rng.normal(0, 1, h.cols)
        w0 = osd_post(h, s, soft, OsdConfig(order=0)).sum()
        w2 = osd_post(h, s, soft, OsdConfig(order=2, sweep_bits=10)).sum()
        assert w2 <= w0


def test_unsatisfiable_syndrome_raises():
    h = SparseBitMatrix.from_dense([[1, 1, 0], [1, 1, 0]])
    with pytest.raises(UnsatisfiableSyndromeError):
        osd_post(h, [1, 0], np.zeros(3), OsdConfig())
    with pytest.raises(UnsatisfiableSyndromeError):
        bp_osd_decode(h, [1, 0], BpConfig(max_iters=3), OsdConfig())


def test_bp_osd_determinism(toric3):
    h = toric3.hx
    rng = np.random.default_rng(2)
    e = (rng.random(h.cols) < 0.1).astype(np.uint8)
    s = gf2.mat_vec(h, e)
    r1 = bp_osd_decode(h, s, BpConfig(), OsdConfig(order=2))
    r2 = bp_osd_decode(h, s, BpConfig(), OsdConfig(order=2))
    assert (r1 == r2).all()


def test_reliability_order_ties_by_index():
    soft = np.array([0.5, -1.0, 0.5, -1.0])
    order = bposd._reliability_order(soft)
    assert order.tolist() == [1, 3, 0, 2]
