import numpy as np
import pytest

from qec3d import gf2, single_shot
from qec3d import product_code as pc
from qec3d.bposd import BpConfig, OsdConfig
from qec3d.noise import NoiseModel, RngStream
from qec3d.single_shot import (CAUSE_LOGICAL, ProtocolConfig, is_stabiliser,
                               logical_x_generators, run_trial)


@pytest.fixture(scope="module")
def toric2():
    return pc.build_product_code(*pc.toric_seeds(2))


@pytest.fixture(scope="module")
def toric3():
    return pc.build_product_code(*pc.toric_seeds(3))


def test_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(n_cycles=-1, strategy="bposd_x2",
                       noise=NoiseModel(0, 0))
    with pytest.raises(ValueError):
        ProtocolConfig(n_cycles=1, strategy="bogus", noise=NoiseModel(0, 0))


def test_logical_generators(toric3):
    lx = logical_x_generators(toric3)
    assert lx.rows == toric3.k
    # logicals commute with the Z-stabilisers
    assert gf2.is_zero(gf2.mat_mul(lx, gf2.transpose(toric3.hz)))


def test_is_stabiliser_contract(toric3):
    n = toric3.n
    assert is_stabiliser(toric3, np.zeros(n, dtype=np.uint8))
    # every row of hz is a Z-stabiliser
    for sup in toric3.hz.row_supports[:10]:
        e = np.zeros(n, dtype=np.uint8)
        e[list(sup)] = 1
        assert is_stabiliser(toric3, e)
    # a single flip is never a stabiliser (distance > 1)
    e = np.zeros(n, dtype=np.uint8)
    e[0] = 1
    assert not is_stabiliser(toric3, e)


@pytest.mark.parametrize("strategy", single_shot.STRATEGIES)
def test_noiseless_protocol_is_identity(toric2, strategy):
    cfg = ProtocolConfig(n_cycles=3, strategy=strategy,
                         noise=NoiseModel(0.0, 0.0))
    out = run_trial(toric2, cfg, RngStream(0, 0))
    assert out.success
    assert out.residual_weight_trace == (0, 0, 0)
    assert out.invalid_syndrome_events == 0


@pytest.mark.parametrize("strategy", ["mwpm_bposd", "bposd_x2"])
def test_deterministic_outcomes(toric2, strategy):
    cfg = ProtocolConfig(n_cycles=4, strategy=strategy,
                         noise=NoiseModel(0.05, 0.05))
    a = run_trial(toric2, cfg, RngStream(7, 3))
    b = run_trial(toric2, cfg, RngStream(7, 3))
    assert a == b


def test_low_noise_mostly_succeeds(toric3):
    cfg = ProtocolConfig(n_cycles=2, strategy="bposd_x2",
                         noise=NoiseModel(0.005, 0.005))
    wins = sum(run_trial(toric3, cfg, RngStream(11, t)).success
               for t in range(100))
    assert wins >= 95


def test_high_noise_fails_with_logical_cause(toric2):
    cfg = ProtocolConfig(n_cycles=2, strategy="code_capacity",
                         noise=NoiseModel(0.5, 0.0))
    causes = set()
    for t in range(50):
        out = run_trial(toric2, cfg, RngStream(13, t))
        if not out.success:
            causes.add(out.cause)
    assert causes == {CAUSE_LOGICAL}


def test_invalid_syndrome_detection(toric2):
    # a vector passing the metachecks but outside im(hx): an fm column
    fm_col = toric2.fm.column_supports()[0]
    s = np.zeros(toric2.hx.rows, dtype=np.uint8)
    s[list(fm_col)] = 1
    assert not gf2.mat_vec(toric2.meta, s).any()
    assert single_shot.is_invalid_syndrome(toric2, s)
    assert not single_shot.is_invalid_syndrome(
        toric2, np.zeros(toric2.hx.rows, dtype=np.uint8))


def test_failure_mode_repair_restores_validity(toric2):
    fm_col = toric2.fm.column_supports()[0]
    s = np.zeros(toric2.hx.rows, dtype=np.uint8)
    s[list(fm_col)] = 1
    m = gf2.mat_vec(toric2.meta, s)
    r = single_shot.failure_mode_repair(toric2, s, m, BpConfig(),
                                        OsdConfig(order=2))
    fixed = s ^ r
    assert not gf2.mat_vec(toric2.meta, fixed).any()
    assert not single_shot.is_invalid_syndrome(toric2, fixed)


def test_subroutine_counter_increments(toric2):
    cfg = ProtocolConfig(n_cycles=6, strategy="bposd_x2",
                         noise=NoiseModel(0.05, 0.25))
    events = sum(run_trial(toric2, cfg, RngStream(17, t))
                 .invalid_syndrome_events for t in range(50))
    assert events > 0  # heavy syndrome noise must trigger the subroutine
