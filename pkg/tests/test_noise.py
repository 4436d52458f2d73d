import numpy as np
import pytest

from qec3d import noise
from qec3d.noise import NoiseModel, RngStream


def test_noise_model_validation():
    NoiseModel(0.0, 1.0)
    with pytest.raises(ValueError):
        NoiseModel(-0.1, 0.5)
    with pytest.raises(ValueError):
        NoiseModel(0.5, 1.5)


def test_stream_determinism():
    a = noise.sample_qubit_error(1000, 0.3, RngStream(42, trial=7))
    b = noise.sample_qubit_error(1000, 0.3, RngStream(42, trial=7))
    assert (a == b).all()


def test_stream_separation():
    base = RngStream(42, trial=7)
    draws = [
        noise.sample_qubit_error(200, 0.3, base.at(0, noise.PHASE_QUBIT)),
        noise.sample_qubit_error(200, 0.3, base.at(0, noise.PHASE_SYNDROME)),
        noise.sample_qubit_error(200, 0.3, base.at(1, noise.PHASE_QUBIT)),
        noise.sample_qubit_error(200, 0.3, RngStream(42, trial=8)),
        noise.sample_qubit_error(200, 0.3, RngStream(43, trial=7)),
    ]
    for i in range(len(draws)):
        for j in range(i + 1, len(draws)):
            assert (draws[i] != draws[j]).any(), (i, j)


def test_exact_endpoints():
    s = RngStream(0, 0)
    assert noise.sample_qubit_error(50, 0.0, s).sum() == 0
    assert noise.sample_qubit_error(50, 1.0, s).sum() == 50
    assert noise.sample_syndrome_error(10, 0.0, s).sum() == 0


def test_empirical_rate():
    draws = noise.sample_qubit_error(200_000, 0.1, RngStream(1, 0))
    assert abs(draws.mean() - 0.1) < 0.005


def test_dtype_and_support():
    v = noise.sample_syndrome_error(64, 0.5, RngStream(9, 3))
    assert v.dtype == np.uint8
    assert set(np.unique(v)) <= {0, 1}
