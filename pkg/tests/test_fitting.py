import math

import numpy as np
import pytest

from qec3d import fitting
from qec3d.fitting import FitError


def synth_threshold(rng, p_th=0.216, mu=1.04, coeffs=(0.12, 0.9, 1.4),
                    noise=0.003):
    rows = []
    for L in (4, 5, 6, 7):
        for p in np.linspace(0.18, 0.25, 8):
            x = (p - p_th) * L ** (1 / mu)
            y = coeffs[0] + coeffs[1] * x + coeffs[2] * x * x
            rows.append((L, p, y + rng.normal(0, noise), 0.005))
    return rows


def test_threshold_recovers_planted():
    rng = np.random.default_rng(3)
    r = fitting.fit_threshold(synth_threshold(rng), bootstrap=30)
    assert abs(r.parameters["p_th"] - 0.216) / 0.216 < 0.02
    assert abs(r.parameters["mu"] - 1.04) / 1.04 < 0.05
    assert r.stderr["p_th"] > 0


def test_threshold_weighted_variant():
    rng = np.random.default_rng(4)
    r = fitting.fit_threshold(synth_threshold(rng), weighted=True,
                              bootstrap=10)
    assert abs(r.parameters["p_th"] - 0.216) / 0.216 < 0.02


def test_threshold_underdetermined():
    with pytest.raises(FitError):
        fitting.fit_threshold([(4, 0.2, 0.1), (4, 0.21, 0.2)])
    with pytest.raises(FitError):
        fitting.fit_threshold([(4, 0.2, 0.1, 0.0)] * 8, weighted=True)


def test_sustainable_recovers_planted():
    p_sus, gamma, p0 = 0.0308, 3.23, 0.216
    rng = np.random.default_rng(5)
    Ns = np.array([0, 1, 2, 4, 8, 16], dtype=float)
    pth = p_sus * (1 - (1 - p0 / p_sus) * np.exp(-gamma * Ns))
    pth += rng.normal(0, 1e-4, len(Ns))
    pth[0] = p0
    r = fitting.fit_sustainable(list(zip(Ns, pth)), bootstrap=30)
    assert abs(r.parameters["p_sus"] - p_sus) / p_sus < 0.02
    assert abs(r.parameters["gamma"] - gamma) / gamma < 0.05
    assert r.parameters["p_th0"] == p0
    assert r.stderr["p_th0"] == 0.0  # pinned, not fitted


def test_sustainable_requires_n0():
    with pytest.raises(FitError):
        fitting.fit_sustainable([(1, 0.1), (2, 0.08), (4, 0.05)])


def test_scaling_recovers_planted():
    alpha, beta, p_th = 0.546, 1.91, 0.216
    rng = np.random.default_rng(6)
    rows = []
    for L in (3, 5, 7, 9):
        logf = -0.2 * L
        for p in (0.01, 0.015, 0.02, 0.03):
            logp = logf + alpha * L ** beta * math.log(p / p_th)
            rows.append((L, p, math.exp(logp + rng.normal(0, 0.02))))
    r = fitting.fit_scaling(rows, p_th=p_th, bootstrap=50)
    assert abs(r.parameters["alpha"] - alpha) / alpha < 0.05
    assert abs(r.parameters["beta"] - beta) / beta < 0.05


def test_scaling_parity_filter():
    rng = np.random.default_rng(7)
    rows = []
    for L in (3, 4, 5, 6, 7, 8, 9):
        for p in (0.01, 0.02, 0.03):
            rows.append((L, p, math.exp(
                -0.1 * L + 0.5 * L ** 1.9 * math.log(p / 0.2)
                + rng.normal(0, 0.01))))
    r_odd = fitting.fit_scaling(rows, p_th=0.2, parity="odd", bootstrap=5)
    assert r_odd.n_points == 12  # L in {3, 5, 7, 9}
    with pytest.raises(FitError):
        fitting.fit_scaling(rows, p_th=0.2, parity="sideways")


def test_scaling_rejects_above_threshold_data():
    rows = [(L, p, 0.5) for L in (3, 5, 7) for p in (0.01, 0.02)]
    with pytest.raises(FitError):
        fitting.fit_scaling(rows, p_th=0.2)


def test_fit_result_json():
    rng = np.random.default_rng(8)
    r = fitting.fit_threshold(synth_threshold(rng), bootstrap=5)
    d = r.to_json_dict()
    assert d["kind"] == "threshold"
    assert d["schema_version"] == 1
    assert set(d["parameters"]) == {"p_th", "mu", "a0", "a1", "a2"}
