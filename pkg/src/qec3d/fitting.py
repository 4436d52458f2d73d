"""Fits for threshold crossings, sustainable thresholds, and
below-threshold scaling.

Three procedures:

* ``fit_threshold`` — quadratic finite-size-scaling collapse
  p_fail = a0 + a1 x + a2 x^2 with x = (p - p_th) L^(1/mu); the quadratic
  coefficients are solved linearly inside a Nelder-Mead search over
  (p_th, mu).
* ``fit_sustainable`` — exponential approach of the N-cycle threshold to
  its sustainable value, p_th(N) = p_sus [1 - (1 - p_th(0)/p_sus)
  exp(-gamma N)] with p_th(0) pinned to the N=0 data point.
* ``fit_scaling`` — below-threshold ansatz
  log p_fail = log f(L) + alpha L^beta log(p / p_th), fitted in two
  linear stages (per-L slopes, then a log-log line through the slopes).

Parameter uncertainties come from a seeded residual bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from qec3d import gf2

BOOTSTRAP_SAMPLES = 1000
BOOTSTRAP_SEED = 0

MU_RANGE = (0.5, 2.0)


class FitError(ValueError):
    """The data cannot support the requested fit."""


@dataclass(frozen=True)
class FitResult:
    kind: str
    parameters: dict[str, float]
    stderr: dict[str, float]
    rss: float
    n_points: int
    converged: bool

    def to_json_dict(self) -> dict:
        return {"schema_version": gf2.SCHEMA_VERSION, "kind": self.kind,
                "parameters": dict(self.parameters),
                "stderr": dict(self.stderr), "rss": self.rss,
                "n_points": self.n_points, "converged": self.converged}


def _as_columns(rows: Sequence[Sequence[float]], n: int) -> list[np.ndarray]:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise FitError(f"expected rows of {n} numbers")
    return [arr[:, i] for i in range(n)]


# ---------------------------------------------------------------------------
# threshold crossing (finite-size-scaling collapse)


def _quadratic_solve(L, p, y, w, p_th, mu):
    """Weighted linear least squares for (a0, a1, a2) at fixed (p_th, mu);
    returns (coeffs, rss)."""
    x = (p - p_th) * L ** (1.0 / mu)
    design = np.column_stack([np.ones_like(x), x, x * x])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    resid = y - design @ coef
    return coef, float(np.sum(w * resid * resid))


def _threshold_objective(L, p, y, w):
    p_lo, p_hi = float(p.min()), float(p.max())

    def rss_of(theta):
        p_th, mu = theta
        if not (p_lo <= p_th <= p_hi) or not (MU_RANGE[0] <= mu <= MU_RANGE[1]):
            return 1e18
        return _quadratic_solve(L, p, y, w, p_th, mu)[1]

    return rss_of, (p_lo, p_hi)


def _fit_threshold_point(L, p, y, w, init=None):
    rss_of, (p_lo, p_hi) = _threshold_objective(L, p, y, w)
    if init is not None:
        starts = [init]
    else:
        starts = [(p0, mu0) for p0 in np.linspace(p_lo, p_hi, 7)[1:-1]
                  for mu0 in (0.7, 1.0, 1.5)]
    best = None
    for p0, mu0 in starts:
        res = optimize.minimize(rss_of, [p0, mu0], method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-12,
                                         "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    p_th, mu = best.x
    coef, rss = _quadratic_solve(L, p, y, w, p_th, mu)
    return p_th, mu, coef, rss, bool(best.success)


def fit_threshold(rows: Sequence[Sequence[float]],
                  weighted: bool = False,
                  bootstrap: int = BOOTSTRAP_SAMPLES,
                  seed: int = BOOTSTRAP_SEED) -> FitResult:
    """Fit the crossing point from rows (L, p, p_fail[, ci95]).

    With ``weighted=True`` the optional fourth column weights each point
    by 1/ci95^2 (rows with ci95 = 0 are rejected).
    """
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] not in (3, 4):
        raise FitError("expected rows (L, p, p_fail[, ci95])")
    L, p, y = arr[:, 0], arr[:, 1], arr[:, 2]
    if weighted:
        if arr.shape[1] != 4:
            raise FitError("weighted fit needs a ci95 column")
        ci = arr[:, 3]
        if np.any(ci <= 0):
            raise FitError("weighted fit requires positive ci95 values")
        w = 1.0 / (ci * ci)
    else:
        w = np.ones_like(y)
    if len(np.unique(L)) < 2 or len(arr) < 6:
        raise FitError("threshold fit needs >= 2 sizes and >= 6 points")

    p_th, mu, coef, rss, ok = _fit_threshold_point(L, p, y, w)
    params = {"p_th": float(p_th), "mu": float(mu), "a0": float(coef[0]),
              "a1": float(coef[1]), "a2": float(coef[2])}

    x = (p - p_th) * L ** (1.0 / mu)
    fitted = coef[0] + coef[1] * x + coef[2] * x * x
    resid = y - fitted
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed)))
    samples = {k: [] for k in params}
    for _ in range(bootstrap):
        yb = fitted + rng.choice(resid, size=len(resid), replace=True)
        try:
            pb, mb, cb, _, _ = _fit_threshold_point(L, p, yb, w,
                                                    init=(p_th, mu))
        except Exception:
            continue
        for k, v in zip(("p_th", "mu", "a0", "a1", "a2"),
                        (pb, mb, cb[0], cb[1], cb[2])):
            samples[k].append(v)
    stderr = {k: float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
              for k, v in samples.items()}
    return FitResult("threshold", params, stderr, rss, len(arr), ok)


# ---------------------------------------------------------------------------
# sustainable threshold


def _sustainable_model(N, p_sus, gamma, p0):
    return p_sus * (1.0 - (1.0 - p0 / p_sus) * np.exp(-gamma * N))


def _fit_sustainable_point(N, pth, p0):
    def resid(theta):
        p_sus, gamma = theta
        if p_sus <= 0 or gamma <= 0:
            return np.full_like(pth, 1e6)
        return _sustainable_model(N, p_sus, gamma, p0) - pth

    guess = [max(float(pth.min()), 1e-4), 1.0]
    sol = optimize.least_squares(resid, guess, method="lm", max_nfev=10000)
    return sol.x, float(np.sum(sol.fun ** 2)), bool(sol.success)


def fit_sustainable(rows: Sequence[Sequence[float]],
                    bootstrap: int = BOOTSTRAP_SAMPLES,
                    seed: int = BOOTSTRAP_SEED) -> FitResult:
    """Fit (p_sus, gamma) from rows (N, p_th(N)).  Needs at least three
    distinct N including N = 0; p_th(0) is taken from the data, not
    fitted."""
    N, pth = _as_columns(rows, 2)
    if len(np.unique(N)) < 3 or 0.0 not in N:
        raise FitError("sustainable fit needs >= 3 distinct N including 0")
    p0 = float(pth[N == 0.0][0])
    (p_sus, gamma), rss, ok = _fit_sustainable_point(N, pth, p0)
    params = {"p_sus": float(p_sus), "gamma": float(gamma), "p_th0": p0}

    fitted = _sustainable_model(N, p_sus, gamma, p0)
    resid = pth - fitted
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed)))
    samples = {"p_sus": [], "gamma": []}
    for _ in range(bootstrap):
        yb = fitted + rng.choice(resid, size=len(resid), replace=True)
        try:
            (ps, g), _, _ = _fit_sustainable_point(N, yb, p0)
        except Exception:
            continue
        samples["p_sus"].append(ps)
        samples["gamma"].append(g)
    stderr = {k: float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
              for k, v in samples.items()}
    stderr["p_th0"] = 0.0
    return FitResult("sustainable", params, stderr, rss, len(N), ok)


# ---------------------------------------------------------------------------
# below-threshold scaling


def _linfit(x, y):
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(np.sum(resid * resid))


def _fit_scaling_stages(L, p, y, p_th):
    logy = np.log(y)
    logr = np.log(p / p_th)
    sizes = np.unique(L)
    slopes = []
    rss1 = 0.0
    for size in sizes:
        sel = L == size
        if np.count_nonzero(sel) < 2:
            raise FitError(f"size L={size:g} has fewer than 2 points")
        (icept, slope), r = _linfit(logr[sel], logy[sel])
        if slope <= 0:
            raise FitError(f"non-positive slope at L={size:g}; data is not "
                           "below threshold")
        slopes.append(slope)
        rss1 += r
    (log_alpha, beta), rss2 = _linfit(np.log(sizes), np.log(slopes))
    return math.exp(log_alpha), beta, np.asarray(slopes), sizes, rss1 + rss2


def fit_scaling(rows: Sequence[Sequence[float]], p_th: float,
                parity: Optional[str] = None,
                bootstrap: int = BOOTSTRAP_SAMPLES,
                seed: int = BOOTSTRAP_SEED) -> FitResult:
    """Fit (alpha, beta) from rows (L, p, p_fail) below threshold.

    ``parity`` in {"odd", "even"} restricts the sizes used (odd and even
    sizes can scale differently); None uses all.
    """
    L, p, y = _as_columns(rows, 3)
    if np.any(y <= 0) or np.any(p <= 0) or p_th <= 0:
        raise FitError("scaling fit needs positive p, p_fail and p_th")
    if parity is not None:
        if parity not in ("odd", "even"):
            raise FitError("parity must be 'odd', 'even' or None")
        keep = (L.astype(np.int64) % 2 == 1) == (parity == "odd")
        L, p, y = L[keep], p[keep], y[keep]
    if len(np.unique(L)) < 3:
        raise FitError("scaling fit needs >= 3 sizes")

    alpha, beta, slopes, sizes, rss = _fit_scaling_stages(L, p, y, p_th)
    params = {"alpha": float(alpha), "beta": float(beta)}

    # bootstrap on the stage-2 residuals (the per-size slopes)
    logs = np.log(sizes)
    fitted2 = math.log(alpha) + beta * logs
    resid2 = np.log(slopes) - fitted2
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed)))
    samples = {"alpha": [], "beta": []}
    for _ in range(bootstrap):
        yb = fitted2 + rng.choice(resid2, size=len(resid2), replace=True)
        (la, b), _ = _linfit(logs, yb)
        samples["alpha"].append(math.exp(la))
        samples["beta"].append(b)
    stderr = {k: float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
              for k, v in samples.items()}
    return FitResult("scaling", params, stderr, rss, len(L), True)
