"""Deterministic Monte Carlo campaigns over (L, p, q, N) grids.

Every trial draws from a counter-based stream keyed by (master seed, grid
point, trial index), so results are a pure function of the campaign spec.
Early stopping happens only at fixed chunk boundaries inspected in chunk
order, which makes the outcome byte-identical for any thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from qec3d import gf2, single_shot
from qec3d.noise import NoiseModel, RngStream
from qec3d.product_code import ProductCode
from qec3d.single_shot import (CAUSE_LOGICAL, CAUSE_METACODE,
                               CAUSE_UNMATCHABLE, ProtocolConfig)

CSV_COLUMNS = ("L", "p", "q", "N", "trials", "failures", "p_fail", "ci95",
               "cause_logical", "cause_metacode", "cause_unmatchable")

CHUNK_SIZE = 50

Q_RULES = ("q=p", "fixed", "zero")


def wilson_free_ci95(p_fail: float, trials: int) -> float:
    """Normal-approximation 95% half-width 1.96 sqrt(p(1-p)/n)."""
    if trials <= 0:
        return 0.0
    return 1.96 * math.sqrt(p_fail * (1.0 - p_fail) / trials)


@dataclass(frozen=True)
class GridPoint:
    L: int
    p: float
    q: float
    N: int


@dataclass(frozen=True)
class CampaignSpec:
    family: str  # code family label resolved by the caller's factory
    Ls: tuple[int, ...]
    ps: tuple[float, ...]
    Ns: tuple[int, ...]
    q_rule: str = "q=p"
    q_fixed: float = 0.0
    strategy: str = "mwpm_bposd"
    trials: int = 1000
    min_failures: int = 25  # early stop once reached at a chunk boundary
    master_seed: int = 0
    trial_offset: int = 0
    protocol_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.q_rule not in Q_RULES:
            raise ValueError(f"unknown q rule {self.q_rule!r}")
        if self.strategy not in single_shot.STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.min_failures < 1:
            raise ValueError("min_failures must be >= 1")

    def q_for(self, p: float) -> float:
        if self.q_rule == "q=p":
            return p
        if self.q_rule == "fixed":
            return self.q_fixed
        return 0.0

    def grid(self) -> list[GridPoint]:
        return [GridPoint(L=L, p=p, q=self.q_for(p), N=N)
                for L in self.Ls for p in self.ps for N in self.Ns]


@dataclass(frozen=True)
class PointResult:
    point: GridPoint
    trials: int
    failures: int
    cause_logical: int
    cause_metacode: int
    cause_unmatchable: int

    @property
    def p_fail(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def ci95(self) -> float:
        return wilson_free_ci95(self.p_fail, self.trials)

    def merged_with(self, other: "PointResult") -> "PointResult":
        if other.point != self.point:
            raise ValueError("cannot merge results for different grid points")
        return PointResult(
            self.point, self.trials + other.trials,
            self.failures + other.failures,
            self.cause_logical + other.cause_logical,
            self.cause_metacode + other.cause_metacode,
            self.cause_unmatchable + other.cause_unmatchable)


@dataclass(frozen=True)
class Dataset:
    spec: CampaignSpec
    results: tuple[PointResult, ...]


def _point_seed(master_seed: int, pt: GridPoint) -> int:
    """A per-point 64-bit seed, a pure function of the point parameters
    (grid enumeration order does not matter)."""
    key = (pt.L, pt.N, int(round(pt.p * 10 ** 12)),
           int(round(pt.q * 10 ** 12)))
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def protocol_for(spec: CampaignSpec, pt: GridPoint) -> ProtocolConfig:
    cfg = ProtocolConfig(n_cycles=pt.N, strategy=spec.strategy,
                         noise=NoiseModel(p=pt.p, q=pt.q))
    if spec.protocol_overrides:
        cfg = replace(cfg, **spec.protocol_overrides)
    return cfg


def run_point(code: ProductCode, spec: CampaignSpec, pt: GridPoint,
              threads: int = 1,
              progress: Optional[Callable[[int, int], None]] = None
              ) -> PointResult:
    """All trials for one grid point, with deterministic early stopping."""
    cfg = protocol_for(spec, pt)
    seed = _point_seed(spec.master_seed, pt)

    def run_chunk(start: int, stop: int) -> list[single_shot.TrialOutcome]:
        return [single_shot.run_trial(
                    code, cfg, RngStream(seed, spec.trial_offset + t))
                for t in range(start, stop)]

    bounds = [(a, min(a + CHUNK_SIZE, spec.trials))
              for a in range(0, spec.trials, CHUNK_SIZE)]
    trials = failures = 0
    causes = {CAUSE_LOGICAL: 0, CAUSE_METACODE: 0, CAUSE_UNMATCHABLE: 0}

    def absorb(outcomes) -> None:
        nonlocal trials, failures
        for out in outcomes:
            trials += 1
            if not out.success:
                failures += 1
                causes[out.cause] += 1

    if threads <= 1:
        for a, b in bounds:
            absorb(run_chunk(a, b))
            if progress:
                progress(trials, failures)
            if failures >= spec.min_failures:
                break
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            i = 0
            while i < len(bounds):
                wave = bounds[i:i + threads]
                futures = [pool.submit(run_chunk, a, b) for a, b in wave]
                stop = False
                # inspect in chunk order: later chunks of the wave are
                # discarded once the stop rule fires, so the counts match
                # a sequential run exactly
                for fut in futures:
                    if stop:
                        fut.result()
                        continue
                    absorb(fut.result())
                    if progress:
                        progress(trials, failures)
                    if failures >= spec.min_failures:
                        stop = True
                if stop:
                    break
                i += threads
    return PointResult(pt, trials, failures, causes[CAUSE_LOGICAL],
                       causes[CAUSE_METACODE], causes[CAUSE_UNMATCHABLE])


def run_campaign(code_factory: Callable[[int], ProductCode],
                 spec: CampaignSpec, threads: int = 1,
                 progress: Optional[Callable[[GridPoint, PointResult],
                                             None]] = None) -> Dataset:
    results = []
    codes: dict[int, ProductCode] = {}
    for pt in spec.grid():
        if pt.L not in codes:
            codes[pt.L] = code_factory(pt.L)
        res = run_point(codes[pt.L], spec, pt, threads=threads)
        if progress:
            progress(pt, res)
        results.append(res)
    return Dataset(spec=spec, results=tuple(results))


def merge_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Pool trial counts point-by-point.  The two runs must agree on
    everything except trial ranges (use trial_offset to keep them
    disjoint)."""
    for name in ("family", "strategy", "q_rule", "q_fixed", "master_seed"):
        if getattr(a.spec, name) != getattr(b.spec, name):
            raise ValueError(f"datasets disagree on {name}")
    pts_a = {r.point: r for r in a.results}
    merged = []
    seen = set()
    for r in b.results:
        if r.point in pts_a:
            merged.append(pts_a[r.point].merged_with(r))
        else:
            merged.append(r)
        seen.add(r.point)
    for r in a.results:
        if r.point not in seen:
            merged.append(r)
    merged.sort(key=lambda r: (r.point.L, r.point.p, r.point.q, r.point.N))
    return Dataset(spec=a.spec, results=tuple(merged))


# ---------------------------------------------------------------------------
# serialization


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in ds.results:
        pt = r.point
        w.writerow([_fmt(v) for v in (
            pt.L, pt.p, pt.q, pt.N, r.trials, r.failures, r.p_fail, r.ci95,
            r.cause_logical, r.cause_metacode, r.cause_unmatchable)])
    return buf.getvalue()


def dataset_to_json_dict(ds: Dataset) -> dict:
    spec = ds.spec
    return {
        "schema_version": gf2.SCHEMA_VERSION,
        "spec": {
            "family": spec.family, "Ls": list(spec.Ls),
            "ps": list(spec.ps), "Ns": list(spec.Ns),
            "q_rule": spec.q_rule, "q_fixed": spec.q_fixed,
            "strategy": spec.strategy, "trials": spec.trials,
            "min_failures": spec.min_failures,
            "master_seed": spec.master_seed,
            "trial_offset": spec.trial_offset,
            "protocol_overrides": dict(spec.protocol_overrides),
        },
        "results": [{
            "L": r.point.L, "p": r.point.p, "q": r.point.q, "N": r.point.N,
            "trials": r.trials, "failures": r.failures,
            "p_fail": r.p_fail, "ci95": r.ci95,
            "cause_logical": r.cause_logical,
            "cause_metacode": r.cause_metacode,
            "cause_unmatchable": r.cause_unmatchable,
        } for r in ds.results],
    }


def dataset_from_json_dict(d: dict) -> Dataset:
    if d.get("schema_version") != gf2.SCHEMA_VERSION:
        raise ValueError("unsupported schema version")
    s = d["spec"]
    spec = CampaignSpec(
        family=s["family"], Ls=tuple(s["Ls"]), ps=tuple(s["ps"]),
        Ns=tuple(s["Ns"]), q_rule=s["q_rule"], q_fixed=s["q_fixed"],
        strategy=s["strategy"], trials=s["trials"],
        min_failures=s["min_failures"], master_seed=s["master_seed"],
        trial_offset=s["trial_offset"],
        protocol_overrides=dict(s.get("protocol_overrides", {})))
    results = tuple(
        PointResult(GridPoint(r["L"], r["p"], r["q"], r["N"]),
                    r["trials"], r["failures"], r["cause_logical"],
                    r["cause_metacode"], r["cause_unmatchable"])
        for r in d["results"])
    return Dataset(spec=spec, results=results)


def save_dataset(ds: Dataset, path_base: str) -> None:
    """Write <base>.csv and <base>.json."""
    with open(path_base + ".csv", "w") as fh:
        fh.write(dataset_to_csv(ds))
    with open(path_base + ".json", "w") as fh:
        json.dump(dataset_to_json_dict(ds), fh, indent=1)
        fh.write("\n")


def load_dataset(path_json: str) -> Dataset:
    with open(path_json) as fh:
        return dataset_from_json_dict(json.load(fh))
