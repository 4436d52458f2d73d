"""Command-line interface.

Subcommands: build-code, simulate, fit, confinement-check, lattice-export.
Exit codes: 0 success, 1 usage/input error, 2 internal consistency
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional, Sequence

from qec3d import confinement, fitting, gf2, lattice, montecarlo
from qec3d import product_code as pc

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


# ---------------------------------------------------------------------------
# code resolution


def _seeds_from_json(path: str):
    with open(path) as fh:
        d = json.load(fh)
    if d.get("schema_version") != gf2.SCHEMA_VERSION:
        raise UsageError(f"{path}: unsupported schema version")
    try:
        mats = [gf2.SparseBitMatrix.from_json_dict(d[k]) for k in "abc"]
    except KeyError as exc:
        raise UsageError(f"{path}: missing seed matrix {exc}") from None
    return tuple(pc.ClassicalSeed.from_matrix(m) for m in mats)


def resolve_code(spec: str) -> pc.ProductCode:
    """A code from ``builtin:<family>:<size>``, a saved code JSON, or a
    seeds JSON holding the three matrices a, b, c."""
    if spec.startswith("builtin:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise UsageError("builtin spec must be builtin:<family>:<size>")
        family, size = parts[1], parts[2]
        try:
            size = int(size)
        except ValueError:
            raise UsageError(f"bad size {parts[2]!r}") from None
        if family == "toric":
            return pc.build_product_code(*pc.toric_seeds(size))
        if family == "surface":
            return pc.build_product_code(*pc.surface_seeds(size))
        if family == "table1":
            return pc.build_product_code(*pc.table_family_seeds(size))
        raise UsageError(f"unknown builtin family {family!r}")
    with open(spec) as fh:
        d = json.load(fh)
    if "hx" in d:  # a saved code export
        return pc.load_code(spec)
    return pc.build_product_code(*_seeds_from_json(spec))


def code_factory_for(spec_str: str):
    """Map L -> code for simulate grids; the builtin size field is
    replaced by each grid L."""
    if spec_str.startswith("builtin:"):
        family = spec_str.split(":")[1]
        return lambda L: resolve_code(f"builtin:{family}:{L}")
    code = resolve_code(spec_str)
    return lambda L: code


# ---------------------------------------------------------------------------
# subcommands


def _cmd_build_code(args) -> int:
    code = resolve_code(args.seeds)
    pc.save_code(code, args.out)
    print(f"wrote {args.out}: n={code.n} k={code.k}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    if cfg.pop("schema_version", gf2.SCHEMA_VERSION) != gf2.SCHEMA_VERSION:
        raise UsageError(f"{args.config}: unsupported schema version")
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    try:
        spec = montecarlo.CampaignSpec(
            family=cfg.get("family", args.code),
            Ls=tuple(cfg["Ls"]), ps=tuple(cfg["ps"]),
            Ns=tuple(cfg["Ns"]), q_rule=cfg.get("q_rule", "q=p"),
            q_fixed=cfg.get("q_fixed", 0.0),
            strategy=cfg.get("strategy", "mwpm_bposd"),
            trials=cfg.get("trials", 1000),
            min_failures=cfg.get("min_failures", 25),
            master_seed=cfg.get("master_seed", 0),
            trial_offset=cfg.get("trial_offset", 0),
            protocol_overrides=cfg.get("protocol_overrides", {}))
    except KeyError as exc:
        raise UsageError(f"{args.config}: missing field {exc}") from None
    factory = code_factory_for(args.code)

    def progress(pt, res):
        print(f"L={pt.L} p={pt.p:g} q={pt.q:g} N={pt.N}: "
              f"{res.failures}/{res.trials} failures", flush=True)

    ds = montecarlo.run_campaign(factory, spec, threads=args.threads,
                                 progress=progress)
    montecarlo.save_dataset(ds, args.out)
    print(f"wrote {args.out}.csv and {args.out}.json")
    return EXIT_OK


def _read_table(path: str) -> list[dict]:
    with open(path) as fh:
        if path.endswith(".json"):
            d = json.load(fh)
            return d["results"] if isinstance(d, dict) else d
        return [dict(r) for r in csv.DictReader(fh)]


def _pick(rows: list[dict], names: Sequence[str],
          optional: Sequence[str] = ()) -> list[list[float]]:
    out = []
    for r in rows:
        try:
            vals = [float(r[n]) for n in names]
        except KeyError as exc:
            raise UsageError(f"input is missing column {exc}") from None
        for n in optional:
            if n in r:
                vals.append(float(r[n]))
        out.append(vals)
    return out


def _cmd_fit(args) -> int:
    rows = _read_table(args.input)
    if args.kind == "threshold":
        data = _pick(rows, ("L", "p", "p_fail"),
                     ("ci95",) if args.weighted else ())
        result = fitting.fit_threshold(data, weighted=args.weighted,
                                       bootstrap=args.bootstrap)
    elif args.kind == "sustainable":
        data = _pick(rows, ("N", "p_th"))
        result = fitting.fit_sustainable(data, bootstrap=args.bootstrap)
    else:
        if args.p_th is None:
            raise UsageError("--p-th is required for the scaling fit")
        data = _pick(rows, ("L", "p", "p_fail"))
        result = fitting.fit_scaling(data, p_th=args.p_th,
                                     parity=args.parity,
                                     bootstrap=args.bootstrap)
    with open(args.out, "w") as fh:
        json.dump(result.to_json_dict(), fh, indent=1)
        fh.write("\n")
    print(f"wrote {args.out}: " + " ".join(
        f"{k}={v:.6g}" for k, v in result.parameters.items()))
    return EXIT_OK


def _cmd_confinement_check(args) -> int:
    code = resolve_code(args.code)
    if args.f != "cubic":
        raise UsageError(f"unknown confinement function {args.f!r}")
    report = confinement.check_confinement(code, args.t, confinement.cubic_f,
                                           "x^3/2")
    with open(args.out, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=1)
        fh.write("\n")
    print(f"wrote {args.out}: verified={report.verified}")
    return EXIT_OK if report.verified else EXIT_INTERNAL


def _cmd_lattice_export(args) -> int:
    code = resolve_code(args.code)
    coords = lattice.embed(code)
    lattice.save_lattice(code, coords, args.out)
    print(f"wrote {args.out}: {len(coords.qubits)} qubits")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="qec3d", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-code", help="construct and save a code")
    b.add_argument("--seeds", required=True,
                   help="builtin:<family>:<size> or a seeds/code JSON file")
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_build_code)

    s = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    s.add_argument("--code", required=True,
                   help="builtin:<family>:<size> (size replaced per grid L) "
                        "or a code JSON file")
    s.add_argument("--config", required=True, help="campaign spec JSON")
    s.add_argument("--out", required=True, help="output base path")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=_cmd_simulate)

    f = sub.add_parser("fit", help="fit a campaign dataset")
    f.add_argument("--kind", required=True,
                   choices=("threshold", "sustainable", "scaling"))
    f.add_argument("--in", dest="input", required=True,
                   help="CSV (with header) or JSON table")
    f.add_argument("--out", required=True)
    f.add_argument("--p-th", type=float, default=None,
                   help="threshold used by the scaling fit")
    f.add_argument("--parity", choices=("odd", "even"), default=None)
    f.add_argument("--weighted", action="store_true",
                   help="weight points by 1/ci95^2")
    f.add_argument("--bootstrap", type=int,
                   default=fitting.BOOTSTRAP_SAMPLES)
    f.set_defaults(func=_cmd_fit)

    c = sub.add_parser("confinement-check",
                       help="exhaustive confinement verification")
    c.add_argument("--code", required=True)
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--f", default="cubic")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_confinement_check)

    e = sub.add_parser("lattice-export", help="export the 3D embedding")
    e.add_argument("--code", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_lattice_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, (pc.ConsistencyError, gf2.DimensionError)):
            print(f"internal consistency error: {exc}", file=sys.stderr)
            return EXIT_INTERNAL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except confinement.EnumerationInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
