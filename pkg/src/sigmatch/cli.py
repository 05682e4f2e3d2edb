"""Batch command-line surface.

Subcommands:
  simulate            one mechanism/rho arm, full replication set
  sweep-rho           the disclosure-rate grid with shared seeds
  validate-coverage   coverage and exact-selection Monte Carlo suites
  validate-theorems   directional probes for the four theoretical claims
  gen-data            synthetic department CSV

Exit status: 0 on success, 1 when a validation suite fails, 2 on usage,
configuration, or data errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .data_io import (
    DataFormatError,
    DepartmentRow,
    department_profiles,
    generate_departments,
    load_config,
    load_departments,
    make_manifest,
    prepare_run_dir,
    write_departments_csv,
    write_diagnostics,
    write_results,
)
from .engine import Departments, run_burn_in, run_main_years
from .mechanisms import MechanismSpec, misreport_gain_probe
from .metrics import summarize, theorem1_check, theorem4_check, year_rows
from .model import ConfigError, MarketConfig
from .probes import coverage_suite, da_stability_suite, degenerate_reduction_suite, dept_informativeness_probe

__all__ = ["main", "build_parser", "DEFAULT_RHO_GRID"]

DEFAULT_RHO_GRID = (0.0, 0.05, 0.2, 0.5, 0.9, 1.0)

_MECHANISM_NAMES = {
    "questionnaire": "questionnaire",
    "baseline": "baseline",
    "aea": "aea_signals",
    "aea_signals": "aea_signals",
    "da": "deferred_acceptance",
    "deferred_acceptance": "deferred_acceptance",
}

# Small-footprint defaults for validate-theorems when no config is given;
# the directional claims survive the reduced scale and the run stays fast.
_REDUCED_CONFIG = dict(
    m=40, n=120, tier_boundaries=(4, 10, 20), years=6, burn_in_years=10,
    replications=6, B=30, seed=20260819,
)


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML config mirroring MarketConfig fields")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--reps", type=int, help="number of replications")
    p.add_argument("--years", type=int, help="main-phase years per replication")
    p.add_argument("--burn-in-years", type=int, dest="burn_in_years", help="history burn-in years")
    p.add_argument("--rho", type=float, help="questionnaire participation rate")
    p.add_argument("--alpha", type=float, help="rank-confidence level")
    p.add_argument("--bootstrap", type=int, help="bootstrap ensemble size B")
    p.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    p.add_argument(
        "--departments", default="synthetic", metavar="PATH|synthetic",
        help="department CSV path, or 'synthetic' to generate (default)",
    )


def _resolve_config(args, base: MarketConfig | None = None) -> MarketConfig:
    if args.config:
        config = load_config(args.config)
    elif base is not None:
        config = base
    else:
        config = MarketConfig()
    overrides = {}
    for attr, field in (
        ("seed", "seed"),
        ("reps", "replications"),
        ("years", "years"),
        ("burn_in_years", "burn_in_years"),
        ("rho", "rho"),
        ("alpha", "alpha"),
        ("bootstrap", "B"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[field] = value
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _resolve_departments(args, config: MarketConfig) -> tuple[list[DepartmentRow] | None, str, MarketConfig]:
    if args.departments == "synthetic":
        return None, "synthetic", config
    rows = load_departments(args.departments)
    config = dataclasses.replace(config, m=len(rows), p_d=rows[0].attributes.size)
    return rows, str(args.departments), config


def _build_market(args, config: MarketConfig) -> tuple[Departments, str, MarketConfig]:
    rows, dataset, config = _resolve_departments(args, config)
    profiles = department_profiles(rows, config)
    return Departments.from_profiles(profiles), dataset, config


def _run_arms(
    config: MarketConfig,
    arms: list[MechanismSpec],
    departments: Departments,
    collect_diagnostics: bool = False,
):
    rows = []
    diag: list[tuple[int, object]] = []
    need_burn = any(a.kind != "deferred_acceptance" for a in arms) and config.burn_in_years > 0
    for rep in range(config.replications):
        burn = run_burn_in(config, departments, rep) if need_burn else None
        for arm in arms:
            for outcome, _ in run_main_years(
                config, arm, rep, departments, burn, collect_diagnostics
            ):
                rows.extend(year_rows(outcome, rep))
                if collect_diagnostics and outcome.diagnostics:
                    diag.append((rep, outcome))
            print(f"rep {rep + 1}/{config.replications} {arm.label} done", flush=True)
    return rows, diag


def cmd_simulate(args) -> int:
    config = _resolve_config(args)
    departments, dataset, config = _build_market(args, config)
    kind = _MECHANISM_NAMES[args.mechanism]
    rho = config.rho if kind == "questionnaire" else None
    mech = MechanismSpec(kind=kind, rho=rho)
    manifest = make_manifest(config, [mech], command="simulate", dataset=dataset)
    run_dir = prepare_run_dir(args.out, manifest)
    rows, diag = _run_arms(config, [mech], departments, collect_diagnostics=args.diagnostics)
    write_results(run_dir, rows, summarize(rows))
    for rep, outcome in diag:
        write_diagnostics(run_dir, rep, outcome)
    print(run_dir)
    return 0


def cmd_sweep_rho(args) -> int:
    config = _resolve_config(args)
    departments, dataset, config = _build_market(args, config)
    grid = tuple(float(x) for x in args.grid.split(",")) if args.grid else DEFAULT_RHO_GRID
    arms = [MechanismSpec(kind="questionnaire", rho=r) for r in grid]
    for extra in args.arms or []:
        arms.append(MechanismSpec(kind=_MECHANISM_NAMES[extra]))
    manifest = make_manifest(config, arms, command="sweep-rho", dataset=dataset)
    run_dir = prepare_run_dir(args.out, manifest)
    rows, _ = _run_arms(config, arms, departments)
    write_results(run_dir, rows, summarize(rows))
    print(run_dir)
    return 0


def cmd_validate_coverage(args) -> int:
    config = _resolve_config(args)
    report = coverage_suite(
        trials=args.trials, pool=args.pool, k=args.k,
        alpha=config.alpha, B=args.bootstrap or 200, seed=config.seed,
    )
    mismatches = degenerate_reduction_suite(instances=1000, seed=config.seed + 1)
    blocking = da_stability_suite(cases=200, seed=config.seed + 2)
    results = {
        "rank_coverage": report.rank_coverage,
        "topk_coverage": report.topk_coverage,
        "trials": report.trials,
        "alpha": report.alpha,
        "degenerate_mismatches": mismatches,
        "stability_blocking_pairs": blocking,
    }
    ok = report.passes(0.88) and mismatches == 0 and blocking == 0
    results["passed"] = ok
    manifest = make_manifest(config, [], command="validate-coverage", dataset="none")
    run_dir = prepare_run_dir(args.out, manifest)
    with open(os.path.join(run_dir, "coverage.json"), "w", encoding="utf-8") as fh:
        json.dump(results, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"rank coverage {report.rank_coverage:.3f}, top-k coverage {report.topk_coverage:.3f}")
    print(f"degenerate mismatches {mismatches}, stability blocking pairs {blocking}")
    print(run_dir)
    return 0 if ok else 1


def cmd_validate_theorems(args) -> int:
    config = _resolve_config(args, base=MarketConfig(**_REDUCED_CONFIG))
    departments, dataset, config = _build_market(args, config)
    grid = tuple(float(x) for x in args.grid.split(",")) if args.grid else DEFAULT_RHO_GRID
    arms = [MechanismSpec(kind="questionnaire", rho=r) for r in grid]
    manifest = make_manifest(config, arms, command="validate-theorems", dataset=dataset)
    run_dir = prepare_run_dir(args.out, manifest)
    rows, _ = _run_arms(config, arms, departments)
    write_results(run_dir, rows, summarize(rows))

    interior = [r for r in grid if 0.0 < r < 1.0]
    t1 = theorem1_check(rows, interior)
    t1_ok = bool(t1) and all(v["holds"] for v in t1.values())

    probe25 = misreport_gain_probe(n_clones=25, seed=config.seed)
    probe100 = misreport_gain_probe(n_clones=100, seed=config.seed)
    t2_ok = (
        probe25.gain <= probe25.bound + 3 * probe25.se
        and probe100.gain <= probe100.bound + 3 * probe100.se
        and probe100.gain < probe25.gain
    )

    t3 = dept_informativeness_probe(dims=(3, 7, 15), seed=config.seed)
    t3_ok = t3.passes()

    t4 = theorem4_check(rows)
    t4_ok = t4["correlation"] < 0 and t4["p_value"] < 0.05

    results = {
        "theorem1": {repr(r): v for r, v in t1.items()},
        "theorem1_ok": t1_ok,
        "theorem2": {
            "gain_25": probe25.gain, "bound_25": probe25.bound, "se_25": probe25.se,
            "gain_100": probe100.gain, "bound_100": probe100.bound, "se_100": probe100.se,
        },
        "theorem2_ok": t2_ok,
        "theorem3": {
            "labels": list(t3.labels),
            "estimates": [float(x) for x in t3.estimates],
            "step_deltas": [float(x) for x in t3.step_deltas],
            "step_ses": [float(x) for x in t3.step_ses],
        },
        "theorem3_ok": t3_ok,
        "theorem4": t4,
        "theorem4_ok": t4_ok,
    }
    ok = t1_ok and t2_ok and t3_ok and t4_ok
    results["passed"] = ok
    with open(os.path.join(run_dir, "theorems.json"), "w", encoding="utf-8") as fh:
        json.dump(results, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for name in ("theorem1", "theorem2", "theorem3", "theorem4"):
        print(f"{name}: {'ok' if results[name + '_ok'] else 'FAILED'}")
    print(run_dir)
    return 0 if ok else 1


def cmd_gen_data(args) -> int:
    rows = generate_departments(args.m, args.p_d, args.seed if args.seed is not None else 20260819)
    out_path = args.out
    parent = os.path.dirname(out_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_departments_csv(rows, out_path)
    meta = {
        "command": "gen-data", "m": args.m, "p_d": args.p_d,
        "seed": args.seed if args.seed is not None else 20260819,
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(out_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigmatch",
        description="Signaling-questionnaire matching market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one mechanism/rho arm")
    _add_common_args(p)
    p.add_argument(
        "--mechanism", default="questionnaire", choices=sorted(_MECHANISM_NAMES),
        help="mechanism arm (default: questionnaire)",
    )
    p.add_argument("--diagnostics", action="store_true", help="dump per-department ranking tables")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-rho", help="run the disclosure-rate grid with shared seeds")
    _add_common_args(p)
    p.add_argument("--grid", metavar="R1,R2,...", help="comma-separated rho grid (default: 0,0.05,0.2,0.5,0.9,1)")
    p.add_argument(
        "--arms", nargs="*", choices=["baseline", "aea", "da"],
        help="extra comparison arms to append to the grid",
    )
    p.set_defaults(func=cmd_sweep_rho)

    p = sub.add_parser("validate-coverage", help="rank/top-k coverage and exact-selection suites")
    _add_common_args(p)
    p.add_argument("--trials", type=int, default=500, help="coverage trials (default: 500)")
    p.add_argument("--pool", type=int, default=30, help="candidates per synthetic pool (default: 30)")
    p.add_argument("--k", type=int, default=5, help="interview slots (default: 5)")
    p.set_defaults(func=cmd_validate_coverage)

    p = sub.add_parser("validate-theorems", help="directional probes for the four theoretical claims")
    _add_common_args(p)
    p.add_argument("--grid", metavar="R1,R2,...", help="comma-separated rho grid")
    p.set_defaults(func=cmd_validate_theorems)

    p = sub.add_parser("gen-data", help="write a synthetic department CSV")
    p.add_argument("--m", type=int, default=103, help="number of departments (default: 103)")
    p.add_argument("--p-d", type=int, dest="p_d", default=15, help="attribute columns (default: 15)")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--out", default="departments.csv", metavar="PATH", help="output CSV path")
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
