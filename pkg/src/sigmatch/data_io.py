"""Department datasets, configuration files, and run artifacts.

Departments come either from a synthetic generator (smooth prestige profile
over rank plus seeded noise) or from a CSV with peer-assessment scores that
get min-max mapped to prestige. Run outputs follow a manifest-first layout:
out/<run-id>/manifest.json is written before anything else, then
metrics.csv, summary.json, and optional per-department diagnostics.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .mechanisms import MechanismSpec
from .metrics import write_metrics_csv
from .model import (
    STREAM_GENERATOR,
    STREAM_WEIGHTS,
    ConfigError,
    DepartmentProfile,
    MarketConfig,
    department_tiers,
    rng_stream,
)

__all__ = [
    "DataFormatError",
    "DepartmentRow",
    "generate_departments",
    "write_departments_csv",
    "load_departments",
    "department_profiles",
    "load_config",
    "canonical_json",
    "make_manifest",
    "prepare_run_dir",
    "write_results",
    "write_run_outputs",
    "write_diagnostics",
]

_REGIONS = ("NE", "MW", "S", "W")
_FIXED_COLUMNS = ("id", "name", "peer_score", "region")

# Dirichlet concentration for department utility weights. Committees weigh
# the quality dimensions with real heterogeneity (flat concentration); the
# shared quality scale is what concentrates interviews when no preference
# information is disclosed.
WEIGHT_CONSENSUS = 1.0


class DataFormatError(ValueError):
    """A department CSV failed validation; the message names row and column."""


@dataclass(frozen=True)
class DepartmentRow:
    dept_id: int
    name: str
    peer_score: float
    region: str
    attributes: np.ndarray


def generate_departments(m: int, p_d: int, seed: int) -> list[DepartmentRow]:
    """Synthetic roster: prestige linear in rank, perturbed, then re-sorted.

    Peer scores land on a 2..5 scale so the file reads like survey data;
    prestige is recovered downstream by min-max over the file, which undoes
    any monotone rescaling.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    rng = rng_stream(seed, STREAM_GENERATOR)
    if m == 1:
        norm = np.array([1.0])
    else:
        base = 1.0 - np.arange(m) / (m - 1)
        noisy = base + 0.01 * rng.standard_normal(m)
        noisy = np.sort(noisy)[::-1]
        norm = (noisy - noisy[-1]) / (noisy[0] - noisy[-1])
    attrs = rng.random((m, p_d))
    return [
        DepartmentRow(
            dept_id=i + 1,
            name=f"Dept {i + 1:03d}",
            peer_score=float(2.0 + 3.0 * norm[i]),
            region=_REGIONS[i % len(_REGIONS)],
            attributes=attrs[i],
        )
        for i in range(m)
    ]


def write_departments_csv(rows: list[DepartmentRow], path) -> None:
    p_d = rows[0].attributes.size if rows else 0
    header = list(_FIXED_COLUMNS) + [f"attr_{k + 1}" for k in range(p_d)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow(
                [r.dept_id, r.name, repr(float(r.peer_score)), r.region]
                + [repr(float(a)) for a in r.attributes]
            )


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataFormatError(f"row {row}, column {column}: not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise DataFormatError(f"row {row}, column {column}: not finite: {cell!r}")
    return value


def load_departments(path) -> list[DepartmentRow]:
    """Read and validate a department CSV.

    Row numbers in error messages are 1-based data rows (the header is row
    0). Attribute columns must already be in [0, 1].
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file: no header row") from None
        for col in _FIXED_COLUMNS:
            if col not in header:
                raise DataFormatError(f"missing column: {col}")
        attr_cols = [c for c in header if c not in _FIXED_COLUMNS]
        idx = {c: header.index(c) for c in header}
        rows: list[DepartmentRow] = []
        seen_ids: set[int] = set()
        for rownum, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataFormatError(
                    f"row {rownum}: expected {len(header)} cells, got {len(record)}"
                )
            try:
                dept_id = int(record[idx["id"]])
            except ValueError:
                raise DataFormatError(
                    f"row {rownum}, column id: not an integer: {record[idx['id']]!r}"
                ) from None
            if dept_id in seen_ids:
                raise DataFormatError(f"row {rownum}, column id: duplicate id {dept_id}")
            seen_ids.add(dept_id)
            peer = _parse_float(record[idx["peer_score"]], rownum, "peer_score")
            attrs = np.empty(len(attr_cols))
            for k, col in enumerate(attr_cols):
                val = _parse_float(record[idx[col]], rownum, col)
                if not 0.0 <= val <= 1.0:
                    raise DataFormatError(f"row {rownum}, column {col}: outside [0, 1]: {val}")
                attrs[k] = val
            rows.append(
                DepartmentRow(
                    dept_id=dept_id,
                    name=record[idx["name"]],
                    peer_score=peer,
                    region=record[idx["region"]],
                    attributes=attrs,
                )
            )
    if not rows:
        raise DataFormatError("empty file: no data rows")
    return rows


def department_profiles(rows: list[DepartmentRow] | None, config: MarketConfig) -> list[DepartmentProfile]:
    """Build simulation-ready profiles: prestige by min-max, seeded utility
    weights, tier assignment, default interview capacity."""
    if rows is None:
        rows = generate_departments(config.m, config.p_d, config.seed)
    if len(rows) != config.m:
        raise ConfigError(f"dataset has {len(rows)} departments but config.m = {config.m}")
    for r in rows:
        if r.attributes.size != config.p_d:
            raise ConfigError(
                f"department {r.dept_id} has {r.attributes.size} attributes but config.p_d = {config.p_d}"
            )
    peers = np.array([r.peer_score for r in rows])
    if len(rows) == 1:
        prestige = np.array([1.0])
    else:
        span = peers.max() - peers.min()
        if span <= 0:
            raise DataFormatError("peer scores are constant; prestige mapping is degenerate")
        prestige = (peers - peers.min()) / span
    tiers = department_tiers(prestige, config.tier_boundaries)
    weights = rng_stream(config.seed, 0, 0, STREAM_WEIGHTS).dirichlet(
        np.full(config.p_v, WEIGHT_CONSENSUS), size=config.m
    )
    return [
        DepartmentProfile(
            dept_id=r.dept_id,
            name=r.name,
            prestige=float(prestige[i]),
            attributes=np.asarray(r.attributes, dtype=float),
            utility_weights=weights[i],
            capacity=config.capacity_default,
            tier=int(tiers[i]),
        )
        for i, r in enumerate(rows)
    ]


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(MarketConfig)}


def load_config(path) -> MarketConfig:
    """Read a TOML config whose keys mirror MarketConfig fields.

    Keys may sit at top level or inside any one level of sections; unknown
    keys are rejected rather than ignored.
    """
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    flat: dict = {}
    for key, value in data.items():
        if isinstance(value, dict):
            for sub, subval in value.items():
                if sub in flat:
                    raise ConfigError(f"duplicate config key: {sub}")
                flat[sub] = subval
        else:
            if key in flat:
                raise ConfigError(f"duplicate config key: {key}")
            flat[key] = value
    unknown = sorted(set(flat) - set(_CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "tier_boundaries" in flat:
        flat["tier_boundaries"] = tuple(int(b) for b in flat["tier_boundaries"])
    return MarketConfig(**flat)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def make_manifest(
    config: MarketConfig,
    arms: list[MechanismSpec],
    command: str,
    dataset: str = "synthetic",
) -> dict:
    from . import __version__

    manifest = {
        "command": command,
        "version": __version__,
        "dataset": dataset,
        "config": {k: _jsonable(v) for k, v in dataclasses.asdict(config).items()},
        "arms": [{k: _jsonable(v) for k, v in dataclasses.asdict(a).items()} for a in arms],
    }
    manifest["run_id"] = hashlib.sha256(canonical_json(manifest).encode("utf-8")).hexdigest()[:16]
    return manifest


def prepare_run_dir(out_dir, manifest: dict) -> str:
    """Create out/<run-id>/ and persist the manifest before anything else."""
    run_dir = os.path.join(out_dir, manifest["run_id"])
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(canonical_json(manifest) + "\n")
    return run_dir


def write_results(run_dir: str, rows, summary: dict) -> None:
    write_metrics_csv(rows, os.path.join(run_dir, "metrics.csv"))
    with open(os.path.join(run_dir, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(canonical_json(summary) + "\n")


def write_run_outputs(out_dir, manifest: dict, rows, summary: dict) -> str:
    """Manifest-first one-shot: prepare the run directory, then write data."""
    run_dir = prepare_run_dir(out_dir, manifest)
    write_results(run_dir, rows, summary)
    return run_dir


def write_diagnostics(run_dir: str, rep: int, outcome) -> list[str]:
    """Per-department ranking dumps: candidate, score, bound, selected."""
    if not outcome.diagnostics:
        return []
    diag_dir = os.path.join(run_dir, "diagnostics")
    os.makedirs(diag_dir, exist_ok=True)
    written = []
    for j in sorted(outcome.diagnostics):
        d = outcome.diagnostics[j]
        name = f"rep{rep}_year{outcome.year}_dept{j:03d}.csv"
        path = os.path.join(diag_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("cand_id,u_hat,rank_lower,included\n")
            for t in range(d["cand_ids"].size):
                fh.write(
                    f"{int(d['cand_ids'][t])},{repr(float(d['u_hat'][t]))},"
                    f"{int(d['rank_lower'][t])},{int(d['included'][t])}\n"
                )
        written.append(path)
    return written
