"""Outcome metrics in tidy form.

Every reported quantity is one row per (replication, year, mechanism, rho,
metric, stratum, value). Aggregation is always per-replication first (mean
over years, or sum for count-like metrics), then averaged across
replications with a plain standard error.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "MetricRow",
    "AggregateRecord",
    "METRICS_CSV_HEADER",
    "SUM_OVER_YEARS",
    "year_rows",
    "aggregate",
    "per_replication",
    "write_metrics_csv",
    "read_metrics_csv",
    "summarize",
    "theorem1_check",
    "theorem4_check",
]

METRICS_CSV_HEADER = ("replication", "year", "mechanism", "rho", "metric", "stratum", "value")

# Count-like metrics accumulate over years within a replication; everything
# else is averaged over years.
SUM_OVER_YEARS = frozenset({"hire_count"})


class MetricRow(NamedTuple):
    replication: int
    year: int
    mechanism: str
    rho: float
    metric: str
    stratum: str
    value: float


class AggregateRecord(NamedTuple):
    mechanism: str
    rho: float
    metric: str
    stratum: str
    mean: float
    se: float
    n_reps: int


def year_rows(outcome, rep: int) -> list[MetricRow]:
    """All metric rows for one simulated year.

    Strata with no members are skipped rather than emitted as NaN, so a
    downstream average is always over defined values.
    """
    rows: list[MetricRow] = []

    def add(metric: str, stratum: str, value: float) -> None:
        rows.append(
            MetricRow(rep, outcome.year, outcome.mechanism, outcome.rho, metric, stratum, float(value))
        )

    n = outcome.cand_value.size
    matched = np.zeros(n, dtype=bool)
    for c in outcome.matches.values():
        matched[c] = True
    part = outcome.participates

    cand_strata: list[tuple[str, np.ndarray]] = [
        ("all", np.ones(n, dtype=bool)),
        ("participant", part),
        ("nonparticipant", ~part),
    ]
    for t in np.unique(outcome.cand_tiers):
        cand_strata.append((f"cand_tier:{int(t)}", outcome.cand_tiers == t))
    for name, mask in cand_strata:
        if not mask.any():
            continue
        add("matching_rate", name, matched[mask].mean())
        add("welfare_mean", name, outcome.cand_value[mask].mean())
        add("welfare_total", name, outcome.cand_value[mask].sum())
        both = matched & mask
        if both.any():
            add("matched_value_mean", name, outcome.cand_value[both].mean())

    active = np.asarray(outcome.active, dtype=np.int64)
    if active.size:
        active_tiers = outcome.dept_tiers[active]
        dept_strata: list[tuple[str, np.ndarray]] = [("all", np.ones(active.size, dtype=bool))]
        for t in np.unique(active_tiers):
            dept_strata.append((f"dept_tier:{int(t)}", active_tiers == t))
        for name, mask in dept_strata:
            if not mask.any():
                continue
            depts = active[mask]
            total = depts.size
            first = sum(1 for j in depts if outcome.match_round.get(int(j)) == "first_round")
            scramble = sum(1 for j in depts if outcome.match_round.get(int(j)) == "scramble")
            filled = first + scramble
            add("fill_first_round", name, first / total)
            add("fill_scramble", name, scramble / total)
            add("fill_unfilled", name, (total - filled) / total)
            add("fill_rate", name, filled / total)
            welfare = sum(outcome.hire_utility.get(int(j), 0.0) for j in depts)
            add("dept_welfare_per_position", name, welfare / total)
        add("active_positions", "all", active.size)
        if outcome.eligible_pairs > 0:
            add("blocking_pair_rate", "all", outcome.blocking_count / outcome.eligible_pairs)
        add("degenerate_calibrations", "all", outcome.degenerate_count)

    add("participant_count", "all", int(part.sum()))

    cells: dict[tuple[int, int], list[float]] = {}
    for j, c in outcome.matches.items():
        key = (int(outcome.dept_tiers[j]), int(outcome.cand_tiers[c]))
        cells.setdefault(key, []).append(outcome.hire_utility[j])
    for (dt, ct) in sorted(cells):
        vals = cells[(dt, ct)]
        add("hire_count", f"cell:{dt}:{ct}", len(vals))
        add("hire_utility_mean", f"cell:{dt}:{ct}", sum(vals) / len(vals))

    return rows


def _per_rep_values(rows: Iterable[MetricRow]) -> dict[tuple[str, float, str, str], dict[int, float]]:
    grouped: dict[tuple[str, float, str, str, int], list[float]] = {}
    for r in rows:
        grouped.setdefault((r.mechanism, r.rho, r.metric, r.stratum, r.replication), []).append(r.value)
    out: dict[tuple[str, float, str, str], dict[int, float]] = {}
    for (mech, rho, metric, stratum, rep), vals in grouped.items():
        agg = sum(vals) if metric in SUM_OVER_YEARS else sum(vals) / len(vals)
        out.setdefault((mech, rho, metric, stratum), {})[rep] = agg
    return out


def aggregate(rows: Iterable[MetricRow]) -> list[AggregateRecord]:
    """Per-replication aggregation then cross-replication mean and SE."""
    per_rep = _per_rep_values(rows)
    records = []
    for key in sorted(per_rep):
        mech, rho, metric, stratum = key
        vals = np.array([per_rep[key][rep] for rep in sorted(per_rep[key])])
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        records.append(AggregateRecord(mech, rho, metric, stratum, mean, se, vals.size))
    return records


def per_replication(
    rows: Iterable[MetricRow], metric: str, stratum: str = "all"
) -> dict[tuple[str, float], np.ndarray]:
    """Per-replication aggregated values keyed by (mechanism, rho)."""
    per_rep = _per_rep_values(rows)
    out: dict[tuple[str, float], np.ndarray] = {}
    for (mech, rho, m, s), by_rep in per_rep.items():
        if m != metric or s != stratum:
            continue
        out[(mech, rho)] = np.array([by_rep[rep] for rep in sorted(by_rep)])
    return out


def write_metrics_csv(rows: Sequence[MetricRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(METRICS_CSV_HEADER) + "\n")
        for r in rows:
            fh.write(
                f"{r.replication},{r.year},{r.mechanism},{repr(float(r.rho))},"
                f"{r.metric},{r.stratum},{repr(float(r.value))}\n"
            )


def read_metrics_csv(path) -> list[MetricRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != METRICS_CSV_HEADER:
            raise ValueError(f"unexpected metrics header: {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(
                MetricRow(
                    int(parts[0]), int(parts[1]), parts[2], float(parts[3]), parts[4], parts[5], float(parts[6])
                )
            )
    return rows


def summarize(rows: Iterable[MetricRow]) -> dict:
    """Nested summary for JSON output: one entry per (mechanism, rho) arm."""
    records = aggregate(rows)
    arms: dict[tuple[str, float], dict] = {}
    for rec in records:
        arm = arms.setdefault((rec.mechanism, rec.rho), {"mechanism": rec.mechanism, "rho": rec.rho, "metrics": {}})
        arm["metrics"].setdefault(rec.metric, {})[rec.stratum] = {
            "mean": rec.mean,
            "se": rec.se,
            "n_reps": rec.n_reps,
        }
    return {"arms": [arms[key] for key in sorted(arms)]}


def theorem1_check(rows: Iterable[MetricRow], rhos: Sequence[float]) -> dict[float, dict]:
    """Participant vs non-participant mean welfare at each interior rho.

    Disclosure should dominate: at every rho strictly between 0 and 1, mean
    participant welfare exceeds mean non-participant welfare.
    """
    rows = list(rows)
    part = per_replication(rows, "welfare_mean", "participant")
    nonpart = per_replication(rows, "welfare_mean", "nonparticipant")
    out: dict[float, dict] = {}
    for rho in rhos:
        key = ("questionnaire", rho)
        if key not in part or key not in nonpart:
            continue
        p = float(part[key].mean())
        q = float(nonpart[key].mean())
        out[rho] = {"participant": p, "nonparticipant": q, "ratio": p / q if q > 0 else math.inf, "holds": p > q}
    return out


def theorem4_check(rows: Iterable[MetricRow]) -> dict:
    """Spearman correlation of blocking-pair rate with rho across replications.

    Uses every (rho, per-replication rate) point on the questionnaire arms;
    the centralized-benchmark direction predicts a negative correlation.
    """
    from scipy.stats import spearmanr

    by_arm = per_replication(rows, "blocking_pair_rate", "all")
    xs: list[float] = []
    ys: list[float] = []
    for (mech, rho), vals in sorted(by_arm.items()):
        if mech != "questionnaire":
            continue
        xs.extend([rho] * vals.size)
        ys.extend(vals.tolist())
    if len(set(xs)) < 2:
        return {"correlation": 0.0, "p_value": 1.0, "n_points": len(xs)}
    corr, p = spearmanr(xs, ys)
    return {"correlation": float(corr), "p_value": float(p), "n_points": len(xs)}
