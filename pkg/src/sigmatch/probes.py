"""Monte Carlo validation suites for the statistical guarantees.

Four independent checks, each against an oracle that does not reuse the
production code path being tested:

* rank/top-k coverage of the calibrated bounds on synthetic pools with
  known truth and honest bootstrap noise,
* exact agreement of the calibrated selection with brute-force top-k when
  bootstrap draws have zero variance,
* stability of deferred acceptance against an exhaustive blocking-pair
  scan on small instances,
* monotone value of information for nested questionnaire item sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mechanisms import deferred_acceptance
from .ranking import max_stat_quantile, pairwise_stats, rank_lower_bounds, select_interviews

__all__ = [
    "CoverageReport",
    "coverage_suite",
    "degenerate_reduction_suite",
    "da_stability_suite",
    "InformativenessReport",
    "dept_informativeness_probe",
]


@dataclass(frozen=True)
class CoverageReport:
    trials: int
    alpha: float
    rank_coverage: float
    topk_coverage: float

    def passes(self, threshold: float = 0.88) -> bool:
        return self.rank_coverage >= threshold and self.topk_coverage >= threshold


def coverage_suite(
    trials: int = 500,
    pool: int = 30,
    k: int = 5,
    alpha: float = 0.1,
    B: int = 200,
    seed: int = 7,
) -> CoverageReport:
    """Empirical coverage of the simultaneous rank bounds.

    Each trial draws true expected utilities, a noisy point estimate, and B
    bootstrap draws whose dispersion matches the estimate's true sampling
    noise (the ideal-bootstrap regime the guarantee is stated for). Rank
    coverage is the joint event that every lower bound is at most the true
    rank; top-k coverage is the event that every truly top-k candidate lands
    in the confident set {R_lower <= k}.
    """
    rank_hits = 0
    topk_hits = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        true_u = rng.uniform(0.2, 0.8, pool)
        tau = rng.uniform(0.03, 0.08, pool)
        center = true_u + tau * rng.standard_normal(pool)
        draws = center[None, :] + tau[None, :] * rng.standard_normal((B, pool))
        stats = pairwise_stats(draws)
        cal = max_stat_quantile(stats, alpha)
        bounds = rank_lower_bounds(stats, cal.c)
        true_rank = 1 + (true_u[:, None] < true_u[None, :]).sum(axis=1)
        if np.all(bounds <= true_rank):
            rank_hits += 1
        top_idx = np.argsort(-true_u)[:k]
        if np.all(bounds[top_idx] <= k):
            topk_hits += 1
    return CoverageReport(
        trials=trials,
        alpha=alpha,
        rank_coverage=rank_hits / trials,
        topk_coverage=topk_hits / trials,
    )


def degenerate_reduction_suite(instances: int = 1000, seed: int = 13) -> int:
    """Mismatches between calibrated selection and brute-force top-k when
    every bootstrap draw is identical (zero variance). Should be 0."""
    mismatches = 0
    for t in range(instances):
        rng = np.random.default_rng([seed, t])
        size = int(rng.integers(2, 13))
        k = int(rng.integers(1, size + 1))
        if rng.random() < 0.5:
            uhat = rng.random(size)
        else:
            # Discrete values force ties through the id tie-break.
            uhat = rng.integers(0, 4, size) / 3.0
        draws = np.tile(uhat, (3, 1))
        stats = pairwise_stats(draws)
        cal = max_stat_quantile(stats, alpha=0.1)
        bounds = rank_lower_bounds(stats, cal.c)
        selected = select_interviews(stats.uhat, bounds, k)
        brute = np.lexsort((np.arange(size), -uhat))[:k]
        if not np.array_equal(selected, brute):
            mismatches += 1
    return mismatches


def _exhaustive_blocking(
    cand_prefs: Sequence[Sequence[int]],
    dept_prefs: Sequence[Sequence[int]],
    capacities: Sequence[int],
    cand_match: dict[int, int],
    dept_match: dict[int, list[int]],
) -> int:
    """Brute-force blocking-pair count for a many-to-one matching.

    A pair blocks when the candidate strictly prefers the department to the
    current assignment (being unmatched ranks below every listed option) and
    the department either has spare capacity or strictly prefers the
    candidate to its worst hire. Unlisted partners are unacceptable.
    """
    blocking = 0
    for i, prefs in enumerate(cand_prefs):
        rank_i = {j: r for r, j in enumerate(prefs)}
        cur = cand_match.get(i)
        cur_rank = rank_i[cur] if cur is not None else len(prefs)
        for j in prefs:
            if rank_i[j] >= cur_rank:
                continue
            drank = {c: r for r, c in enumerate(dept_prefs[j])}
            if i not in drank:
                continue
            hires = dept_match.get(j, [])
            if len(hires) < capacities[j]:
                blocking += 1
            elif any(drank[i] < drank[c] for c in hires):
                blocking += 1
    return blocking


def da_stability_suite(cases: int = 200, max_side: int = 5, seed: int = 17) -> int:
    """Total blocking pairs across random small instances. Should be 0.

    Half the cases truncate preference lists so unacceptability paths are
    exercised too.
    """
    total = 0
    for case in range(cases):
        rng = np.random.default_rng([seed, case])
        n = int(rng.integers(1, max_side + 1))
        m = int(rng.integers(1, max_side + 1))
        capacities = [int(rng.integers(1, 3)) for _ in range(m)]
        truncate = case % 2 == 1
        cand_prefs = []
        for _ in range(n):
            prefs = list(rng.permutation(m))
            if truncate:
                prefs = prefs[: int(rng.integers(0, m + 1))]
            cand_prefs.append([int(x) for x in prefs])
        dept_prefs = []
        for _ in range(m):
            prefs = list(rng.permutation(n))
            if truncate:
                prefs = prefs[: int(rng.integers(0, n + 1))]
            dept_prefs.append([int(x) for x in prefs])
        cand_match, dept_match = deferred_acceptance(cand_prefs, dept_prefs, capacities)
        total += _exhaustive_blocking(cand_prefs, dept_prefs, capacities, cand_match, dept_match)
    return total


@dataclass(frozen=True)
class InformativenessReport:
    labels: tuple[str, ...]
    estimates: np.ndarray       # mean selected welfare per item set
    step_deltas: np.ndarray     # consecutive differences
    step_ses: np.ndarray        # paired SE of each difference

    def passes(self, z: float = 2.0) -> bool:
        return bool(np.all(self.step_deltas >= -z * self.step_ses))


def _acceptance_curve(f: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-4.0 * (f - 0.75)))


def dept_informativeness_probe(
    dims: Sequence[int] | None = None,
    item_sets: Sequence[Sequence[int]] | None = None,
    reps: int = 400,
    n_cands: int = 60,
    k: int = 5,
    p_full: int = 15,
    inner: int = 200,
    seed: int = 23,
) -> InformativenessReport:
    """Value of a longer questionnaire to one hiring department.

    Candidates carry a full p_full-item preference vector, but the
    department only observes the items in a given set; it imputes the
    unobserved gaps by inner Monte Carlo (common draws across item sets and
    candidates), scores everyone by imputed expected utility times the
    acceptance curve, and interviews its top k. Reported welfare is the true
    expected utility of the selection, averaged over replications. Item sets
    are deduplicated: asking the same question twice adds nothing.

    Pass either prefix `dims` (each d means items 0..d-1) or explicit
    `item_sets`. Differences between consecutive sets share all randomness,
    so their standard errors are paired.
    """
    if item_sets is None:
        if dims is None:
            dims = (3, 7, 15)
        item_sets = [tuple(range(d)) for d in dims]
        labels = tuple(str(d) for d in dims)
    else:
        labels = tuple(",".join(str(i) for i in s) for s in item_sets)
    unique_sets = [np.unique(np.asarray(s, dtype=np.int64)) for s in item_sets]
    for s in unique_sets:
        if s.size and (s.min() < 0 or s.max() >= p_full):
            raise ValueError("item set out of range")

    welfare = np.empty((reps, len(unique_sets)))
    for r in range(reps):
        rng = np.random.default_rng([seed, r])
        d = rng.random(p_full)
        q = rng.random((n_cands, p_full))
        vbar = rng.uniform(0.2, 1.0, n_cands)
        imputed = rng.random((inner, p_full))
        gaps = np.abs(q - d[None, :])                      # (n, p_full)
        imp_gap = np.abs(imputed - d[None, :]).mean(axis=0)  # (p_full,) common across candidates
        f_true = 0.5 + 0.5 * (1.0 - gaps.mean(axis=1))
        true_value = vbar * f_true * _acceptance_curve(f_true)
        for c, items in enumerate(unique_sets):
            mask = np.zeros(p_full, dtype=bool)
            mask[items] = True
            est_gap = (gaps[:, mask].sum(axis=1) + imp_gap[~mask].sum()) / p_full
            f_est = 0.5 + 0.5 * (1.0 - est_gap)
            score = vbar * f_est * _acceptance_curve(f_est)
            chosen = np.lexsort((np.arange(n_cands), -score))[:k]
            welfare[r, c] = true_value[chosen].sum()
    estimates = welfare.mean(axis=0)
    diffs = np.diff(welfare, axis=1)
    if diffs.shape[1]:
        step_ses = diffs.std(axis=0, ddof=1) / np.sqrt(reps)
        step_deltas = diffs.mean(axis=0)
    else:
        step_ses = np.empty(0)
        step_deltas = np.empty(0)
    return InformativenessReport(
        labels=labels, estimates=estimates, step_deltas=step_deltas, step_ses=step_ses
    )
