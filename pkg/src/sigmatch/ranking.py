"""Confidence-calibrated ranking of candidates by estimated expected utility.

Point estimates of expected utility are noisy, and naive top-k selection by
a noisy estimate systematically over-selects lucky estimates. The machinery
here studentizes all pairwise gaps against their bootstrap spread, calibrates
a single critical value from the bootstrap distribution of the *maximum*
studentized deviation (so the guarantee is simultaneous across every pair),
and converts significant gaps into a lower confidence bound on each
candidate's true rank. Interview slots go first to candidates whose rank
bound already places them in the top k; leftover slots are filled by point
estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_TOL",
    "PairwiseStats",
    "pairwise_stats",
    "CalibrationResult",
    "max_stat_quantile",
    "rank_lower_bounds",
    "select_interviews",
]

# Pairs whose bootstrap spread is below this are treated as exactly tied in
# noise: they are excluded from the max statistic and compared by the raw
# sign of the estimated gap instead of a studentized one.
SIGMA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PairwiseStats:
    """All pairwise gap statistics for one department's pool.

    delta_hat[i, l] = uhat[i] - uhat[l] (antisymmetric); sigma[i, l] is the
    B-1-divisor sample sd of the bootstrap draws of that gap (symmetric).
    """

    uhat: np.ndarray      # (S,) mean of the draws
    draws: np.ndarray     # (B, S)
    delta_hat: np.ndarray  # (S, S)
    sigma: np.ndarray      # (S, S)


def pairwise_stats(uhat_draws: np.ndarray) -> PairwiseStats:
    """Compute gap estimates and spreads from expected-utility draws (B, S).

    sigma comes from the draw covariance: Var(u_i - u_l) = C_ii + C_ll -
    2 C_il, which equals the ddof=1 variance of the per-draw gaps exactly
    (the gap is linear in the draws) without materializing a (B, S, S) cube.
    """
    draws = np.asarray(uhat_draws, dtype=float)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise ValueError("uhat_draws must be (B, S) with B >= 2")
    uhat = draws.mean(axis=0)
    delta_hat = uhat[:, None] - uhat[None, :]
    cov = np.atleast_2d(np.cov(draws, rowvar=False, ddof=1))
    d = np.diag(cov)
    var = d[:, None] + d[None, :] - 2.0 * cov
    sigma = np.sqrt(np.clip(var, 0.0, None))
    return PairwiseStats(uhat=uhat, draws=draws, delta_hat=delta_hat, sigma=sigma)


@dataclass(frozen=True)
class CalibrationResult:
    c: float
    degenerate: bool  # True when every pair was spread-degenerate


def max_stat_quantile(stats: PairwiseStats, alpha: float, chunk: int = 100_000) -> CalibrationResult:
    """Critical value c: the ceil((1-alpha) B)-th order statistic of the max
    studentized deviation across draws.

    Per draw b, Z_b = max over non-degenerate pairs (i, l) of
    (delta^(b) - delta_hat) / sigma; centering makes the numerator
    (e_i - e_l) with e = draw - mean, and antisymmetry reduces the ordered
    max to the absolute studentized gap over upper-triangle pairs. `chunk`
    bounds how many pairs are materialized at once. If every pair is
    degenerate there is nothing to calibrate and c = 0 is returned with the
    degenerate flag.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    sigma = stats.sigma
    mask = sigma >= SIGMA_TOL
    np.fill_diagonal(mask, False)
    if not mask.any():
        return CalibrationResult(c=0.0, degenerate=True)
    hi, lo = np.nonzero(np.triu(mask, 1))
    weights = 1.0 / sigma[hi, lo]
    B = stats.draws.shape[0]
    et = np.ascontiguousarray((stats.draws - stats.uhat[None, :]).T)  # (S, B)
    z = np.zeros(B)
    for start in range(0, hi.size, chunk):
        sl = slice(start, start + chunk)
        gaps = et[hi[sl]] - et[lo[sl]]
        np.abs(gaps, out=gaps)
        gaps *= weights[sl, None]
        np.maximum(z, gaps.max(axis=0), out=z)
    k = math.ceil((1.0 - alpha) * B)
    c = float(np.sort(z)[k - 1])
    return CalibrationResult(c=c, degenerate=False)


def rank_lower_bounds(stats: PairwiseStats, c: float) -> np.ndarray:
    """Lower confidence bound on each candidate's true rank.

    Candidate i's bound is 1 plus the number of rivals whose estimated gap
    over i clears c times its spread; spread-degenerate pairs count by the
    raw sign of the gap. Simultaneity of the calibration makes all bounds
    hold jointly at level 1 - alpha.
    """
    significant = np.where(
        stats.sigma >= SIGMA_TOL, stats.delta_hat > c * stats.sigma, stats.delta_hat > 0.0
    )
    np.fill_diagonal(significant, False)
    # significant[l, i] says rival l is confidently ahead of i.
    return 1 + significant.sum(axis=0).astype(np.int64)


def select_interviews(
    uhat: np.ndarray,
    bounds: np.ndarray,
    k: int,
    cand_ids: np.ndarray | None = None,
) -> np.ndarray:
    """Pick min(k, S) interviewees; returns pool indices in offer order.

    The confident set {i : rank bound <= k} has priority. If it overfills,
    keep its top k by point estimate; if it underfills, pad with the best
    remaining point estimates. The returned order (offer order) is always
    by point estimate descending, candidate id ascending on ties.
    """
    uhat = np.asarray(uhat, dtype=float)
    S = uhat.size
    if cand_ids is None:
        cand_ids = np.arange(S)
    k_eff = min(int(k), S)
    order = np.lexsort((np.asarray(cand_ids), -uhat))
    confident = np.asarray(bounds) <= k
    ordered_conf = [i for i in order if confident[i]]
    if len(ordered_conf) >= k_eff:
        chosen = set(ordered_conf[:k_eff])
    else:
        chosen = set(ordered_conf)
        for i in order:
            if len(chosen) >= k_eff:
                break
            if i not in chosen:
                chosen.add(i)
    return np.array([i for i in order if i in chosen], dtype=np.int64)
