"""Alignment scores and the utility functions built on them.

Alignment between a candidate's (reported) preference vector and a
department's attribute vector is a weighted L1 similarity rescaled to
[1/2, 1]: identical vectors score 1, maximally distant vectors score 1/2.
Candidates who do not disclose are imputed the most pessimistic score the
department has actually seen this cycle.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ALIGNMENT_FLOOR",
    "uniform_item_weights",
    "alignment_score",
    "nondisclosure_floor",
    "effective_alignment",
    "department_utility",
    "candidate_utility",
]

ALIGNMENT_FLOOR = 0.5  # lower end of the alignment range; also the no-information default


def uniform_item_weights(p: int) -> np.ndarray:
    return np.full(p, 1.0 / p)


def alignment_score(
    reported: np.ndarray, attributes: np.ndarray, item_weights: np.ndarray | None = None
) -> np.ndarray | float:
    """Alignment f = 1/2 + 1/2 * (1 - sum_k w_k |q_k - d_k|).

    `reported` may be a single vector (p,) or a stack (S, p); the result
    matches that shape with the item axis reduced. Inputs are expected in
    [0, 1] with simplex item weights, which keeps f inside [1/2, 1] without
    any clipping.
    """
    reported = np.asarray(reported, dtype=float)
    attributes = np.asarray(attributes, dtype=float)
    if item_weights is None:
        item_weights = uniform_item_weights(attributes.shape[-1])
    dist = np.abs(reported - attributes) @ np.asarray(item_weights, dtype=float)
    out = 0.5 + 0.5 * (1.0 - dist)
    return float(out) if np.ndim(out) == 0 else out


def nondisclosure_floor(disclosed_scores: np.ndarray) -> float:
    """Imputed score for non-disclosers: the minimum disclosed score.

    With no disclosers at all there is nothing to anchor on and the
    imputation falls back to the bottom of the alignment range.
    """
    disclosed_scores = np.asarray(disclosed_scores, dtype=float)
    if disclosed_scores.size == 0:
        return ALIGNMENT_FLOOR
    return float(disclosed_scores.min())


def effective_alignment(
    reported: np.ndarray,
    disclosed: np.ndarray,
    attributes: np.ndarray,
    item_weights: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Per-candidate alignment as one department sees it.

    Disclosers get their actual score on the reported vector; everyone else
    gets the floor. Returns (scores, floor). Every discloser's score is >=
    the floor by construction, so disclosure can never hurt a candidate in
    the alignment channel.
    """
    disclosed = np.asarray(disclosed, dtype=bool)
    f = np.full(disclosed.shape, ALIGNMENT_FLOOR)
    if disclosed.any():
        scores = alignment_score(np.asarray(reported, dtype=float)[disclosed], attributes, item_weights)
        floor = nondisclosure_floor(scores)
        f[:] = floor
        f[disclosed] = scores
    else:
        floor = ALIGNMENT_FLOOR
    return f, floor


def department_utility(
    qualities: np.ndarray,
    f: np.ndarray | float,
    utility_weights: np.ndarray,
    form: str = "multiplicative",
    gamma: float = 1.0,
) -> np.ndarray | float:
    """Department utility U(v, f).

    The default is the multiplicative form (w . v) * f; the power-weighted
    variant raises f to gamma, which reweights how much misalignment is
    punished without moving the anchor points U(0, f) = 0 and U(1, 1) = 1.
    """
    base = np.asarray(qualities, dtype=float) @ np.asarray(utility_weights, dtype=float)
    if form == "multiplicative":
        out = base * f
    elif form == "power":
        out = base * np.power(f, gamma)
    else:
        raise ValueError(f"unknown utility form: {form!r}")
    return float(out) if np.ndim(out) == 0 else out


def candidate_utility(
    prestige: np.ndarray | float, f_true: np.ndarray | float, beta: float = 0.6
) -> np.ndarray | float:
    """Candidate utility V = beta * s + (1 - beta) * (2 f - 1).

    Always evaluated at the candidate's true preferences: misreporting or
    withholding changes what departments see, never what a job is worth to
    the candidate. Lies in [0, 1] for s in [0, 1] and f in [1/2, 1].
    """
    out = beta * np.asarray(prestige, dtype=float) + (1.0 - beta) * (2.0 * np.asarray(f_true, dtype=float) - 1.0)
    return float(out) if np.ndim(out) == 0 else out
