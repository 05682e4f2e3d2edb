"""Market mechanisms and strategic probes.

The questionnaire mechanism lets a fraction rho of each cohort disclose
their preference vector to every department; the baseline is literally the
same mechanism at rho = 0. Two comparison mechanisms are included: binary
capped signaling (each candidate flags a fixed number of departments, which
see a perfectly-aligned f for flagged pairs and the range floor otherwise)
and a centralized deferred-acceptance counterfactual on the same cohort.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alignment import ALIGNMENT_FLOOR, alignment_score, candidate_utility

__all__ = [
    "MechanismSpec",
    "SignalState",
    "effective_rho",
    "participation_flags",
    "apply_signaling",
    "aea_signal_assignment",
    "deferred_acceptance",
    "count_blocking_pairs",
    "MisreportProbeResult",
    "misreport_gain_probe",
]

MECHANISM_KINDS = ("questionnaire", "baseline", "aea_signals", "deferred_acceptance")

# Fixed misreport transforms for validation runs; keyed by name so specs
# stay hashable and serializable.
_MISREPORT_VECTORS = {
    "center": lambda q: np.full_like(q, 0.5),
    "zeros": lambda q: np.zeros_like(q),
    "ones": lambda q: np.ones_like(q),
}


@dataclass(frozen=True)
class MechanismSpec:
    """Which mechanism runs, at what disclosure rate, with what signal budget."""

    kind: str = "questionnaire"
    rho: float | None = None        # questionnaire only; None defers to config.rho
    signal_count: int = 2           # aea_signals only
    truthful: bool = True
    misreport: tuple[tuple[int, str], ...] = ()  # (cand_id, transform) pairs, validation only

    def __post_init__(self) -> None:
        if self.kind not in MECHANISM_KINDS:
            raise ValueError(f"unknown mechanism kind: {self.kind!r}")
        if self.rho is not None and not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.signal_count < 1:
            raise ValueError("signal_count must be >= 1")
        for _, name in self.misreport:
            if name not in _MISREPORT_VECTORS:
                raise ValueError(f"unknown misreport transform: {name!r}")

    @property
    def label(self) -> str:
        return self.kind


@dataclass(frozen=True, eq=False)
class SignalState:
    """Resolved signaling for one cohort-year."""

    kind: str
    rho: float
    participates: np.ndarray           # (n,) bool
    signals: np.ndarray | None = None  # (n, count) department indices, aea only


def effective_rho(mech: MechanismSpec, config_rho: float) -> float:
    if mech.kind == "baseline":
        return 0.0
    if mech.kind == "questionnaire":
        return config_rho if mech.rho is None else mech.rho
    return 0.0


def participation_flags(n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """floor(rho * n) participants via a shared permutation prefix.

    The permutation is drawn regardless of rho and rho only sets the prefix
    length, so participant sets are exactly nested across rho values that
    share a seed. The epsilon guards floor() against float dust in rho * n.
    """
    perm = rng.permutation(n)
    count = int(np.floor(rho * n + 1e-9))
    flags = np.zeros(n, dtype=bool)
    flags[perm[:count]] = True
    return flags


def aea_signal_assignment(v_matrix: np.ndarray, count: int) -> np.ndarray:
    """Each candidate's top-`count` departments by candidate utility.

    v_matrix is (n, m); ties break toward the lower department index.
    """
    n, m = v_matrix.shape
    count = min(count, m)
    out = np.empty((n, count), dtype=np.int64)
    for i in range(n):
        order = np.lexsort((np.arange(m), -v_matrix[i]))
        out[i] = order[:count]
    return out


def apply_signaling(
    reported_prefs: np.ndarray,
    mech: MechanismSpec,
    config_rho: float,
    rng_participation: np.random.Generator,
    v_matrix: np.ndarray | None = None,
) -> tuple[np.ndarray, SignalState]:
    """Resolve who discloses what this year.

    Returns (possibly transformed) reported preferences and the signal
    state. The participation stream is consumed identically for every
    mechanism so that arms sharing a seed stay paired draw-for-draw.
    """
    n = reported_prefs.shape[0]
    rho = effective_rho(mech, config_rho)
    flags = participation_flags(n, rho, rng_participation)
    reported = reported_prefs
    if not mech.truthful and mech.misreport:
        reported = reported_prefs.copy()
        for cand_id, name in mech.misreport:
            reported[cand_id] = _MISREPORT_VECTORS[name](reported[cand_id])
    if mech.kind in ("questionnaire", "baseline"):
        return reported, SignalState(kind="questionnaire", rho=rho, participates=flags)
    if mech.kind == "aea_signals":
        if v_matrix is None:
            raise ValueError("aea_signals needs the candidate utility matrix")
        signals = aea_signal_assignment(v_matrix, mech.signal_count)
        return reported, SignalState(
            kind="aea_signals", rho=0.0, participates=np.zeros(n, dtype=bool), signals=signals
        )
    return reported, SignalState(kind=mech.kind, rho=0.0, participates=np.zeros(n, dtype=bool))


def aea_effective_alignment(pool: np.ndarray, dept_index: int, signals: np.ndarray) -> np.ndarray:
    """Binary-signal alignment channel: 1 for flagged pairs, the floor otherwise."""
    flagged = (signals[pool] == dept_index).any(axis=1)
    return np.where(flagged, 1.0, ALIGNMENT_FLOOR)


def deferred_acceptance(
    cand_prefs: Sequence[Sequence[int]],
    dept_prefs: Sequence[Sequence[int]],
    capacities: Sequence[int] | None = None,
) -> tuple[dict[int, int], dict[int, list[int]]]:
    """Candidate-proposing deferred acceptance with acceptability lists.

    Preference lists are strict and may omit unacceptable partners. Returns
    (cand_match, dept_match); dept_match values are ordered by the
    department's preference. The outcome is the candidate-optimal stable
    matching for the stated lists.
    """
    n_c, n_d = len(cand_prefs), len(dept_prefs)
    caps = [1] * n_d if capacities is None else list(capacities)
    rank = [{c: r for r, c in enumerate(prefs)} for prefs in dept_prefs]
    held: list[list[int]] = [[] for _ in range(n_d)]
    nxt = [0] * n_c
    free = deque(range(n_c))
    while free:
        i = free.popleft()
        prefs = cand_prefs[i]
        while nxt[i] < len(prefs) and i not in rank[prefs[nxt[i]]]:
            nxt[i] += 1  # skip departments that would never hold i
        if nxt[i] >= len(prefs):
            continue
        j = prefs[nxt[i]]
        nxt[i] += 1
        held[j].append(i)
        if len(held[j]) > caps[j]:
            held[j].sort(key=lambda c: rank[j][c])
            bumped = held[j].pop()
            if nxt[bumped] < len(cand_prefs[bumped]):
                free.append(bumped)
    cand_match = {}
    dept_match = {}
    for j in range(n_d):
        held[j].sort(key=lambda c: rank[j][c])
        dept_match[j] = list(held[j])
        for c in held[j]:
            cand_match[c] = j
    return cand_match, dept_match


def count_blocking_pairs(
    pools: dict[int, np.ndarray],
    u_star: dict[int, np.ndarray],
    v_pool: dict[int, np.ndarray],
    dept_match: dict[int, int],
    cand_value: np.ndarray,
) -> tuple[int, int]:
    """Count pairs that would both strictly gain by matching with each other.

    Eligibility is pool membership. An unfilled position and an unmatched
    candidate are valued at zero on their respective sides, so such a pair
    blocks exactly when both utilities are strictly positive. Returns
    (blocking, eligible).
    """
    blocking = 0
    eligible = 0
    for j, pool in pools.items():
        u = u_star[j]
        eligible += int(pool.size)
        if j in dept_match:
            pos = int(np.searchsorted(pool, dept_match[j]))
            hire_value = float(u[pos])
        else:
            hire_value = 0.0
        dept_gains = u > hire_value
        cand_gains = v_pool[j] > cand_value[pool]
        blocking += int(np.count_nonzero(dept_gains & cand_gains))
    return blocking, eligible


@dataclass(frozen=True)
class MisreportProbeResult:
    gain: float                    # max over the grid of W(q') - W(q*)
    bound: float                   # K / n_clones (the delta term vanishes for clones)
    se: float                      # paired MC standard error of the best arm's gain
    grid_labels: tuple[str, ...]
    grid_gains: tuple[float, ...]
    n_clones: int
    K: int
    sims: int


def misreport_gain_probe(
    n_clones: int = 25,
    k: int = 5,
    p_d: int = 15,
    sims: int = 2000,
    seed: int = 11,
    prestige: float = 0.7,
    beta: float = 0.6,
    grid: Sequence[tuple[str, np.ndarray]] | None = None,
) -> MisreportProbeResult:
    """Expected misreport gain on a clone instance, against the K/n bound.

    One department with interview capacity K screens n identical-quality
    clones, so selection runs purely on disclosed alignment. The department's
    attribute vector is redrawn every replication: candidates commit to a
    report before alignment is observable, which is the information
    structure the truthfulness bound lives in. The probe candidate's payoff
    is its true utility times the offer indicator; the offer goes to the
    interviewee with the largest estimated utility, which for clones is the
    top disclosed alignment. Grid misreports are fixed vectors (they cannot
    condition on the realized department).
    """
    rng = np.random.default_rng([seed, 0])
    q_star = rng.random(p_d)
    if grid is None:
        grid = [
            ("truthful", q_star),
            ("center", np.full(p_d, 0.5)),
            ("zeros", np.zeros(p_d)),
            ("ones", np.ones(p_d)),
            ("toward_center", 0.5 * (q_star + 0.5)),
            ("random_a", rng.random(p_d)),
            ("random_b", rng.random(p_d)),
            ("jitter", np.clip(q_star + rng.uniform(-0.15, 0.15, p_d), 0.0, 1.0)),
        ]
    labels = tuple(name for name, _ in grid)
    if "truthful" not in labels:
        raise ValueError("the grid must contain the truthful report")
    rng_sim = np.random.default_rng([seed, 1])
    d = rng_sim.random((sims, p_d))
    rivals = rng_sim.random((sims, n_clones - 1, p_d))
    rival_f = 0.5 + 0.5 * (1.0 - np.abs(rivals - d[:, None, :]).mean(axis=2))
    rival_best = rival_f.max(axis=1) if n_clones > 1 else np.full(sims, -np.inf)
    f_true = 0.5 + 0.5 * (1.0 - np.abs(q_star[None, :] - d).mean(axis=1))
    v_true = candidate_utility(prestige, f_true, beta)
    payoffs = {}
    for name, q in grid:
        f_arm = 0.5 + 0.5 * (1.0 - np.abs(np.asarray(q)[None, :] - d).mean(axis=1))
        win = f_arm > rival_best  # clones share vbar, so top alignment takes the offer
        payoffs[name] = v_true * win
    base = payoffs["truthful"]
    gains = {name: float(np.mean(p - base)) for name, p in payoffs.items()}
    best = max(gains, key=lambda name: (gains[name], name))
    diffs = payoffs[best] - base
    se = float(np.std(diffs, ddof=1) / np.sqrt(sims)) if best != "truthful" else 0.0
    return MisreportProbeResult(
        gain=gains[best],
        bound=k / n_clones,
        se=se,
        grid_labels=labels,
        grid_gains=tuple(gains[name] for name in labels),
        n_clones=n_clones,
        K=k,
        sims=sims,
    )
