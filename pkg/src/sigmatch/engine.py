"""Yearly hiring-cycle simulation.

Each cycle: departments activate independently, a fresh cohort is drawn,
signaling resolves who disclosed, every active department ranks its
tier-restricted pool by estimated expected utility and interviews its top
k_j, then offers go out in simultaneous rounds (one position per
department). Candidates holding at least one open offer accept their best
one immediately, so matched candidates leave the market and departments walk
down their interview lists until they fill or exhaust them. Every extended
offer lands in the shared history that future acceptance models are trained
on.

Randomness is organized as named streams keyed by (seed, replication, year),
never by mechanism or disclosure rate, so arms that share a seed see
identical cohorts, activations, and participation permutations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .acceptance import (
    BootstrapEnsemble,
    ConstantModel,
    History,
    LearnerSpec,
    bootstrap_ensemble,
    fit_acceptance_model,
    predict_expected_utilities,
)
from .alignment import ALIGNMENT_FLOOR, candidate_utility, department_utility
from .mechanisms import (
    MechanismSpec,
    SignalState,
    aea_effective_alignment,
    apply_signaling,
    count_blocking_pairs,
    deferred_acceptance,
)
from .model import (
    STREAM_ACTIVATION,
    STREAM_BOOTSTRAP,
    STREAM_COHORT,
    STREAM_PARTICIPATION,
    CandidateProfile,
    DepartmentProfile,
    MarketConfig,
    OfferRecord,
    candidate_quality_index,
    candidate_tiers,
    rng_stream,
    screening_pool,
)
from .ranking import max_stat_quantile, pairwise_stats, rank_lower_bounds, select_interviews

__all__ = [
    "Departments",
    "Cohort",
    "YearContext",
    "YearOutcome",
    "HorizonResult",
    "true_alignment_matrix",
    "build_year_context",
    "simulate_year",
    "run_burn_in",
    "run_main_years",
    "run_horizon",
    "run_sweep",
]


@dataclass(frozen=True, eq=False)
class Departments:
    """Array-of-struct view of a department roster, indexed 0..m-1."""

    ids: np.ndarray          # (m,) external ids
    prestige: np.ndarray     # (m,)
    attributes: np.ndarray   # (m, p_d)
    weights: np.ndarray      # (m, p_v)
    capacity: np.ndarray     # (m,) interview capacities
    tiers: np.ndarray        # (m,)

    @classmethod
    def from_profiles(cls, profiles: Sequence[DepartmentProfile]) -> "Departments":
        return cls(
            ids=np.array([p.dept_id for p in profiles], dtype=np.int64),
            prestige=np.array([p.prestige for p in profiles], dtype=float),
            attributes=np.stack([p.attributes for p in profiles]).astype(float),
            weights=np.stack([p.utility_weights for p in profiles]).astype(float),
            capacity=np.array([p.capacity for p in profiles], dtype=np.int64),
            tiers=np.array([p.tier for p in profiles], dtype=np.int64),
        )

    def __len__(self) -> int:
        return int(self.ids.size)


@dataclass(frozen=True, eq=False)
class Cohort:
    """One year's candidates (ids are positions 0..n-1 within the year)."""

    qualities: np.ndarray       # (n, p_v)
    true_prefs: np.ndarray      # (n, p_d)
    reported_prefs: np.ndarray  # (n, p_d)
    tiers: np.ndarray           # (n,)
    participates: np.ndarray    # (n,)

    def profiles(self) -> list[CandidateProfile]:
        return [
            CandidateProfile(
                cand_id=i,
                qualities=self.qualities[i],
                true_prefs=self.true_prefs[i],
                reported_prefs=self.reported_prefs[i],
                participates=bool(self.participates[i]),
                tier=int(self.tiers[i]),
            )
            for i in range(self.qualities.shape[0])
        ]


@dataclass(frozen=True, eq=False)
class YearContext:
    """Everything a yearly cycle needs that does not depend on the learner."""

    year: int
    mechanism: str       # arm label; signal.kind carries the behavior
    active: np.ndarray   # active department indices, ascending
    cohort: Cohort
    signal: SignalState
    f_true: np.ndarray   # (n, m) alignment on true preferences
    v_true: np.ndarray   # (n, m) candidate utilities
    f_rep: np.ndarray    # (n, m) alignment on reported preferences


@dataclass(eq=False)
class YearOutcome:
    """Matching results and realized values for one cohort-year."""

    year: int
    mechanism: str
    rho: float
    active: np.ndarray
    dept_tiers: np.ndarray
    cand_tiers: np.ndarray
    participates: np.ndarray
    interviews: dict[int, np.ndarray]   # dept index -> candidate indices, offer order
    matches: dict[int, int]             # dept index -> candidate index
    match_round: dict[int, str]         # "first_round" | "scramble"
    records: list[OfferRecord]
    cand_value: np.ndarray              # (n,) realized V, 0 when unmatched
    hire_utility: dict[int, float]      # complete-information U of each hire
    blocking_count: int
    eligible_pairs: int
    degenerate_count: int               # active departments whose calibration degenerated
    diagnostics: dict[int, dict] | None = None


@dataclass(frozen=True, eq=False)
class HorizonResult:
    outcomes: list[YearOutcome]
    history: History


def true_alignment_matrix(prefs: np.ndarray, attributes: np.ndarray) -> np.ndarray:
    """(n, m) alignment with uniform item weights."""
    return 0.5 + 0.5 * (1.0 - np.abs(prefs[:, None, :] - attributes[None, :, :]).mean(axis=2))


def _draw_cohort_arrays(config: MarketConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # Draw order is part of the pairing contract: qualities first, then prefs.
    qualities = rng.random((config.n, config.p_v))
    prefs = rng.random((config.n, config.p_d))
    return qualities, prefs


def build_year_context(
    config: MarketConfig,
    departments: Departments,
    mech: MechanismSpec,
    rep: int,
    year: int,
) -> YearContext:
    qualities, prefs = _draw_cohort_arrays(config, rng_stream(config.seed, rep, year, STREAM_COHORT))
    rng_act = rng_stream(config.seed, rep, year, STREAM_ACTIVATION)
    active = np.nonzero(rng_act.random(len(departments)) < config.activation_prob)[0]
    tiers = candidate_tiers(candidate_quality_index(qualities), config.tier_boundaries, config.m)
    f_true = true_alignment_matrix(prefs, departments.attributes)
    v_true = candidate_utility(departments.prestige[None, :], f_true, config.beta)
    rng_part = rng_stream(config.seed, rep, year, STREAM_PARTICIPATION)
    reported, signal = apply_signaling(prefs, mech, config.rho, rng_part, v_matrix=v_true)
    f_rep = f_true if reported is prefs else true_alignment_matrix(reported, departments.attributes)
    cohort = Cohort(
        qualities=qualities,
        true_prefs=prefs,
        reported_prefs=reported,
        tiers=tiers,
        participates=signal.participates,
    )
    return YearContext(
        year=year, mechanism=mech.kind, active=active, cohort=cohort, signal=signal,
        f_true=f_true, v_true=v_true, f_rep=f_rep,
    )


def _department_floors(ctx: YearContext) -> np.ndarray:
    """Per-department imputation floor: min disclosed alignment, else the range floor."""
    part = ctx.cohort.participates
    if ctx.signal.kind == "questionnaire" and part.any():
        return ctx.f_rep[part].min(axis=0)
    return np.full(ctx.f_rep.shape[1], ALIGNMENT_FLOOR)


def simulate_year(
    config: MarketConfig,
    departments: Departments,
    ctx: YearContext,
    predictor,
    collect_diagnostics: bool = False,
) -> YearOutcome:
    """One interview-and-offer cycle.

    `predictor` is either a BootstrapEnsemble (confidence-calibrated
    ranking) or a single fitted model (plug-in ranking by point estimate,
    used during burn-in).
    """
    cohort = ctx.cohort
    n = cohort.qualities.shape[0]
    floors = _department_floors(ctx)
    calibrated = isinstance(predictor, BootstrapEnsemble)

    interviews: dict[int, np.ndarray] = {}
    pool_by: dict[int, np.ndarray] = {}
    f_by: dict[int, np.ndarray] = {}
    vbar_by: dict[int, np.ndarray] = {}
    u_star_by: dict[int, np.ndarray] = {}
    diagnostics: dict[int, dict] = {}
    degenerate = 0

    for j in ctx.active:
        j = int(j)
        pool = screening_pool(int(departments.tiers[j]), cohort.tiers)
        if pool.size == 0:
            interviews[j] = np.empty(0, dtype=np.int64)
            pool_by[j] = pool
            f_by[j] = np.empty(0)
            vbar_by[j] = np.empty(0)
            u_star_by[j] = np.empty(0)
            continue
        if ctx.signal.kind == "aea_signals":
            f_eff = aea_effective_alignment(pool, j, ctx.signal.signals)
        else:
            f_eff = np.where(cohort.participates[pool], ctx.f_rep[pool, j], floors[j])
        w_j = departments.weights[j]
        vbar = cohort.qualities[pool] @ w_j
        u_eff = department_utility(cohort.qualities[pool], f_eff, w_j, config.utility_form, config.gamma)
        k_j = int(departments.capacity[j])
        s_j = np.full(pool.size, departments.prestige[j])
        if calibrated:
            draws, uhat = predict_expected_utilities(predictor, u_eff, s_j, vbar, f_eff)
            stats = pairwise_stats(draws)
            cal = max_stat_quantile(stats, config.alpha)
            bounds = rank_lower_bounds(stats, cal.c)
            sel = select_interviews(uhat, bounds, k_j, cand_ids=pool)
            degenerate += int(cal.degenerate)
            if collect_diagnostics:
                included = np.zeros(pool.size, dtype=bool)
                included[sel] = True
                diagnostics[j] = {
                    "cand_ids": pool.copy(),
                    "u_hat": uhat.copy(),
                    "rank_lower": bounds.copy(),
                    "included": included,
                }
        else:
            pi = predictor.predict(s_j, vbar, f_eff)
            uhat = u_eff * pi
            order = np.lexsort((pool, -uhat))
            sel = order[: min(k_j, pool.size)]
        interviews[j] = pool[sel]
        pool_by[j] = pool
        f_by[j] = f_eff
        vbar_by[j] = vbar
        u_star_by[j] = department_utility(
            cohort.qualities[pool], ctx.f_true[pool, j], w_j, config.utility_form, config.gamma
        )

    matches, match_round, records = _offer_rounds(ctx, departments, interviews, pool_by, f_by, vbar_by)

    cand_value = np.zeros(n)
    hire_utility: dict[int, float] = {}
    for j, c in matches.items():
        cand_value[c] = ctx.v_true[c, j]
        pos = int(np.searchsorted(pool_by[j], c))
        hire_utility[j] = float(u_star_by[j][pos])
    v_pool = {j: ctx.v_true[pool_by[j], j] for j in pool_by}
    blocking, eligible = count_blocking_pairs(pool_by, u_star_by, v_pool, matches, cand_value)

    return YearOutcome(
        year=ctx.year,
        mechanism=ctx.mechanism,
        rho=ctx.signal.rho,
        active=ctx.active,
        dept_tiers=departments.tiers,
        cand_tiers=cohort.tiers,
        participates=cohort.participates,
        interviews=interviews,
        matches=matches,
        match_round=match_round,
        records=records,
        cand_value=cand_value,
        hire_utility=hire_utility,
        blocking_count=blocking,
        eligible_pairs=eligible,
        degenerate_count=degenerate,
        diagnostics=diagnostics if collect_diagnostics else None,
    )


def _offer_rounds(
    ctx: YearContext,
    departments: Departments,
    interviews: dict[int, np.ndarray],
    pool_by: dict[int, np.ndarray],
    f_by: dict[int, np.ndarray],
    vbar_by: dict[int, np.ndarray],
) -> tuple[dict[int, int], dict[int, str], list[OfferRecord]]:
    """First-round offers plus a single scramble round.

    Each department offers its top remaining interviewee; a candidate
    holding open offers accepts the best one immediately (ties to the lower
    department id) and leaves the market. Departments declined in the first
    round proceed down their lists for one scramble round; positions still
    open after that stay unfilled for the year. Every offer is recorded
    with the features the department saw.
    """
    matches: dict[int, int] = {}
    match_round: dict[int, str] = {}
    records: list[OfferRecord] = []
    taken: set[int] = set()
    ptr = {j: 0 for j in interviews}
    order = sorted(interviews)
    for rnd in range(2):
        offers: dict[int, list[int]] = {}
        for j in order:
            if j in matches:
                continue
            lst = interviews[j]
            p = ptr[j]
            while p < lst.size and int(lst[p]) in taken:
                p += 1
            ptr[j] = p
            if p >= lst.size:
                continue
            offers.setdefault(int(lst[p]), []).append(j)
        if not offers:
            break
        label = "first_round" if rnd == 0 else "scramble"
        for c in sorted(offers):
            js = offers[c]
            best = max(js, key=lambda j: (ctx.v_true[c, j], -int(departments.ids[j])))
            for j in js:
                pos = int(np.searchsorted(pool_by[j], c))
                records.append(
                    OfferRecord(
                        year=ctx.year,
                        dept_id=int(departments.ids[j]),
                        cand_id=c,
                        s=float(departments.prestige[j]),
                        vbar=float(vbar_by[j][pos]),
                        f=float(f_by[j][pos]),
                        offered=True,
                        accepted=(j == best),
                    )
                )
            matches[best] = c
            match_round[best] = label
            taken.add(c)
    return matches, match_round, records


def _da_year(config: MarketConfig, departments: Departments, ctx: YearContext) -> YearOutcome:
    """Centralized counterfactual: deferred acceptance on the same cohort.

    No interview stage and no offer records; active departments each post a
    single position, rank their screening pool by complete-information
    utility, and candidates rank active departments by V.
    """
    cohort = ctx.cohort
    n = cohort.qualities.shape[0]
    active = [int(j) for j in ctx.active]
    pool_by: dict[int, np.ndarray] = {}
    u_star_by: dict[int, np.ndarray] = {}
    dept_prefs: list[list[int]] = []
    for j in active:
        pool = screening_pool(int(departments.tiers[j]), cohort.tiers)
        u_star = department_utility(
            cohort.qualities[pool], ctx.f_true[pool, j], departments.weights[j], config.utility_form, config.gamma
        )
        pool_by[j] = pool
        u_star_by[j] = np.atleast_1d(u_star)
        order = np.lexsort((pool, -np.atleast_1d(u_star)))
        dept_prefs.append([int(pool[t]) for t in order])
    ids_active = departments.ids[active] if active else np.empty(0, dtype=np.int64)
    cand_prefs: list[list[int]] = []
    for i in range(n):
        if active:
            order = np.lexsort((ids_active, -ctx.v_true[i, active]))
            cand_prefs.append([int(t) for t in order])
        else:
            cand_prefs.append([])
    cand_match, dept_match = deferred_acceptance(cand_prefs, dept_prefs, capacities=[1] * len(active))

    matches: dict[int, int] = {}
    match_round: dict[int, str] = {}
    cand_value = np.zeros(n)
    hire_utility: dict[int, float] = {}
    for slot, cands in dept_match.items():
        if not cands:
            continue
        j = active[slot]
        c = cands[0]
        matches[j] = c
        match_round[j] = "first_round"
        cand_value[c] = ctx.v_true[c, j]
        pos = int(np.searchsorted(pool_by[j], c))
        hire_utility[j] = float(u_star_by[j][pos])
    v_pool = {j: ctx.v_true[pool_by[j], j] for j in pool_by}
    blocking, eligible = count_blocking_pairs(pool_by, u_star_by, v_pool, matches, cand_value)

    return YearOutcome(
        year=ctx.year,
        mechanism=ctx.mechanism,
        rho=0.0,
        active=ctx.active,
        dept_tiers=departments.tiers,
        cand_tiers=cohort.tiers,
        participates=cohort.participates,
        interviews={},
        matches=matches,
        match_round=match_round,
        records=[],
        cand_value=cand_value,
        hire_utility=hire_utility,
        blocking_count=blocking,
        eligible_pairs=eligible,
        degenerate_count=0,
    )


def _learner_spec(config: MarketConfig) -> LearnerSpec:
    return LearnerSpec(kind=config.learner, reg_scale=config.reg_scale)


def run_burn_in(config: MarketConfig, departments: Departments, rep: int = 0) -> History:
    """burn_in_years cycles at rho = 0 with plug-in ranking.

    The first year has no history at all and runs on the constant-0.5
    acceptance model; later burn-in years refit a single model on everything
    so far. Returns the accumulated offer history.
    """
    history = History.empty()
    spec = _learner_spec(config)
    mech = MechanismSpec(kind="questionnaire", rho=0.0)
    for year in range(1, config.burn_in_years + 1):
        ctx = build_year_context(config, departments, mech, rep, year)
        if len(history) == 0:
            model = ConstantModel(rate=0.5)
        else:
            model = fit_acceptance_model(history, spec, seed=[config.seed, rep, year, STREAM_BOOTSTRAP])
        outcome = simulate_year(config, departments, ctx, model)
        history = history.extend(outcome.records)
    return history


def run_main_years(
    config: MarketConfig,
    mech: MechanismSpec,
    rep: int,
    departments: Departments,
    burn_history: History | None = None,
    collect_diagnostics: bool = False,
) -> Iterator[tuple[YearOutcome, History]]:
    """Main-phase years with the full bootstrap-calibrated pipeline.

    Yields (outcome, history-so-far) per year; the ensemble is refit once a
    year on the cumulative history. The deferred-acceptance arm ignores the
    history entirely.
    """
    history = burn_history if burn_history is not None else History.empty()
    spec = _learner_spec(config)
    start = config.burn_in_years + 1
    for year in range(start, start + config.years):
        ctx = build_year_context(config, departments, mech, rep, year)
        if mech.kind == "deferred_acceptance":
            yield _da_year(config, departments, ctx), history
            continue
        ensemble = bootstrap_ensemble(
            history, config.B, spec, seed=[config.seed, rep, year, STREAM_BOOTSTRAP]
        )
        outcome = simulate_year(config, departments, ctx, ensemble, collect_diagnostics)
        history = history.extend(outcome.records)
        yield outcome, history


def run_horizon(
    config: MarketConfig,
    mech: MechanismSpec,
    rep: int = 0,
    departments: Departments | None = None,
    burn_history: History | None = None,
    collect_diagnostics: bool = False,
) -> HorizonResult:
    """Burn-in plus the main phase for one replication of one arm."""
    if departments is None:
        raise ValueError("departments are required; build them via data_io.department_profiles")
    if mech.kind != "deferred_acceptance" and burn_history is None and config.burn_in_years > 0:
        burn_history = run_burn_in(config, departments, rep)
    outcomes = []
    history = burn_history if burn_history is not None else History.empty()
    for outcome, history in run_main_years(
        config, mech, rep, departments, burn_history, collect_diagnostics
    ):
        outcomes.append(outcome)
    return HorizonResult(outcomes=outcomes, history=history)


def run_sweep(
    config: MarketConfig,
    arms: Sequence[MechanismSpec],
    departments: Departments,
    progress=None,
) -> list:
    """All replications of all arms; burn-in computed once per replication.

    Arms share every cohort/activation/participation draw, so differences
    between arms are pure mechanism effects. Returns tidy metric rows.
    """
    from .metrics import year_rows

    rows = []
    need_burn = any(a.kind != "deferred_acceptance" for a in arms) and config.burn_in_years > 0
    for rep in range(config.replications):
        burn = run_burn_in(config, departments, rep) if need_burn else None
        for arm in arms:
            for outcome, _ in run_main_years(config, arm, rep, departments, burn):
                rows.extend(year_rows(outcome, rep))
            if progress is not None:
                progress(rep, arm)
    return rows
