"""Simulator and inference library for signaling-based hiring markets.

The pipeline: candidates optionally disclose preference questionnaires,
departments learn offer-acceptance probabilities from past hiring seasons
with a bootstrap ensemble, rank their screening pools with simultaneous
rank confidence bounds, and fill positions through multi-round offers.
Baselines (no signaling, binary interest flags, centralized deferred
acceptance) run on identical random streams for paired comparison.
"""

from .acceptance import (
    BootstrapEnsemble,
    History,
    LearnerSpec,
    bootstrap_ensemble,
    fit_acceptance_model,
    predict_expected_utilities,
)
from .alignment import (
    alignment_score,
    candidate_utility,
    department_utility,
    effective_alignment,
    nondisclosure_floor,
)
from .data_io import (
    DataFormatError,
    department_profiles,
    generate_departments,
    load_config,
    load_departments,
)
from .engine import (
    Cohort,
    Departments,
    YearOutcome,
    run_burn_in,
    run_horizon,
    run_main_years,
    run_sweep,
    simulate_year,
)
from .mechanisms import (
    MechanismSpec,
    count_blocking_pairs,
    deferred_acceptance,
    misreport_gain_probe,
)
from .metrics import MetricRow, aggregate, summarize, write_metrics_csv, year_rows
from .model import (
    CandidateProfile,
    ConfigError,
    DepartmentProfile,
    MarketConfig,
    OfferRecord,
    rng_stream,
)
from .probes import (
    coverage_suite,
    da_stability_suite,
    degenerate_reduction_suite,
    dept_informativeness_probe,
)
from .ranking import max_stat_quantile, pairwise_stats, rank_lower_bounds, select_interviews

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "MarketConfig",
    "ConfigError",
    "DepartmentProfile",
    "CandidateProfile",
    "OfferRecord",
    "rng_stream",
    "alignment_score",
    "nondisclosure_floor",
    "effective_alignment",
    "department_utility",
    "candidate_utility",
    "History",
    "LearnerSpec",
    "BootstrapEnsemble",
    "fit_acceptance_model",
    "bootstrap_ensemble",
    "predict_expected_utilities",
    "pairwise_stats",
    "max_stat_quantile",
    "rank_lower_bounds",
    "select_interviews",
    "MechanismSpec",
    "deferred_acceptance",
    "count_blocking_pairs",
    "misreport_gain_probe",
    "Departments",
    "Cohort",
    "YearOutcome",
    "simulate_year",
    "run_burn_in",
    "run_main_years",
    "run_horizon",
    "run_sweep",
    "MetricRow",
    "year_rows",
    "aggregate",
    "summarize",
    "write_metrics_csv",
    "coverage_suite",
    "degenerate_reduction_suite",
    "da_stability_suite",
    "dept_informativeness_probe",
    "DataFormatError",
    "generate_departments",
    "load_departments",
    "department_profiles",
    "load_config",
]
