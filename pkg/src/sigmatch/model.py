"""Core domain types for the matching-market simulator.

Departments post one position per hiring cycle and screen candidates drawn
from tier-restricted pools; candidates carry latent qualities, a true
preference vector over department attributes, and the vector they actually
report. Everything downstream (alignment, learning, ranking, matching) is
built on the types and tier machinery defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "MarketConfig",
    "DepartmentProfile",
    "CandidateProfile",
    "OfferRecord",
    "assign_tiers",
    "department_tiers",
    "candidate_tiers",
    "candidate_quality_index",
    "screening_pool",
    "rng_stream",
    "STREAM_COHORT",
    "STREAM_ACTIVATION",
    "STREAM_PARTICIPATION",
    "STREAM_BOOTSTRAP",
    "STREAM_MECHANISM",
    "STREAM_GENERATOR",
    "STREAM_WEIGHTS",
]


class ConfigError(ValueError):
    """Raised when a configuration value violates a model invariant."""


# Named sub-stream codes. Every random draw in a run comes from
# default_rng([seed, replication, year, code]), so streams never depend on
# the mechanism or disclosure rate: arms sharing a seed are exactly paired.
STREAM_COHORT = 0
STREAM_ACTIVATION = 1
STREAM_PARTICIPATION = 2
STREAM_BOOTSTRAP = 3
STREAM_MECHANISM = 4
STREAM_GENERATOR = 5
STREAM_WEIGHTS = 6


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for a (seed, *path) coordinate.

    Path components must be non-negative integers; they extend the seed
    entropy, so distinct paths give independent, reproducible streams.
    """
    return np.random.default_rng([seed, *path])


@dataclass(frozen=True)
class MarketConfig:
    """Immutable run configuration.

    Tier boundaries are prestige ranks: (10, 25, 50) splits departments into
    ranks 1-10, 11-25, 26-50, and 51+. Candidate tiers reuse the same
    population fractions. `capacity_default` is the interview capacity k_j;
    each active department has a single position to fill.
    """

    m: int = 103
    n: int = 300
    p_d: int = 15
    p_v: int = 5
    tier_boundaries: tuple[int, ...] = (10, 25, 50)
    years: int = 10
    burn_in_years: int = 20
    replications: int = 20
    rho: float = 1.0
    alpha: float = 0.1
    B: int = 50
    activation_prob: float = 0.6
    capacity_default: int = 5
    seed: int = 20260819
    beta: float = 0.6
    utility_form: str = "multiplicative"
    gamma: float = 1.0
    learner: str = "logistic"
    # Ridge strength per history row. Acceptance data is heavily censored
    # toward contested candidates, so an under-regularized fit chases the
    # rejection pattern of the current equilibrium and over-steers rankings.
    reg_scale: float = 4e-3

    def __post_init__(self) -> None:
        object.__setattr__(self, "tier_boundaries", tuple(int(b) for b in self.tier_boundaries))
        checks = [
            (self.m >= 1, "m must be >= 1"),
            (self.n >= 1, "n must be >= 1"),
            (self.p_d >= 1, "p_d must be >= 1"),
            (self.p_v >= 1, "p_v must be >= 1"),
            (self.years >= 1, "years must be >= 1"),
            (self.burn_in_years >= 0, "burn_in_years must be >= 0"),
            (self.replications >= 1, "replications must be >= 1"),
            (0.0 <= self.rho <= 1.0, "rho must lie in [0, 1]"),
            (0.0 < self.alpha < 1.0, "alpha must lie in (0, 1)"),
            (self.B >= 2, "B must be >= 2"),
            (0.0 <= self.activation_prob <= 1.0, "activation_prob must lie in [0, 1]"),
            (self.capacity_default >= 1, "capacity_default must be >= 1"),
            (self.seed >= 0, "seed must be a non-negative integer"),
            (0.0 <= self.beta <= 1.0, "beta must lie in [0, 1]"),
            (self.utility_form in ("multiplicative", "power"), "utility_form must be 'multiplicative' or 'power'"),
            (self.gamma > 0.0, "gamma must be > 0"),
            (self.learner in ("logistic", "mlp"), "learner must be 'logistic' or 'mlp'"),
            (self.reg_scale >= 0.0, "reg_scale must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        # An empty tuple is allowed and collapses the market to a single tier.
        b = self.tier_boundaries
        if any(x < 1 for x in b) or any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise ConfigError("tier_boundaries must be strictly increasing ranks >= 1")
        if self.m < self.T:
            raise ConfigError(f"m={self.m} departments cannot populate {self.T} tiers")
        if b and b[-1] > self.m:
            raise ConfigError(f"top boundary {b[-1]} exceeds department count {self.m}")

    @property
    def T(self) -> int:
        return len(self.tier_boundaries) + 1


@dataclass(frozen=True, eq=False)
class DepartmentProfile:
    """One department: public prestige, evaluation attributes, private quality weights."""

    dept_id: int
    name: str
    prestige: float              # s_j in [0, 1], 1 = most prestigious
    attributes: np.ndarray       # d_j in [0, 1]^p_d
    utility_weights: np.ndarray  # simplex weights over quality components
    capacity: int                # interview capacity k_j (one position per cycle)
    tier: int                    # 1 = top tier


@dataclass(frozen=True, eq=False)
class CandidateProfile:
    """One candidate in a yearly cohort."""

    cand_id: int
    qualities: np.ndarray       # v_i in [0, 1]^p_v
    true_prefs: np.ndarray      # q*_i in [0, 1]^p_d
    reported_prefs: np.ndarray  # what gets disclosed; equals true_prefs unless probed
    participates: bool = False
    tier: int = 0


@dataclass(frozen=True)
class OfferRecord:
    """One extended offer with the features the department saw when it offered."""

    year: int
    dept_id: int
    cand_id: int
    s: float
    vbar: float
    f: float
    offered: bool
    accepted: bool

    def __post_init__(self) -> None:
        if self.accepted and not self.offered:
            raise ValueError("an offer cannot be accepted without being extended")


def department_tiers(prestige: Sequence[float], boundaries: Sequence[int]) -> np.ndarray:
    """Tier per department from prestige ranks (rank 1 = highest prestige).

    Ties in prestige break by department index, so tiers are deterministic.
    """
    p = np.asarray(prestige, dtype=float)
    order = np.lexsort((np.arange(p.size), -p))
    ranks = np.empty(p.size, dtype=np.int64)
    ranks[order] = np.arange(1, p.size + 1)
    return 1 + np.searchsorted(np.asarray(boundaries, dtype=np.int64), ranks, side="left").astype(np.int64)


def candidate_quality_index(qualities: np.ndarray) -> np.ndarray:
    """Scalar candidate quality: the unweighted mean of the quality vector."""
    return np.asarray(qualities, dtype=float).mean(axis=1)


def candidate_tiers(quality_index: Sequence[float], boundaries: Sequence[int], m: int) -> np.ndarray:
    """Candidate tiers at the same population fractions as the department ranks.

    A department boundary at rank b becomes a candidate boundary at
    round(n * b / m); ties in the quality index break by candidate id.
    """
    q = np.asarray(quality_index, dtype=float)
    n = q.size
    cutoffs = np.array([round(n * b / m) for b in boundaries], dtype=np.int64)
    order = np.lexsort((np.arange(n), -q))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return 1 + np.searchsorted(cutoffs, ranks, side="left").astype(np.int64)


def assign_tiers(
    prestige: Sequence[float], qualities: np.ndarray, config: MarketConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Joint tiering of a department roster and a candidate cohort."""
    return (
        department_tiers(prestige, config.tier_boundaries),
        candidate_tiers(candidate_quality_index(qualities), config.tier_boundaries, config.m),
    )


def screening_pool(dept_tier: int, cand_tiers: np.ndarray) -> np.ndarray:
    """Indices of candidates a department of `dept_tier` may screen.

    Pools are nested downward: a tier-t department sees every candidate of
    tier <= t, so lower-prestige departments screen strictly larger pools.
    """
    return np.nonzero(np.asarray(cand_tiers) <= dept_tier)[0]
