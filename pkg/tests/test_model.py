"""Configuration validation, RNG streams, and tier assignment."""

import dataclasses

import numpy as np
import pytest

from sigmatch.model import (
    ConfigError,
    MarketConfig,
    OfferRecord,
    assign_tiers,
    candidate_quality_index,
    candidate_tiers,
    department_tiers,
    rng_stream,
    screening_pool,
)


def test_default_config_is_valid():
    cfg = MarketConfig()
    assert cfg.m == 103
    assert cfg.n == 300
    assert cfg.T == 4
    assert cfg.tier_boundaries == (10, 25, 50)


@pytest.mark.parametrize(
    "overrides",
    [
        {"m": 0},
        {"n": 0},
        {"alpha": 0.0},
        {"alpha": 1.0},
        {"rho": -0.1},
        {"rho": 1.5},
        {"B": 1},
        {"tier_boundaries": (25, 10, 50)},
        {"tier_boundaries": (10, 25, 200)},
        {"tier_boundaries": (0, 25, 50)},
        {"activation_prob": 1.5},
        {"beta": -0.2},
        {"capacity_default": 0},
        {"years": 0},
        {"burn_in_years": -1},
        {"utility_form": "nonsense"},
        {"learner": "nonsense"},
        {"seed": -1},
    ],
)
def test_invalid_configs_rejected(overrides):
    with pytest.raises(ConfigError):
        dataclasses.replace(MarketConfig(), **overrides)


def test_rng_stream_is_keyed_and_reproducible():
    a = rng_stream(7, 1, 2, 3).random(4)
    b = rng_stream(7, 1, 2, 3).random(4)
    c = rng_stream(7, 1, 2, 4).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_offer_record_requires_offer_before_acceptance():
    OfferRecord(year=1, dept_id=2, cand_id=3, s=0.5, vbar=0.4, f=0.8, offered=True, accepted=True)
    with pytest.raises(ValueError):
        OfferRecord(year=1, dept_id=2, cand_id=3, s=0.5, vbar=0.4, f=0.8, offered=False, accepted=True)


def test_department_tiers_by_prestige_rank():
    # 6 departments, boundaries (2, 4): ranks 1-2 tier 1, 3-4 tier 2, rest tier 3
    prestige = np.array([0.9, 0.2, 0.8, 0.5, 0.4, 0.1])
    tiers = department_tiers(prestige, (2, 4))
    assert tiers.tolist() == [1, 3, 1, 2, 2, 3]


def test_department_tiers_tie_broken_by_position():
    prestige = np.array([0.5, 0.5, 0.5])
    tiers = department_tiers(prestige, (1, 2))
    assert tiers.tolist() == [1, 2, 3]


def test_candidate_tiers_proportional_cutoffs():
    # m=6, boundaries (2, 4): candidate cutoffs round(9 * 2/6) = 3 and round(9 * 4/6) = 6.
    # Top 3 of 9 candidates are tier 1, next 3 tier 2, rest tier 3.
    index = np.array([0.9, 0.1, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2])
    tiers = candidate_tiers(index, (2, 4), m=6)
    assert tiers.tolist() == [1, 3, 1, 1, 2, 2, 2, 3, 3]


def test_candidate_quality_index_is_unweighted_mean():
    q = np.array([[0.2, 0.4], [1.0, 0.0]])
    assert np.allclose(candidate_quality_index(q), [0.3, 0.5])


def test_screening_pool_is_union_of_tiers_up_to_dept_tier():
    cand_tiers = np.array([1, 2, 3, 1, 4, 2])
    assert screening_pool(2, cand_tiers).tolist() == [0, 1, 3, 5]
    assert screening_pool(1, cand_tiers).tolist() == [0, 3]
    assert screening_pool(4, cand_tiers).tolist() == [0, 1, 2, 3, 4, 5]


def test_assign_tiers_consistent_with_parts():
    cfg = MarketConfig(m=6, n=9, tier_boundaries=(2, 4), seed=5)
    rng = rng_stream(cfg.seed, 0)
    prestige = rng.random(cfg.m)
    qualities = rng.random((cfg.n, cfg.p_v))
    dept, cand = assign_tiers(prestige, qualities, cfg)
    assert np.array_equal(dept, department_tiers(prestige, cfg.tier_boundaries))
    assert np.array_equal(cand, candidate_tiers(candidate_quality_index(qualities), cfg.tier_boundaries, cfg.m))


def test_tier_counts_at_default_scale():
    rng = rng_stream(11, 0)
    prestige = rng.random(103)
    dept = department_tiers(prestige, (10, 25, 50))
    counts = np.bincount(dept, minlength=5)[1:]
    assert counts.tolist() == [10, 15, 25, 53]
    index = rng.random(300)
    cand = candidate_tiers(index, (10, 25, 50), m=103)
    # round(300 * 10/103) = 29, round(300 * 25/103) = 73, round(300 * 50/103) = 146
    ccounts = np.bincount(cand, minlength=5)[1:]
    assert ccounts.tolist() == [29, 44, 73, 154]
