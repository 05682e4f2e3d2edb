"""Shared fixtures for the test suite.

The full-scale sweep in `desk_rows` costs several minutes of compute, so it
is built once per session and shared by every test that reads market-level
outcomes. Unit-test modules never request it and stay fast.
"""

import pytest

from sigmatch.data_io import department_profiles
from sigmatch.engine import Departments, run_sweep
from sigmatch.mechanisms import MechanismSpec
from sigmatch.model import MarketConfig

# Disclosure-rate grid used by the outcome-level checks. Endpoints give the
# no-disclosure and full-disclosure poles; the interior points trace the
# participation-advantage curve.
RHO_GRID = (0.0, 0.05, 0.2, 0.5, 0.9, 1.0)


@pytest.fixture(scope="session")
def desk_config() -> MarketConfig:
    """Reference configuration: every default, nothing overridden."""
    return MarketConfig()


@pytest.fixture(scope="session")
def desk_departments(desk_config):
    return Departments.from_profiles(department_profiles(None, desk_config))


@pytest.fixture(scope="session")
def desk_rows(desk_config, desk_departments):
    """Tidy metric rows for the questionnaire arm across the full rho grid.

    All replications share cohort, activation, and participation draws
    across arms, so any difference between grid points is a pure effect of
    the disclosure rate.
    """
    arms = [MechanismSpec(kind="questionnaire", rho=rho) for rho in RHO_GRID]
    return run_sweep(desk_config, arms, desk_departments)
