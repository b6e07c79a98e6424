import numpy as np
import pytest

from core.exceptions import InputValidationError
from core.market import (Consumer, ConsumerType, MarketStructure, ReportedProfile, Scenario,
                         sample_profile)
from core.valuation import UniformLevelModel


def test_market_structure_validation():
    market = MarketStructure(k=3, m=[1, 0, 2], p=[5, 3, 1])
    assert market.m == (1, 0, 2)
    assert market.p == (5.0, 3.0, 1.0)
    assert market.cumulative_supply == (1, 1, 3)

    with pytest.raises(InputValidationError):
        MarketStructure(k=2, m=[1, 0], p=[3.0, 5.0])
    with pytest.raises(InputValidationError):
        MarketStructure(k=2, m=[1, 0], p=[3.0, 3.0])
    with pytest.raises(InputValidationError):
        MarketStructure(k=0, m=[], p=[])
    with pytest.raises(InputValidationError):
        MarketStructure(k=2, m=[1], p=[5.0, 3.0])
    with pytest.raises(InputValidationError):
        MarketStructure(k=1, m=[-1], p=[5.0])
    with pytest.raises(InputValidationError):
        MarketStructure(k=1, m=[1], p=[0.0])


def test_reported_profile_levels():
    profile = ReportedProfile(r=[1.0, 2.0, 3.0], c=[1, 2, 2])
    assert profile.size == 3
    assert profile.demand_profile(3) == (1, 2, 0)
    profile.validate(2, true_levels=[1, 2, 3])

    with pytest.raises(InputValidationError):
        profile.validate(2, true_levels=[1, 1, 2])
    with pytest.raises(InputValidationError):
        profile.validate(1)
    with pytest.raises(InputValidationError):
        ReportedProfile(r=[1.0], c=[1, 2])


def test_scenario_checks_true_types():
    model = UniformLevelModel(upper=[20.0, 10.0], prior=[0.5, 0.5])
    market = MarketStructure(k=2, m=[1, 0], p=[5.0, 3.0])
    scenario = Scenario(market, [Consumer(model, ConsumerType(15.0, 1))])
    assert scenario.truthful_profile() == ReportedProfile(r=[15.0], c=[1])

    with pytest.raises(InputValidationError):
        Scenario(market, [Consumer(model, ConsumerType(15.0, 2))])
    with pytest.raises(InputValidationError):
        Scenario(MarketStructure(k=1, m=[1], p=[5.0]), [Consumer(model)])
    with pytest.raises(InputValidationError):
        Scenario(market, [Consumer(model)]).truthful_profile()


def test_sample_profile_reproducible_and_in_support():
    model = UniformLevelModel(upper=[20.0, 10.0], prior=[0.5, 0.5])
    scenario = Scenario(MarketStructure(k=2, m=[1, 1], p=[5.0, 3.0]), [Consumer(model)] * 4)

    first = sample_profile(scenario, np.random.default_rng(9))
    second = sample_profile(scenario, np.random.default_rng(9))
    assert first == second
    for theta, b in zip(*first):
        lo, hi = model.support(b)
        assert lo <= theta <= hi


def test_degenerate_prior_always_draws_that_level():
    model = UniformLevelModel(upper=[20.0, 10.0], prior=[0.0, 1.0])
    scenario = Scenario(MarketStructure(k=2, m=[1, 1], p=[5.0, 3.0]), [Consumer(model)])
    rng = np.random.default_rng(1)
    assert all(sample_profile(scenario, rng)[1] == (2,) for _ in range(200))
