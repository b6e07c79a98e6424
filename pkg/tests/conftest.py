from pathlib import Path
from typing import Sequence

import pytest

from controller.mechanism_workflow import FlexibleAuctionWorkflow
from core.market import Consumer, ConsumerType, MarketStructure, Scenario
from core.valuation import UniformLevelModel
from utils.scenario_loader import load_scenario

TESTS_DIR = Path(__file__).resolve().parent
SCENARIOS_DIR = TESTS_DIR.parent / "scenarios"
FIXTURES_DIR = TESTS_DIR / "fixtures"


def scenario_path(name: str) -> str:
    return str(SCENARIOS_DIR / name)


def fixture_path(name: str) -> str:
    return str(FIXTURES_DIR / name)


def uniform_scenario(m: Sequence[int], p: Sequence[float], uppers: Sequence[Sequence[float]],
                     types=None, seed: int = 0) -> Scenario:
    """Scenario of uniform consumers with an even level prior."""
    k = len(m)
    consumers = []
    for index, upper in enumerate(uppers):
        true_type = ConsumerType(*types[index]) if types else None
        consumers.append(Consumer(UniformLevelModel(upper=upper, prior=[1.0 / k] * k), true_type))
    return Scenario(market=MarketStructure(k=k, m=m, p=p), consumers=consumers, rng_seed=seed)


@pytest.fixture
def two_level_scenario() -> Scenario:
    return load_scenario(scenario_path("two_level_purchase.json"))


@pytest.fixture
def single_consumer_workflow() -> FlexibleAuctionWorkflow:
    return FlexibleAuctionWorkflow(load_scenario(scenario_path("single_consumer_uniform.json")))


@pytest.fixture
def bic_k2_workflow() -> FlexibleAuctionWorkflow:
    return FlexibleAuctionWorkflow(load_scenario(scenario_path("bic_k2.json")))


@pytest.fixture
def bic_k3_workflow() -> FlexibleAuctionWorkflow:
    return FlexibleAuctionWorkflow(load_scenario(scenario_path("bic_k3.json")))


@pytest.fixture
def bic_purchase_workflow() -> FlexibleAuctionWorkflow:
    return FlexibleAuctionWorkflow(load_scenario(scenario_path("bic_purchase_k2.json")))
