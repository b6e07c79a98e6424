"""
Scenario Loader - Validated scenario and report files
Parses JSON with pydantic models and builds the immutable domain objects.
"""

import json
import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.exceptions import AuctionError, InputValidationError
from core.market import Consumer, ConsumerType, MarketStructure, ReportedProfile, Scenario
from core.valuation import TruncatedExponentialModel, UniformLevelModel, ValuationModel

logger = logging.getLogger(__name__)


class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class UniformSpec(_Schema):
    family: Literal["uniform"]
    upper: List[float]
    prior: List[float]
    lower: float = 0.0

    def build(self) -> ValuationModel:
        return UniformLevelModel(upper=self.upper, prior=self.prior, lower=self.lower)


class TruncatedExponentialSpec(_Schema):
    family: Literal["truncated_exponential"]
    rate: List[float]
    prior: List[float]
    lower: float = 0.0
    upper: float

    def build(self) -> ValuationModel:
        return TruncatedExponentialModel(rate=self.rate, prior=self.prior, lower=self.lower, upper=self.upper)


ModelSpec = Annotated[Union[UniformSpec, TruncatedExponentialSpec], Field(discriminator="family")]


class TrueTypeSpec(_Schema):
    theta: float
    b: int


class ConsumerSpec(_Schema):
    model: ModelSpec
    true_type: Optional[TrueTypeSpec] = None


class ScenarioSpec(_Schema):
    k: int = Field(ge=1)
    m: List[int]
    p: List[float]
    consumers: List[ConsumerSpec] = Field(default_factory=list)
    seed: int = 0

    @model_validator(mode="after")
    def check_market(self) -> "ScenarioSpec":
        if len(self.m) != self.k or len(self.p) != self.k:
            raise ValueError(f"m and p must have k={self.k} entries")
        if any(x < 0 for x in self.m):
            raise ValueError("free supply m must be non-negative")
        if any(hi <= lo for hi, lo in zip(self.p, self.p[1:])):
            raise ValueError(f"prices {self.p} must be strictly decreasing")
        for index, consumer in enumerate(self.consumers):
            if len(consumer.model.prior) != self.k:
                raise ValueError(f"consumer {index} prior must have k={self.k} entries")
        return self


class ReportSpec(_Schema):
    r: List[float]
    c: List[int]


def _read_json(path: Union[str, Path]) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputValidationError(f"Cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InputValidationError(f"Invalid JSON in {path}: {e}")


def parse_scenario(data: dict) -> Scenario:
    """
    Builds a Scenario from already-decoded JSON.

    Args:
        data: Scenario document

    Returns:
        Scenario: Validated market and consumers
    """
    try:
        spec = ScenarioSpec.model_validate(data)
    except ValidationError as e:
        raise InputValidationError(f"Scenario schema violation: {e}")

    try:
        market = MarketStructure(k=spec.k, m=spec.m, p=spec.p)
        consumers = []
        for consumer in spec.consumers:
            model = consumer.model.build()
            model.validate_prior()
            true_type = None
            if consumer.true_type is not None:
                true_type = ConsumerType(theta=consumer.true_type.theta, b=consumer.true_type.b)
            consumers.append(Consumer(model=model, true_type=true_type))
        return Scenario(market=market, consumers=tuple(consumers), rng_seed=spec.seed)
    except AuctionError:
        raise
    except ValueError as e:
        raise InputValidationError(str(e))


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Reads and validates a scenario file."""
    scenario = parse_scenario(_read_json(path))
    logger.info(f"Loaded scenario {path} with {scenario.size} consumers and k={scenario.market.k}")
    return scenario


def load_reports(path: Union[str, Path]) -> ReportedProfile:
    """Reads a report file {"r": [...], "c": [...]}."""
    try:
        spec = ReportSpec.model_validate(_read_json(path))
    except ValidationError as e:
        raise InputValidationError(f"Report schema violation: {e}")
    return ReportedProfile(r=spec.r, c=spec.c)
