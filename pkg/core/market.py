"""
Market Types - Market structure, consumer types, reports and scenarios
Goods are represented by class counts only; band i holds the goods of
B_i minus B_(i-1).
"""

import logging
from dataclasses import dataclass, field
from itertools import accumulate
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json

from core.exceptions import InputValidationError
from core.valuation import ValuationModel

logger = logging.getLogger(__name__)


@dataclass_json
@dataclass(frozen=True)
class MarketStructure:
    """
    Nested market: k classes, free supply m per band and unit purchase
    prices p, strictly decreasing in the class index.
    """

    k: int
    m: Tuple[int, ...]
    p: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))

        if self.k < 1:
            raise InputValidationError(f"Market needs k >= 1 classes, got {self.k}")
        if len(self.m) != self.k or len(self.p) != self.k:
            raise InputValidationError(f"Supply {self.m} and prices {self.p} must both have {self.k} entries")
        if any(x < 0 for x in self.m):
            raise InputValidationError(f"Free supply {self.m} must be non-negative")
        if any(x <= 0.0 for x in self.p):
            raise InputValidationError(f"Prices {self.p} must be positive")
        if any(hi <= lo for hi, lo in zip(self.p, self.p[1:])):
            raise InputValidationError(f"Prices {self.p} must be strictly decreasing")

    @property
    def cumulative_supply(self) -> Tuple[int, ...]:
        """Free goods usable by classes 1..i, for every i."""
        return tuple(accumulate(self.m))


@dataclass_json
@dataclass(frozen=True)
class ConsumerType:
    """True private type: valuation theta and flexibility level b."""

    theta: float
    b: int


@dataclass_json
@dataclass(frozen=True)
class ReportedProfile:
    """Reported valuations r and reported flexibility levels c."""

    r: Tuple[float, ...]
    c: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "c", tuple(int(x) for x in self.c))
        if len(self.r) != len(self.c):
            raise InputValidationError(f"{len(self.r)} valuations but {len(self.c)} levels reported")

    @property
    def size(self) -> int:
        return len(self.r)

    def validate(self, k: int, true_levels: Optional[Sequence[int]] = None) -> None:
        """
        Checks every c_i in 1..k and, given true levels, c_i <= b_i
        (consumers cannot over-report flexibility).
        """
        for index, level in enumerate(self.c):
            if not 1 <= level <= k:
                raise InputValidationError(f"Consumer {index} reports level {level} outside 1..{k}")
        if true_levels is not None:
            for index, (level, true_level) in enumerate(zip(self.c, true_levels)):
                if level > true_level:
                    raise InputValidationError(
                        f"Consumer {index} reports level {level} above its true level {true_level}")

    def demand_profile(self, k: int) -> Tuple[int, ...]:
        """n_i = number of consumers reporting class i."""
        counts = [0] * k
        for level in self.c:
            counts[level - 1] += 1
        return tuple(counts)


@dataclass(frozen=True)
class Consumer:
    """A consumer's valuation model and, optionally, its true type."""

    model: ValuationModel
    true_type: Optional[ConsumerType] = None


@dataclass(frozen=True)
class Scenario:
    """Market plus an ordered list of consumers and a master seed."""

    market: MarketStructure
    consumers: Tuple[Consumer, ...] = field(default_factory=tuple)
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "consumers", tuple(self.consumers))
        for index, consumer in enumerate(self.consumers):
            model = consumer.model
            if model.levels != self.market.k:
                raise InputValidationError(
                    f"Consumer {index} model has {model.levels} levels, market has {self.market.k}")
            true_type = consumer.true_type
            if true_type is None:
                continue
            if not 1 <= true_type.b <= self.market.k:
                raise InputValidationError(f"Consumer {index} true level {true_type.b} outside 1..{self.market.k}")
            lo, hi = model.support(true_type.b)
            if not lo <= true_type.theta <= hi:
                raise InputValidationError(
                    f"Consumer {index} true valuation {true_type.theta} outside [{lo}, {hi}]")

    @property
    def size(self) -> int:
        return len(self.consumers)

    @property
    def models(self) -> List[ValuationModel]:
        return [consumer.model for consumer in self.consumers]

    def truthful_profile(self) -> ReportedProfile:
        """Reports equal to the true types; every consumer needs one."""
        missing = [i for i, consumer in enumerate(self.consumers) if consumer.true_type is None]
        if missing:
            raise InputValidationError(f"Consumers {missing} have no true type")
        return ReportedProfile(
            r=tuple(consumer.true_type.theta for consumer in self.consumers),
            c=tuple(consumer.true_type.b for consumer in self.consumers),
        )


def sample_profile(scenario: Scenario, rng: np.random.Generator) -> Tuple[Tuple[float, ...], Tuple[int, ...]]:
    """
    Draws (theta_i, b_i) independently per consumer by inverse-cdf sampling.

    Args:
        scenario: Scenario whose consumer models are sampled
        rng: Seeded numpy generator

    Returns:
        Tuple of (valuations, levels); identical seeds give identical output
    """
    thetas: List[float] = []
    levels: List[int] = []
    for consumer in scenario.consumers:
        theta, level = consumer.model.sample(rng, 1)
        thetas.append(float(theta[0]))
        levels.append(int(level[0]))
    return tuple(thetas), tuple(levels)
