"""
Feasibility - Membership test and constructive witnesses for the feasible set
A pair (xi, g) is feasible for reported levels c iff, for every class i,
the consumers served from classes <= i fit into the free plus purchased
goods of bands <= i.
"""

import logging
from dataclasses import dataclass
from itertools import accumulate
from typing import Dict, List, Optional, Sequence, Tuple

from dataclasses_json import dataclass_json

from core.exceptions import InputValidationError
from core.market import MarketStructure

logger = logging.getLogger(__name__)


@dataclass_json
@dataclass(frozen=True)
class DecisionPair:
    """Binary allocation vector xi and non-negative purchase vector g."""

    xi: Tuple[int, ...]
    g: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(int(x) for x in self.xi))
        object.__setattr__(self, "g", tuple(int(x) for x in self.g))
        if any(x not in (0, 1) for x in self.xi):
            raise InputValidationError(f"Allocation {self.xi} must be binary")
        if any(x < 0 for x in self.g):
            raise InputValidationError(f"Purchases {self.g} must be non-negative")


@dataclass_json
@dataclass(frozen=True)
class Slot:
    """One served consumer placed on a band, free or purchased."""

    consumer: int
    band: int
    purchased: bool


@dataclass_json
@dataclass(frozen=True)
class WitnessAssignment:
    """Concrete consumer-to-band matching certifying a feasible pair."""

    slots: Tuple[Slot, ...] = ()

    def band_of(self, consumer: int) -> Optional[int]:
        for slot in self.slots:
            if slot.consumer == consumer:
                return slot.band
        return None

    def purchased_per_band(self, k: int) -> Tuple[int, ...]:
        counts = [0] * k
        for slot in self.slots:
            if slot.purchased:
                counts[slot.band - 1] += 1
        return tuple(counts)


def _check_dimensions(pair: DecisionPair, c: Sequence[int], market: MarketStructure) -> None:
    if len(pair.xi) != len(c):
        raise InputValidationError(f"Allocation has {len(pair.xi)} entries for {len(c)} consumers")
    if len(pair.g) != market.k:
        raise InputValidationError(f"Purchases have {len(pair.g)} entries for {market.k} classes")
    if any(not 1 <= level <= market.k for level in c):
        raise InputValidationError(f"Reported levels {tuple(c)} outside 1..{market.k}")


def served_per_class(xi: Sequence[int], c: Sequence[int], k: int) -> List[int]:
    """Served consumers per reported class."""
    counts = [0] * k
    for served, level in zip(xi, c):
        if served:
            counts[level - 1] += 1
    return counts


def is_feasible(pair: DecisionPair, c: Sequence[int], market: MarketStructure) -> bool:
    """
    Evaluates the k cumulative inequalities
    sum_{l: c_l <= i} xi_l <= sum_{j <= i} (m_j + g_j).

    Args:
        pair: Allocation and purchase vectors
        c: Reported flexibility levels
        market: Market structure

    Returns:
        bool: True iff every cumulative inequality holds
    """
    _check_dimensions(pair, c, market)
    demand = accumulate(served_per_class(pair.xi, c, market.k))
    supply = accumulate(m + g for m, g in zip(market.m, pair.g))
    return all(d <= s for d, s in zip(demand, supply))


def witness_assignment(pair: DecisionPair, c: Sequence[int],
                       market: MarketStructure) -> Optional[WitnessAssignment]:
    """
    Builds a consumer-to-band matching for a feasible pair.

    Served consumers are taken lowest class first (then by index) and each
    takes the lowest band j <= c with a good left, free goods before
    purchased ones within a band.

    Args:
        pair: Allocation and purchase vectors
        c: Reported flexibility levels
        market: Market structure

    Returns:
        WitnessAssignment, or None when the pair is infeasible
    """
    _check_dimensions(pair, c, market)
    free = list(market.m)
    bought = list(pair.g)
    slots: List[Slot] = []

    served = sorted((level, index) for index, (level, x) in enumerate(zip(c, pair.xi)) if x)
    for level, index in served:
        for band in range(level):
            if free[band] > 0:
                free[band] -= 1
                slots.append(Slot(consumer=index, band=band + 1, purchased=False))
                break
            if bought[band] > 0:
                bought[band] -= 1
                slots.append(Slot(consumer=index, band=band + 1, purchased=True))
                break
        else:
            logger.debug(f"No band left for consumer {index} of class {level}")
            return None

    return WitnessAssignment(slots=tuple(sorted(slots, key=lambda slot: slot.consumer)))


def top_up_purchases(xi: Sequence[int], c: Sequence[int], g: Sequence[int],
                     market: MarketStructure) -> Tuple[int, ...]:
    """
    Cheapest purchase vector >= g that makes xi feasible.

    A shortfall at level i can only be covered by goods of class <= i;
    class i is the cheapest of those, so each deficit is bought there.
    """
    extra = [0] * market.k
    demand = list(accumulate(served_per_class(xi, c, market.k)))
    supply = 0
    for i in range(market.k):
        supply += market.m[i] + g[i] + extra[i]
        if demand[i] > supply:
            extra[i] = demand[i] - supply
            supply = demand[i]
    return tuple(int(base + more) for base, more in zip(g, extra))
