"""
Allocator - Threshold allocation with costly supply
Runs the level-by-level removal procedure on the free supply, buys goods
for the leftover consumers whose virtual valuation beats the class price and
combines both into the final allocation with per-class virtual thresholds.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

from dataclasses_json import dataclass_json

from core.exceptions import InputValidationError, InternalConsistencyError
from core.market import MarketStructure
from services.feasibility import DecisionPair, is_feasible

# Logger configuration
logger = logging.getLogger(__name__)


class SupplyRule(str, Enum):
    """
    How free goods are ranked before purchases are decided.

    CAPPED ranks consumer l by min(w_l, p_{c_l}), the most a free good can be
    worth to l when a class-c_l good can always be bought at p_{c_l}. RAW
    ranks by w_l itself.
    """

    CAPPED = "capped"
    RAW = "raw"


class TieBreak(str, Enum):
    """Which consumer leaves a pool first when ranking weights tie."""

    LOWER_INDEX_FIRST = "lower-index-first"
    HIGHER_INDEX_FIRST = "higher-index-first"


@dataclass_json
@dataclass(frozen=True)
class AllocationTrace:
    """
    Every intermediate set of one allocator run, indexed by class.

    Consumer sets are lists of consumer indices. Fields filled by later
    steps stay None on a partial trace.
    """

    weights: Tuple[float, ...]
    positive_sets: Tuple[Tuple[int, ...], ...]
    pools: Tuple[Tuple[int, ...], ...]
    survivors: Tuple[Tuple[int, ...], ...]
    removal_counts: Tuple[int, ...]
    thresholds: Tuple[float, ...]
    served_free: Tuple[Tuple[int, ...], ...]
    eligible: Optional[Tuple[Tuple[int, ...], ...]] = None
    purchases: Optional[Tuple[int, ...]] = None
    virtual_thresholds: Optional[Tuple[float, ...]] = None
    served: Optional[Tuple[int, ...]] = None


@dataclass_json
@dataclass(frozen=True)
class MechanismAllocation:
    """Allocation, purchases and per-consumer virtual thresholds."""

    xi: Tuple[int, ...]
    g: Tuple[int, ...]
    vthr: Tuple[float, ...]
    objective: float
    trace: AllocationTrace

    @property
    def pair(self) -> DecisionPair:
        return DecisionPair(xi=self.xi, g=self.g)


def _check_inputs(w: Sequence[float], c: Sequence[int], market: MarketStructure) -> None:
    if len(w) != len(c):
        raise InputValidationError(f"{len(w)} virtual valuations for {len(c)} levels")
    for index, level in enumerate(c):
        if not 1 <= level <= market.k:
            raise InputValidationError(f"Consumer {index} has level {level} outside 1..{market.k}")


def _removal_key(weights: Sequence[float], raw: Sequence[float],
                 tie_break: TieBreak) -> Callable[[int], Tuple[float, float, int]]:
    if tie_break is TieBreak.HIGHER_INDEX_FIRST:
        return lambda l: (weights[l], raw[l], -l)
    return lambda l: (weights[l], raw[l], l)


def ranking_weights(w: Sequence[float], c: Sequence[int], market: MarketStructure,
                    rule: SupplyRule = SupplyRule.CAPPED) -> Tuple[float, ...]:
    """Weights the free supply is ranked by under the given rule."""
    if rule is SupplyRule.RAW:
        return tuple(float(x) for x in w)
    return tuple(min(float(x), market.p[level - 1]) for x, level in zip(w, c))


def fixed_supply_thresholds(w: Sequence[float], c: Sequence[int], market: MarketStructure,
                            tie_break: TieBreak = TieBreak.LOWER_INDEX_FIRST,
                            raw: Optional[Sequence[float]] = None) -> AllocationTrace:
    """
    Removal procedure on the free supply m.

    Consumers with w <= 0 are dropped. Level i pools the survivors of level
    i-1 with the positive class-i consumers and removes the
    (|pool| - sum_{j<=i} m_j)^+ lowest; the largest removed weight is the
    level threshold (0 when nobody is removed). The survivors of level k
    are served.

    Args:
        w: Ranking weights, one per consumer
        c: Reported levels
        market: Market structure
        tie_break: Removal order among equal weights
        raw: Uncapped virtual valuations; equal weights are ordered by
            these before the index (default w)

    Returns:
        AllocationTrace: Partial trace through served_free
    """
    _check_inputs(w, c, market)
    weights = tuple(float(x) for x in w)
    secondary = weights if raw is None else tuple(float(x) for x in raw)
    if len(secondary) != len(weights):
        raise InputValidationError(f"{len(secondary)} raw valuations for {len(weights)} weights")
    key = _removal_key(weights, secondary, tie_break)
    capacity = market.cumulative_supply

    positive_sets = tuple(
        tuple(l for l, level in enumerate(c) if level == i + 1 and weights[l] > 0.0)
        for i in range(market.k)
    )

    pools: List[Tuple[int, ...]] = []
    survivors: List[Tuple[int, ...]] = []
    removal_counts: List[int] = []
    thresholds: List[float] = []
    kept: List[int] = []
    for i in range(market.k):
        pool = sorted(kept + list(positive_sets[i]), key=key)
        removed = max(0, len(pool) - capacity[i])
        kept = pool[removed:]
        pools.append(tuple(sorted(pool)))
        survivors.append(tuple(sorted(kept)))
        removal_counts.append(removed)
        thresholds.append(weights[pool[removed - 1]] if removed else 0.0)

    final = survivors[-1]
    served_free = tuple(tuple(l for l in final if c[l] == i + 1) for i in range(market.k))

    return AllocationTrace(
        weights=weights,
        positive_sets=positive_sets,
        pools=tuple(pools),
        survivors=tuple(survivors),
        removal_counts=tuple(removal_counts),
        thresholds=tuple(thresholds),
        served_free=served_free,
    )


def purchase_eligible_sets(trace: AllocationTrace, w: Sequence[float], c: Sequence[int],
                           market: MarketStructure) -> Tuple[Tuple[int, ...], ...]:
    """Unserved class-i consumers with w_l > p_i, per class."""
    eligible = []
    for i in range(market.k):
        served = set(trace.served_free[i])
        eligible.append(tuple(
            l for l, level in enumerate(c)
            if level == i + 1 and l not in served and w[l] > market.p[i]
        ))
    return tuple(eligible)


def purchase_rule(trace: AllocationTrace, w: Sequence[float], c: Sequence[int],
                  market: MarketStructure) -> Tuple[int, ...]:
    """
    Buys one class-i good per purchase-eligible class-i consumer.

    Args:
        trace: Partial trace from fixed_supply_thresholds on the same inputs
        w: Virtual valuations
        c: Reported levels
        market: Market structure

    Returns:
        Tuple[int, ...]: g*, the number of goods bought per class
    """
    _check_inputs(w, c, market)
    return tuple(len(group) for group in purchase_eligible_sets(trace, w, c, market))


def class_virtual_thresholds(trace: AllocationTrace, market: MarketStructure) -> Tuple[float, ...]:
    """vthr_i = min(p_i, max(0, thr_i, ..., thr_k)) from the free-supply thresholds."""
    result = [0.0] * market.k
    running = 0.0
    for i in reversed(range(market.k)):
        running = max(running, trace.thresholds[i])
        result[i] = min(market.p[i], running)
    return tuple(result)


def final_allocation(trace: AllocationTrace, w: Sequence[float], c: Sequence[int],
                     market: MarketStructure) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    """
    Serves the free-supply survivors plus the purchase-eligible consumers.

    Away from exact ties this is the set {l : w_l > vthr_{c_l}}; at ties the
    procedure's own sets decide, which keeps every purchased good in use.

    Args:
        trace: Trace with eligible and purchases filled in
        w: Virtual valuations
        c: Reported levels
        market: Market structure

    Returns:
        Tuple of (xi, per-consumer virtual threshold vthr_{c_l})
    """
    if trace.eligible is None or trace.purchases is None:
        raise InternalConsistencyError("final_allocation needs a trace with purchases")

    served = set()
    for group in trace.served_free + trace.eligible:
        served.update(group)
    xi = tuple(1 if l in served else 0 for l in range(len(c)))

    class_vthr = class_virtual_thresholds(trace, market)
    vthr = tuple(class_vthr[level - 1] for level in c)

    pair = DecisionPair(xi=xi, g=trace.purchases)
    if not is_feasible(pair, c, market):
        raise InternalConsistencyError(f"Allocator produced infeasible pair xi={xi}, g={trace.purchases}")

    for l, (value, threshold) in enumerate(zip(w, vthr)):
        if bool(xi[l]) != (value > threshold):
            logger.debug(f"Consumer {l} sits on its threshold {threshold}")

    return xi, vthr


def allocate(w: Sequence[float], c: Sequence[int], market: MarketStructure,
             rule: SupplyRule = SupplyRule.CAPPED,
             tie_break: TieBreak = TieBreak.LOWER_INDEX_FIRST) -> MechanismAllocation:
    """
    Full allocator: ranking, free-supply thresholds, purchases, final allocation.

    Args:
        w: Virtual valuations at the reported levels
        c: Reported levels
        market: Market structure
        rule: Ranking rule for the free supply
        tie_break: Removal order among equal weights

    Returns:
        MechanismAllocation: xi, g*, vthr, objective sum(xi w) - sum(p g*) and trace
    """
    _check_inputs(w, c, market)
    trace = fixed_supply_thresholds(ranking_weights(w, c, market, rule), c, market, tie_break, raw=w)
    eligible = purchase_eligible_sets(trace, w, c, market)
    trace = replace(trace, eligible=eligible, purchases=tuple(len(group) for group in eligible))

    xi, vthr = final_allocation(trace, w, c, market)
    trace = replace(trace,
                    virtual_thresholds=class_virtual_thresholds(trace, market),
                    served=tuple(l for l, x in enumerate(xi) if x))

    objective = sum(x * float(value) for x, value in zip(xi, w)) \
        - sum(price * bought for price, bought in zip(market.p, trace.purchases))
    return MechanismAllocation(xi=xi, g=trace.purchases, vthr=vthr, objective=objective, trace=trace)
