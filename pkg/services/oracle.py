"""
Oracle - Exhaustive solver for the allocation and purchase program
Enumerates every binary allocation and every purchase vector up to a cap,
keeps the feasible ones and returns the lexicographically smallest maximizer
of sum(xi w) - sum(p g).
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Sequence, Tuple, Union

import numpy as np
from dataclasses_json import dataclass_json

from core.exceptions import InputValidationError, OracleSizeError
from core.market import MarketStructure
from services.allocator import SupplyRule, TieBreak, allocate, fixed_supply_thresholds
from services.feasibility import witness_assignment

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 12
ORACLE_MAX_CANDIDATES = 2 ** 24


@dataclass_json
@dataclass(frozen=True)
class OracleSolution:
    xi: Tuple[int, ...]
    g: Tuple[int, ...]
    objective: float
    candidates: int


def _purchase_caps(g_cap: Union[None, int, Sequence[int]], n: int, k: int) -> Tuple[int, ...]:
    if g_cap is None:
        return (n,) * k
    if isinstance(g_cap, (int, np.integer)):
        caps = (int(g_cap),) * k
    else:
        caps = tuple(int(x) for x in g_cap)
    if len(caps) != k or any(x < 0 for x in caps):
        raise InputValidationError(f"Purchase caps {caps} must be {k} non-negative integers")
    return caps


def solve_exact(w: Sequence[float], c: Sequence[int], market: MarketStructure,
                g_cap: Union[None, int, Sequence[int]] = None) -> OracleSolution:
    """
    Brute-force maximizer over all feasible (xi, g) with g <= g_cap.

    Args:
        w: Virtual valuations
        c: Reported levels
        market: Market structure
        g_cap: Per-class purchase bound; an int applies to every class,
            None means N per class

    Returns:
        OracleSolution: Maximizer, its objective and the number of candidates
    """
    n, k = len(w), market.k
    if len(c) != n:
        raise InputValidationError(f"{n} virtual valuations for {len(c)} levels")
    if any(not 1 <= level <= k for level in c):
        raise InputValidationError(f"Reported levels {tuple(c)} outside 1..{k}")
    if n > ORACLE_MAX_N:
        raise OracleSizeError(f"Oracle handles at most {ORACLE_MAX_N} consumers, got {n}")

    caps = _purchase_caps(g_cap, n, k)
    candidates = 2 ** n * int(np.prod([x + 1 for x in caps]))
    if candidates > ORACLE_MAX_CANDIDATES:
        raise OracleSizeError(f"{candidates} candidates exceed the limit {ORACLE_MAX_CANDIDATES}")

    # Rows come out in lexicographic order, so argmax picks the smallest maximizer
    xi_rows = list(product((0, 1), repeat=n))
    g_rows = list(product(*(range(x + 1) for x in caps)))
    xi_grid = np.array(xi_rows, dtype=np.int64).reshape(len(xi_rows), n)
    g_grid = np.array(g_rows, dtype=np.int64).reshape(len(g_rows), k)

    one_hot = np.zeros((n, k), dtype=np.int64)
    one_hot[np.arange(n), np.asarray(c, dtype=np.int64) - 1] = 1
    demand = np.cumsum(xi_grid @ one_hot, axis=1)
    supply = np.cumsum(np.asarray(market.m, dtype=np.int64) + g_grid, axis=1)
    feasible = np.all(demand[:, None, :] <= supply[None, :, :], axis=2)

    value = xi_grid @ np.asarray(w, dtype=float)
    cost = g_grid @ np.asarray(market.p, dtype=float)
    objective = np.where(feasible, value[:, None] - cost[None, :], -np.inf)

    best = int(np.argmax(objective))
    row, col = divmod(best, g_grid.shape[0])
    logger.debug(f"Oracle scanned {candidates} candidates, best objective {objective.flat[best]}")

    return OracleSolution(
        xi=tuple(int(x) for x in xi_grid[row]),
        g=tuple(int(x) for x in g_grid[col]),
        objective=float(objective.flat[best]),
        candidates=candidates,
    )


def solve_fixed_supply(w: Sequence[float], c: Sequence[int], market: MarketStructure) -> OracleSolution:
    """Oracle with purchases disabled."""
    return solve_exact(w, c, market, g_cap=0)


# ============================================================================
# Allocator comparison on random instances
# ----------------------------------------------------------------------------
OBJECTIVE_TOLERANCE = 1e-9


@dataclass_json
@dataclass(frozen=True)
class RandomInstance:
    """Market, reported levels and virtual valuations of one generated instance."""

    index: int
    market: MarketStructure
    w: Tuple[float, ...]
    c: Tuple[int, ...]


@dataclass_json
@dataclass(frozen=True)
class OracleComparison:
    """Allocator against oracle on one instance, plus structural checks."""

    index: int
    allocator_objective: float
    oracle_objective: float
    fixed_supply_objective: float
    fixed_supply_oracle_objective: float
    objective_match: bool
    fixed_supply_match: bool
    no_wasted_purchases: bool
    purchase_class_discipline: bool

    @property
    def passed(self) -> bool:
        return (self.objective_match and self.fixed_supply_match
                and self.no_wasted_purchases and self.purchase_class_discipline)


def random_instance(seed: int, index: int, max_n: int = 6, max_k: int = 3) -> RandomInstance:
    """
    Instance index of the stream seeded by seed: N in 1..max_n, k in 1..max_k,
    m_i in 0..2, w uniform on [-5, 15), p strictly decreasing in (0, 10].
    """
    rng = np.random.default_rng([seed, index])
    n = int(rng.integers(1, max_n + 1))
    k = int(rng.integers(1, max_k + 1))
    m = tuple(int(x) for x in rng.integers(0, 3, size=k))
    p = tuple(float(x) for x in np.sort(10.0 - rng.uniform(0.0, 10.0, size=k))[::-1])
    w = tuple(float(x) for x in rng.uniform(-5.0, 15.0, size=n))
    c = tuple(int(x) for x in rng.integers(1, k + 1, size=n))
    return RandomInstance(index=index, market=MarketStructure(k=k, m=m, p=p), w=w, c=c)


def compare_with_oracle(instance: RandomInstance, rule: SupplyRule = SupplyRule.CAPPED,
                        tie_break: TieBreak = TieBreak.LOWER_INDEX_FIRST) -> OracleComparison:
    """
    Runs the allocator and both oracles on one instance.

    Besides the objectives, checks that every purchased good is used (served
    count = free-supply served count + sum g) and that the witness never
    hands a purchased class-i good to a consumer of class > i.

    Args:
        instance: Generated instance
        rule: SupplyRule for the allocator (default CAPPED)
        tie_break: TieBreak for the allocator (default lower index first)

    Returns:
        OracleComparison: Objectives and check flags
    """
    w, c, market = instance.w, instance.c, instance.market

    allocation = allocate(w, c, market, rule, tie_break)
    exact = solve_exact(w, c, market)
    fixed = fixed_supply_thresholds(w, c, market, tie_break)
    fixed_objective = sum(w[l] for l in fixed.survivors[-1])
    fixed_exact = solve_fixed_supply(w, c, market)

    free_served = sum(len(group) for group in allocation.trace.served_free)
    witness = witness_assignment(allocation.pair, c, market)
    wasted = witness is None or witness.purchased_per_band(market.k) != allocation.g
    discipline = witness is not None and all(
        not slot.purchased or c[slot.consumer] <= slot.band for slot in witness.slots
    )

    comparison = OracleComparison(
        index=instance.index,
        allocator_objective=allocation.objective,
        oracle_objective=exact.objective,
        fixed_supply_objective=fixed_objective,
        fixed_supply_oracle_objective=fixed_exact.objective,
        objective_match=abs(allocation.objective - exact.objective) <= OBJECTIVE_TOLERANCE,
        fixed_supply_match=abs(fixed_objective - fixed_exact.objective) <= OBJECTIVE_TOLERANCE,
        no_wasted_purchases=not wasted and sum(allocation.xi) == free_served + sum(allocation.g),
        purchase_class_discipline=discipline,
    )
    if not comparison.passed:
        logger.warning(f"Instance {instance.index} disagrees with the oracle: {comparison}")
    return comparison
