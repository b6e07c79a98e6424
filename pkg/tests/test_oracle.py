import pytest

from core.exceptions import OracleSizeError
from core.market import MarketStructure
from services.allocator import SupplyRule, TieBreak
from services.oracle import (ORACLE_MAX_N, compare_with_oracle, random_instance, solve_exact,
                             solve_fixed_supply)


def test_empty_instance():
    solution = solve_exact([], [], MarketStructure(k=2, m=[1, 0], p=[5.0, 3.0]))
    assert solution.xi == ()
    assert solution.g == (0, 0)
    assert solution.objective == 0.0


def test_optimum_with_purchases():
    market = MarketStructure(k=2, m=[1, 0], p=[5.0, 3.0])
    solution = solve_exact([10.0, 6.0, 3.5], [1, 2, 2], market)
    assert solution.xi == (1, 1, 1)
    assert solution.g == (0, 2)
    assert solution.objective == pytest.approx(13.5)


def test_non_positive_values_give_empty_solution():
    market = MarketStructure(k=2, m=[2, 2], p=[5.0, 3.0])
    solution = solve_exact([-1.0, -4.0, 0.0], [1, 2, 2], market)
    assert solution.xi == (0, 0, 0)
    assert solution.g == (0, 0)
    assert solution.objective == 0.0


def test_fixed_supply_examples():
    assert solve_fixed_supply([5.0, 3.0], [1, 1], MarketStructure(k=1, m=[1], p=[1.0])).objective == 5.0
    market = MarketStructure(k=2, m=[1, 1], p=[5.0, 3.0])
    assert solve_fixed_supply([10.0, 4.0, 6.0], [1, 1, 2], market).objective == pytest.approx(16.0)
    market = MarketStructure(k=2, m=[0, 1], p=[5.0, 3.0])
    solution = solve_fixed_supply([10.0, 6.0], [1, 2], market)
    assert solution.objective == pytest.approx(6.0)
    assert solution.xi == (0, 1)


def test_lexicographically_smallest_maximizer():
    market = MarketStructure(k=1, m=[1], p=[5.0])
    assert solve_exact([2.0, 2.0], [1, 1], market).xi == (0, 1)


def test_size_guards():
    market = MarketStructure(k=1, m=[1], p=[5.0])
    n = ORACLE_MAX_N + 1
    with pytest.raises(OracleSizeError):
        solve_exact([1.0] * n, [1] * n, market)
    market = MarketStructure(k=3, m=[1, 1, 1], p=[5.0, 3.0, 1.0])
    with pytest.raises(OracleSizeError):
        solve_exact([1.0] * 12, [1] * 12, market, g_cap=20)


def test_allocator_matches_oracle_on_random_instances():
    """
    Allocator + purchase rule reach the exact optimum, the free-supply procedure
    reaches the zero-purchase optimum, no purchase is wasted and no purchased
    class-i good serves a consumer of a higher class
    """
    failures = [index for index in range(10_000)
                if not compare_with_oracle(random_instance(0, index)).passed]
    assert failures == []


def test_inverted_tie_break_still_optimal():
    for index in range(2000):
        instance = random_instance(1, index)
        comparison = compare_with_oracle(instance, tie_break=TieBreak.HIGHER_INDEX_FIRST)
        assert comparison.objective_match and comparison.fixed_supply_match


def test_raw_rule_never_beats_oracle():
    for index in range(1000):
        comparison = compare_with_oracle(random_instance(2, index), rule=SupplyRule.RAW)
        assert comparison.allocator_objective <= comparison.oracle_objective + 1e-9


def test_random_instances_are_reproducible():
    assert random_instance(5, 17) == random_instance(5, 17)
    instance = random_instance(5, 18, max_n=4, max_k=2)
    assert 1 <= len(instance.w) <= 4
    assert 1 <= instance.market.k <= 2
    assert all(-5.0 <= value < 15.0 for value in instance.w)
    assert all(0.0 < price <= 10.0 for price in instance.market.p)
