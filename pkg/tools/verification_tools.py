"""
Verification Tools - oracle-compare and verify commands
"""

from typing import Any, Dict, Optional

from joblib import Parallel, delayed

from controller.mechanism_workflow import FlexibleAuctionWorkflow, MechanismFault, configured_workers
from core.exceptions import OracleSizeError
from services.allocator import SupplyRule, TieBreak
from services.oracle import (ORACLE_MAX_CANDIDATES, ORACLE_MAX_N, compare_with_oracle,
                             random_instance)
from services.simulate import estimate_profit, verify_bic, verify_interim, verify_ir
from tools.tool_base import AuctionToolBase, InputValidator, ReportBuilder
from utils.scenario_loader import load_scenario

SUITES = ["bic", "ir", "profit", "interim"]
COMPARE_BATCH = 500


def _compare_batch(seed: int, start: int, stop: int, max_n: int, max_k: int,
                   rule: SupplyRule, tie_break: TieBreak) -> list:
    results = []
    for index in range(start, stop):
        instance = random_instance(seed, index, max_n, max_k)
        results.append((instance, compare_with_oracle(instance, rule, tie_break)))
    return results


class OracleCompareTool(AuctionToolBase):
    """Allocator against the exhaustive oracle on random instances."""

    def __init__(self):
        super().__init__(
            name="oracle-compare",
            description="Compares allocator objectives with the brute-force optimum on random instances",
        )

    def validate_input(self, instances: int, seed: int = 0, max_n: int = 6, max_k: int = 3,
                       rule: str = SupplyRule.CAPPED.value, workers: Optional[int] = None, **kwargs) -> None:
        InputValidator.positive_int(instances, "instances")
        if workers is not None:
            InputValidator.positive_int(workers, "workers")
        InputValidator.non_negative_int(seed, "seed")
        InputValidator.positive_int(max_n, "max_n")
        InputValidator.positive_int(max_k, "max_k")
        InputValidator.choice(rule, [r.value for r in SupplyRule], "rule")
        if max_n > ORACLE_MAX_N:
            raise OracleSizeError(f"max_n={max_n} exceeds the oracle limit {ORACLE_MAX_N}")
        if 2 ** max_n * (max_n + 1) ** max_k > ORACLE_MAX_CANDIDATES:
            raise OracleSizeError(f"max_n={max_n}, max_k={max_k} exceed {ORACLE_MAX_CANDIDATES} oracle candidates")

    def execute(self, instances: int, seed: int = 0, max_n: int = 6, max_k: int = 3,
                invert_ties: bool = False, rule: str = SupplyRule.CAPPED.value,
                workers: Optional[int] = None, **kwargs) -> Dict[str, Any]:
        tie_break = TieBreak.HIGHER_INDEX_FIRST if invert_ties else TieBreak.LOWER_INDEX_FIRST
        workers = workers or configured_workers()
        batches = [(start, min(start + COMPARE_BATCH, instances)) for start in range(0, instances, COMPARE_BATCH)]

        runs = Parallel(n_jobs=workers, prefer="threads")(
            delayed(_compare_batch)(seed, start, stop, max_n, max_k, SupplyRule(rule), tie_break)
            for start, stop in batches
        )
        results = [entry for batch in runs for entry in batch]
        failures = [(instance, comparison) for instance, comparison in results if not comparison.passed]
        worst_gap = max(abs(c.allocator_objective - c.oracle_objective) for _, c in results)

        builder = (ReportBuilder("oracle_comparison")
                   .add_input_info(instances=instances, seed=seed, max_n=max_n, max_k=max_k,
                                   invert_ties=invert_ties, rule=rule)
                   .add_result(mismatches=len(failures), worst_objective_gap=worst_gap))
        if failures:
            instance, comparison = failures[0]
            builder.add_result(counterexample={"instance": instance.to_dict(), "comparison": comparison.to_dict()})
        self.logger.info(f"Oracle comparison: {len(failures)} mismatches in {instances} instances")

        return (builder.add_verdict(not failures)
                .add_summary(f"{instances - len(failures)} of {instances} instances match the oracle")
                .build())


class VerifySuiteTool(AuctionToolBase):
    """Runs one Monte Carlo suite on a scenario."""

    def __init__(self):
        super().__init__(
            name="verify",
            description="Runs the bic, ir, profit or interim verification suite",
        )

    def validate_input(self, scenario_path: str, suite: str, trials: int = 10_000, seed: Optional[int] = None,
                       consumer: int = 0, fault: str = MechanismFault.NONE.value,
                       rule: str = SupplyRule.CAPPED.value, workers: Optional[int] = None, **kwargs) -> None:
        InputValidator.choice(suite, SUITES, "suite")
        InputValidator.positive_int(trials, "trials")
        if seed is not None:
            InputValidator.non_negative_int(seed, "seed")
        if workers is not None:
            InputValidator.positive_int(workers, "workers")
        InputValidator.non_negative_int(consumer, "consumer")
        InputValidator.choice(fault, [f.value for f in MechanismFault], "fault")
        InputValidator.choice(rule, [r.value for r in SupplyRule], "rule")

    def execute(self, scenario_path: str, suite: str, trials: int = 10_000, seed: Optional[int] = None,
                consumer: int = 0, fault: str = MechanismFault.NONE.value,
                rule: str = SupplyRule.CAPPED.value, workers: Optional[int] = None,
                **kwargs) -> Dict[str, Any]:
        scenario = load_scenario(scenario_path)
        workflow = FlexibleAuctionWorkflow(scenario, rule=SupplyRule(rule), fault=MechanismFault(fault))
        seed = scenario.rng_seed if seed is None else seed
        workers = workers or configured_workers()

        if suite == "profit":
            result = estimate_profit(workflow, trials, seed, workers)
            passed = result.consistent
        elif suite == "bic":
            result = verify_bic(workflow, consumer, trials, seed, workers=workers)
            passed = result.passed
        elif suite == "ir":
            result = verify_ir(workflow, consumer, trials, seed, workers=workers)
            passed = result.passed
        else:
            result = verify_interim(workflow, consumer, trials, seed, workers=workers)
            passed = result.passed

        return (ReportBuilder(f"{suite}_verification")
                .add_input_info(scenario=str(scenario_path), suite=suite, trials=trials, seed=seed,
                                consumer=consumer, fault=fault, rule=rule)
                .add_result(result=result.to_dict())
                .add_verdict(passed)
                .build())
