"""
Mechanism Tools - run and check-regularity commands
"""

from typing import Any, Dict, Optional

from controller.mechanism_workflow import FlexibleAuctionWorkflow
from core.valuation import DEFAULT_GRID_SIZE, check_regularity
from services.allocator import SupplyRule
from tools.tool_base import AuctionToolBase, InputValidator, ReportBuilder
from utils.scenario_loader import load_reports, load_scenario


class RunMechanismTool(AuctionToolBase):
    """Runs the mechanism on a scenario's true types or on a report file."""

    def __init__(self):
        super().__init__(
            name="run",
            description="Runs the optimal mechanism and reports allocation, purchases and payments",
        )

    def validate_input(self, scenario_path: str, rule: str = SupplyRule.CAPPED.value, **kwargs) -> None:
        InputValidator.choice(rule, [r.value for r in SupplyRule], "rule")

    def execute(self, scenario_path: str, explain: bool = False, reports_path: Optional[str] = None,
                rule: str = SupplyRule.CAPPED.value, **kwargs) -> Dict[str, Any]:
        scenario = load_scenario(scenario_path)
        truth = scenario.truthful_profile()
        profile = load_reports(reports_path) if reports_path else truth

        workflow = FlexibleAuctionWorkflow(scenario, rule=SupplyRule(rule))
        outcome = workflow.run(profile, true_levels=truth.c, explain=explain)

        result = outcome.to_dict()
        if not explain:
            result.pop("trace", None)
        self.logger.info(f"Mechanism run on {scenario_path}: profit {outcome.seller_profit:.6g}")

        return (ReportBuilder("mechanism_outcome")
                .add_input_info(scenario=str(scenario_path), reports=reports_path, rule=rule)
                .add_result(**result)
                .build())


class CheckRegularityTool(AuctionToolBase):
    """Lattice check of every consumer model in a scenario."""

    def __init__(self):
        super().__init__(
            name="check-regularity",
            description="Checks the monotone hazard rate conditions of every consumer model",
        )

    def validate_input(self, scenario_path: str, grid_size: int = DEFAULT_GRID_SIZE, **kwargs) -> None:
        InputValidator.positive_int(grid_size, "grid_size")

    def execute(self, scenario_path: str, grid_size: int = DEFAULT_GRID_SIZE, **kwargs) -> Dict[str, Any]:
        scenario = load_scenario(scenario_path)
        reports = []
        for index, model in enumerate(scenario.models):
            report = check_regularity(model, grid_size)
            reports.append({"consumer": index, "model": model.describe(), **report.to_dict()})
        passed = all(entry["passed"] for entry in reports)

        return (ReportBuilder("regularity")
                .add_input_info(scenario=str(scenario_path), grid_size=grid_size)
                .add_result(consumers=reports)
                .add_verdict(passed)
                .add_summary(f"{sum(e['passed'] for e in reports)} of {len(reports)} models regular")
                .build())
