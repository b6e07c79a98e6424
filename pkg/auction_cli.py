"""
Auction CLI - Command-line entry point for the flexible-consumer auction
Commands: run, oracle-compare, verify, check-regularity. JSON goes to
stdout (or --out), logs go to stderr. Exit codes: 0 pass, 1 verification
failure, 2 input error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from controller.mechanism_workflow import MechanismFault
from core.exceptions import InputValidationError
from core.valuation import DEFAULT_GRID_SIZE
from services.allocator import SupplyRule
from tools.registry import AuctionToolsRegistry
from tools.tool_base import EXIT_INPUT_ERROR
from utils.response_processor import ResponseProcessor

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_LOG_LEVEL = "WARNING"


def configured_log_level() -> int:
    """Numeric level from AUCTION_LOG_LEVEL; unknown names raise InputValidationError."""
    name = os.getenv("AUCTION_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper() or DEFAULT_LOG_LEVEL
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise InputValidationError(f"AUCTION_LOG_LEVEL must be a logging level name, got {name!r}")
    return level


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auction_cli",
        description="Optimal auction for flexible consumers with nested flexibility sets and costly supply",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    rules = [r.value for r in SupplyRule]

    run = commands.add_parser("run", help="Run the mechanism on a scenario")
    run.add_argument("scenario", help="Scenario JSON file")
    run.add_argument("--explain", action="store_true", help="Include the allocation trace")
    run.add_argument("--out", help="Write the JSON report to this file instead of stdout")
    run.add_argument("--reports", help="Report JSON file {\"r\": [...], \"c\": [...]}; default is truthful")
    run.add_argument("--rule", choices=rules, default=SupplyRule.CAPPED.value)

    compare = commands.add_parser("oracle-compare", help="Compare the allocator with the brute-force oracle")
    compare.add_argument("--instances", type=int, default=10_000)
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--max-n", type=int, default=6)
    compare.add_argument("--max-k", type=int, default=3)
    compare.add_argument("--invert-ties", action="store_true", help="Remove higher indices first on ties")
    compare.add_argument("--rule", choices=rules, default=SupplyRule.CAPPED.value)
    compare.add_argument("--workers", type=int, default=None, help="Overrides AUCTION_THREADS")

    verify = commands.add_parser("verify", help="Run a Monte Carlo verification suite")
    verify.add_argument("scenario", help="Scenario JSON file")
    verify.add_argument("--suite", choices=["bic", "ir", "profit", "interim"], required=True)
    verify.add_argument("--trials", type=int, default=10_000)
    verify.add_argument("--seed", type=int, default=None, help="Defaults to the scenario seed")
    verify.add_argument("--consumer", type=int, default=0)
    verify.add_argument("--fault", choices=[f.value for f in MechanismFault], default=MechanismFault.NONE.value)
    verify.add_argument("--rule", choices=rules, default=SupplyRule.CAPPED.value)
    verify.add_argument("--workers", type=int, default=None, help="Overrides AUCTION_THREADS")

    regularity = commands.add_parser("check-regularity", help="Check the hazard rate conditions")
    regularity.add_argument("scenario", help="Scenario JSON file")
    regularity.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses arguments, dispatches to the registered command and prints its JSON.

    Args:
        argv: Argument list (default sys.argv[1:])

    Returns:
        int: Process exit code
    """
    try:
        level = configured_log_level()
    except InputValidationError as e:
        print(ResponseProcessor.to_json({"error": type(e).__name__, "details": str(e)}))
        return EXIT_INPUT_ERROR
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT_ERROR if e.code else 0

    registry = AuctionToolsRegistry()
    tool = registry.get_tool(args.command)

    if args.command == "run":
        result = tool(scenario_path=args.scenario, explain=args.explain,
                      reports_path=args.reports, rule=args.rule)
    elif args.command == "oracle-compare":
        result = tool(instances=args.instances, seed=args.seed, max_n=args.max_n, max_k=args.max_k,
                      invert_ties=args.invert_ties, rule=args.rule, workers=args.workers)
    elif args.command == "verify":
        result = tool(scenario_path=args.scenario, suite=args.suite, trials=args.trials, seed=args.seed,
                      consumer=args.consumer, fault=args.fault, rule=args.rule, workers=args.workers)
    else:
        result = tool(scenario_path=args.scenario, grid_size=args.grid_size)

    out = getattr(args, "out", None)
    if out and result.exit_code == 0:
        Path(out).write_text(result.body + "\n", encoding="utf-8")
        logger.info(f"Report written to {out}")
    else:
        print(result.body)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
