"""
Mechanism Workflow - Orchestrates the direct mechanism for one scenario
Turns reported profiles into a complete MechanismOutcome: virtual
valuations, allocation and purchases, threshold payments and a witness
assignment. Optional faults corrupt the outcome for harness power checks.
"""

import logging
import os
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import InputValidationError
from core.market import MarketStructure, ReportedProfile, Scenario
from core.valuation import ValuationModel, virtual_valuation
from services.allocator import MechanismAllocation, SupplyRule, TieBreak, allocate
from services.feasibility import DecisionPair, top_up_purchases, witness_assignment
from services.payments import MechanismOutcome, threshold_payment

logger = logging.getLogger(__name__)


class MechanismFault(str, Enum):
    """Deliberate corruptions of the optimal mechanism."""

    NONE = "none"
    HALVED_PAYMENTS = "halved-payments"
    DOUBLED_PAYMENTS = "doubled-payments"
    SERVE_EVERYONE = "serve-everyone"

    @property
    def payment_factor(self) -> float:
        if self is MechanismFault.HALVED_PAYMENTS:
            return 0.5
        if self is MechanismFault.DOUBLED_PAYMENTS:
            return 2.0
        return 1.0


def configured_workers(default: int = 1) -> int:
    """Worker count from AUCTION_THREADS; affects speed only."""
    raw = os.getenv("AUCTION_THREADS")
    if raw is None or not raw.strip():
        return default
    try:
        workers = int(raw)
    except ValueError:
        raise InputValidationError(f"AUCTION_THREADS must be an integer, got {raw!r}")
    if workers < 1:
        raise InputValidationError(f"AUCTION_THREADS must be at least 1, got {workers}")
    return workers


class FlexibleAuctionWorkflow:
    """
    Controller for the optimal auction on one scenario.

    Holds the market, the consumer models and the mechanism options, and
    exposes the pieces the Monte Carlo harness needs (virtual valuations,
    honest allocation, fault application) next to the one-shot run().
    """

    def __init__(self, scenario: Scenario, rule: SupplyRule = SupplyRule.CAPPED,
                 tie_break: TieBreak = TieBreak.LOWER_INDEX_FIRST,
                 fault: MechanismFault = MechanismFault.NONE):
        """
        Args:
            scenario: Market and consumers
            rule: Ranking rule for the free supply
            tie_break: Removal order among equal ranking weights
            fault: Corruption applied to allocations or payments
        """
        self.scenario = scenario
        self.rule = SupplyRule(rule)
        self.tie_break = TieBreak(tie_break)
        self.fault = MechanismFault(fault)
        self.logger = logging.getLogger(__name__)

        if self.fault is not MechanismFault.NONE:
            self.logger.info(f"Mechanism runs with fault {self.fault.value}")

    @property
    def market(self) -> MarketStructure:
        return self.scenario.market

    @property
    def models(self) -> List[ValuationModel]:
        return self.scenario.models

    # ============================================================================
    # Mechanism pieces
    # ----------------------------------------------------------------------------
    def virtual_valuations(self, profile: ReportedProfile) -> Tuple[float, ...]:
        """w(r_l, c_l) for every consumer, evaluated at the reported level."""
        return tuple(virtual_valuation(model, r, c) for model, r, c in zip(self.models, profile.r, profile.c))

    def allocate_virtual(self, w: Sequence[float], c: Sequence[int]) -> MechanismAllocation:
        """Honest allocation for given virtual valuations."""
        return allocate(w, c, self.market, self.rule, self.tie_break)

    def decide(self, allocation: MechanismAllocation, c: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Allocation and purchases actually carried out, after the fault."""
        if self.fault is MechanismFault.SERVE_EVERYONE:
            xi = (1,) * len(c)
            return xi, top_up_purchases(xi, c, allocation.g, self.market)
        return allocation.xi, allocation.g

    def scale_payments(self, t):
        """Payments actually charged, after the fault."""
        factor = self.fault.payment_factor
        if factor == 1.0:
            return t
        return np.asarray(t, dtype=float) * factor

    # ============================================================================
    # One-shot run
    # ----------------------------------------------------------------------------
    def run(self, profile: ReportedProfile, true_levels: Optional[Sequence[int]] = None,
            explain: bool = False) -> MechanismOutcome:
        """
        Runs the mechanism on a reported profile.

        Args:
            profile: Reports (r, c)
            true_levels: True levels b; when given, c <= b is enforced
            explain: Attach the full allocation trace

        Returns:
            MechanismOutcome: Allocation, purchases, payments, thresholds,
            profit and witness assignment
        """
        if profile.size != self.scenario.size:
            raise InputValidationError(f"Profile has {profile.size} reports for {self.scenario.size} consumers")
        profile.validate(self.market.k, true_levels)

        w = self.virtual_valuations(profile)
        allocation = self.allocate_virtual(w, profile.c)
        schedule = threshold_payment(allocation.vthr, self.models, profile.c, allocation.xi)

        xi, g = self.decide(allocation, profile.c)
        t = tuple(float(x) for x in self.scale_payments(schedule.t))

        costs = sum(price * bought for price, bought in zip(self.market.p, g))
        profit = sum(t) - costs
        virtual_objective = sum(x * value for x, value in zip(xi, w)) - costs

        witness = witness_assignment(DecisionPair(xi=xi, g=g), profile.c, self.market)
        self.logger.info(f"Served {sum(xi)} of {len(xi)} consumers, bought {g}, profit {profit:.6g}")

        return MechanismOutcome(
            xi=xi,
            g=g,
            t=t,
            theta_thresholds=schedule.theta_thresholds,
            virtual_thresholds=allocation.vthr,
            seller_profit=profit,
            virtual_objective=virtual_objective,
            witness=witness,
            trace=allocation.trace if explain else None,
        )
