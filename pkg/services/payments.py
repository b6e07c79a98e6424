"""
Payments - Threshold payments and their integral-form cross-check
A served consumer pays the smallest valuation that would still have won
its good at its reported level; unserved consumers pay nothing.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json

from core.exceptions import InconsistentTraceError, InputValidationError, MonotonicityViolationError
from core.valuation import ValuationModel
from services.allocator import AllocationTrace
from services.feasibility import WitnessAssignment

logger = logging.getLogger(__name__)

DEFAULT_QUAD_POINTS = 64


@dataclass_json
@dataclass(frozen=True)
class PaymentSchedule:
    """Valuation thresholds (None when unreachable) and payments t."""

    theta_thresholds: Tuple[Optional[float], ...]
    t: Tuple[float, ...]


@dataclass_json
@dataclass(frozen=True)
class MechanismOutcome:
    """
    Complete outcome of one mechanism run.

    seller_profit is sum(t) - sum(p g); virtual_objective is
    sum(xi w) - sum(p g), the quantity the allocator maximizes.
    """

    xi: Tuple[int, ...]
    g: Tuple[int, ...]
    t: Tuple[float, ...]
    theta_thresholds: Tuple[Optional[float], ...]
    virtual_thresholds: Tuple[float, ...]
    seller_profit: float
    virtual_objective: float
    witness: Optional[WitnessAssignment] = None
    trace: Optional[AllocationTrace] = None


def theta_thresholds(model: ValuationModel, vthr, levels) -> np.ndarray:
    """
    Vectorized w^-1(vthr_j, c_j) for paired arrays; NaN where unreachable.

    Args:
        model: Valuation model shared by all entries
        vthr: Virtual thresholds
        levels: Reported levels

    Returns:
        np.ndarray: Valuation thresholds
    """
    vthr = np.asarray(vthr, dtype=float)
    levels = np.asarray(levels, dtype=int)
    result = np.full(vthr.shape, np.nan)
    for b in np.unique(levels):
        mask = levels == b
        result[mask] = model.inverse_virtual_valuation(vthr[mask], int(b))
    return result


def threshold_payment(vthr: Sequence[float], models: Sequence[ValuationModel],
                      c: Sequence[int], xi: Sequence[int]) -> PaymentSchedule:
    """
    Payments by inverting each consumer's virtual threshold.

    Args:
        vthr: Per-consumer virtual thresholds (>= 0)
        models: Per-consumer valuation models
        c: Reported levels
        xi: Allocation

    Returns:
        PaymentSchedule: theta_l = w_l^-1(vthr_l, c_l) and t_l = theta_l xi_l
    """
    if not len(vthr) == len(models) == len(c) == len(xi):
        raise InputValidationError("vthr, models, c and xi must have one entry per consumer")

    thresholds = []
    payments = []
    for l, (threshold, model, level, served) in enumerate(zip(vthr, models, c, xi)):
        if threshold < 0.0:
            raise InputValidationError(f"Virtual threshold {threshold} of consumer {l} is negative")
        theta = float(model.inverse_virtual_valuation(threshold, level))
        if np.isnan(theta):
            if served:
                raise InconsistentTraceError(
                    f"Consumer {l} is served but no valuation reaches virtual threshold {threshold}")
            thresholds.append(None)
            payments.append(0.0)
            continue
        thresholds.append(theta)
        payments.append(theta if served else 0.0)

    return PaymentSchedule(theta_thresholds=tuple(thresholds), t=tuple(payments))


def integral_payment(theta: float, allocation: Callable[[float], int], model: ValuationModel,
                     c: int, quad_points: int = DEFAULT_QUAD_POINTS) -> float:
    """
    theta xi(theta) - integral_{theta_min}^{theta} xi(s) ds for a step function xi.

    The integral is exact: the jump of s -> xi(s) is located by bisection
    (quad_points iterations) after monotonicity is checked on a probe grid
    of quad_points points.

    Args:
        theta: The consumer's valuation
        allocation: Maps a reported valuation s to the consumer's 0/1 allocation,
            everything else held fixed
        model: The consumer's valuation model
        c: Reported level
        quad_points: Probe grid size and bisection iteration bound

    Returns:
        float: The payment
    """
    if quad_points < 2:
        raise InputValidationError(f"quad_points must be at least 2, got {quad_points}")
    lo, hi = model.support(c)
    if not lo <= theta <= hi:
        raise InputValidationError(f"Valuation {theta} outside [{lo}, {hi}] at level {c}")

    probes = np.linspace(lo, theta, quad_points)
    outcomes = [int(allocation(float(s))) for s in probes]
    if any(later < earlier for earlier, later in zip(outcomes, outcomes[1:])):
        raise MonotonicityViolationError(f"Allocation is not monotone in the report on [{lo}, {theta}]")

    if not outcomes[-1]:
        return 0.0
    if outcomes[0]:
        return float(lo)

    # Bracket the jump between the last losing and the first winning probe
    first_win = outcomes.index(1)
    left, right = float(probes[first_win - 1]), float(probes[first_win])
    for _ in range(quad_points):
        mid = 0.5 * (left + right)
        if allocation(mid):
            right = mid
        else:
            left = mid
    jump = right
    return theta - (theta - jump)
