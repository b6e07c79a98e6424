"""
Simulate - Monte Carlo verification of the interim properties
Estimates interim allocations and payments, checks Bayesian incentive
compatibility, individual rationality and interim monotonicity, and
compares expected profit with expected virtual surplus.

Trials run in fixed blocks of BLOCK_SIZE; block b draws from
default_rng([seed, b]). Within a block every consumer is sampled once and
all reports of a table are evaluated on the same draws, so the arms of a
comparison share their random numbers. The mechanism argument is a
FlexibleAuctionWorkflow (or anything with the same scenario, models,
allocate_virtual, decide and scale_payments members).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dataclasses_json import dataclass_json
from joblib import Parallel, delayed

from core.exceptions import InconsistentTraceError, InputValidationError
from core.valuation import ValuationModel
from services.payments import theta_thresholds

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1024
SLACK_FACTOR = 3.0
DEFAULT_GRID_POINTS = 9
TOLERANCE = 1e-9
REPORTED_ROWS = 10

Report = Tuple[float, int]


@dataclass_json
@dataclass(frozen=True)
class InterimEstimate:
    """Interim allocation, payment and utility of one report."""

    consumer: int
    r: float
    c: int
    trials: int
    allocation: float
    allocation_se: float
    payment: float
    payment_se: float
    theta: float
    utility: float
    utility_se: float


@dataclass_json
@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one statistical suite; margin > 0 flags a violation."""

    suite: str
    passed: bool
    consumer: Optional[int]
    trials: int
    seed: int
    checks: int
    violations: int
    worst_margin: float
    worst: Optional[Dict[str, Any]] = None
    rows: List[Dict[str, Any]] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass_json
@dataclass(frozen=True)
class ProfitEstimate:
    """Expected profit against expected virtual surplus."""

    trials: int
    seed: int
    profit: float
    profit_se: float
    virtual_surplus: float
    virtual_surplus_se: float
    difference: float
    difference_se: float
    consistent: bool


# ============================================================================
# Sampling and block evaluation
# ----------------------------------------------------------------------------
def _blocks(trials: int) -> List[Tuple[int, int]]:
    if trials < 1:
        raise InputValidationError(f"trials must be at least 1, got {trials}")
    return [(b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE)) for b in range(math.ceil(trials / BLOCK_SIZE))]


def _draw(models: Sequence[ValuationModel], rng: np.random.Generator,
          size: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Types and truthful virtual valuations, shape (size, N)."""
    n = len(models)
    thetas = np.zeros((size, n))
    levels = np.ones((size, n), dtype=int)
    w = np.zeros((size, n))
    for j, model in enumerate(models):
        thetas[:, j], levels[:, j] = model.sample(rng, size)
        w[:, j] = model.virtual_valuations(thetas[:, j], levels[:, j])
    return thetas, levels, w


def _report_block(mechanism, consumer: int, reports: Sequence[Report], seed: int,
                  block: int, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """xi and t of the tested consumer, shape (len(reports), size)."""
    models = mechanism.models
    model = models[consumer]
    _, levels, w = _draw(models, np.random.default_rng([seed, block]), size)

    xi = np.zeros((len(reports), size))
    t = np.zeros((len(reports), size))
    for index, (r, c) in enumerate(reports):
        w_rows = w.copy()
        c_rows = levels.copy()
        w_rows[:, consumer] = float(model.virtual_valuation(r, c))
        c_rows[:, consumer] = c

        honest = np.zeros(size, dtype=bool)
        vthr = np.zeros(size)
        for trial in range(size):
            c_row = c_rows[trial].tolist()
            allocation = mechanism.allocate_virtual(w_rows[trial].tolist(), c_row)
            served, _ = mechanism.decide(allocation, c_row)
            honest[trial] = allocation.xi[consumer] == 1
            vthr[trial] = allocation.vthr[consumer]
            xi[index, trial] = served[consumer]

        thresholds = theta_thresholds(model, vthr, np.full(size, c))
        if np.any(honest & np.isnan(thresholds)):
            raise InconsistentTraceError(f"Consumer {consumer} served below an unreachable threshold")
        t[index] = mechanism.scale_payments(np.where(honest, thresholds, 0.0))
    return xi, t


def _truthful_block(mechanism, seed: int, block: int, size: int) -> Dict[str, np.ndarray]:
    """Every consumer truthful: types, allocations, payments and purchases."""
    models = mechanism.models
    market = mechanism.scenario.market
    thetas, levels, w = _draw(models, np.random.default_rng([seed, block]), size)
    n = len(models)

    xi = np.zeros((size, n))
    honest = np.zeros((size, n), dtype=bool)
    vthr = np.zeros((size, n))
    g = np.zeros((size, market.k))
    for trial in range(size):
        c_row = levels[trial].tolist()
        allocation = mechanism.allocate_virtual(w[trial].tolist(), c_row)
        served, bought = mechanism.decide(allocation, c_row)
        xi[trial] = served
        g[trial] = bought
        honest[trial] = np.asarray(allocation.xi, dtype=bool)
        vthr[trial] = allocation.vthr

    t = np.zeros((size, n))
    for j, model in enumerate(models):
        thresholds = theta_thresholds(model, vthr[:, j], levels[:, j])
        if np.any(honest[:, j] & np.isnan(thresholds)):
            raise InconsistentTraceError(f"Consumer {j} served below an unreachable threshold")
        t[:, j] = mechanism.scale_payments(np.where(honest[:, j], thresholds, 0.0))
    return {"theta": thetas, "w": w, "xi": xi, "t": t, "g": g}


def _run_blocks(function, mechanism, trials: int, seed: int, workers: int, *args) -> list:
    blocks = _blocks(trials)
    if workers <= 1 or len(blocks) == 1:
        return [function(mechanism, *args, seed, block, size) for block, size in blocks]
    # joblib keeps submission order, so the merge is independent of scheduling
    return Parallel(n_jobs=workers, prefer="threads")(
        delayed(function)(mechanism, *args, seed, block, size) for block, size in blocks
    )


def report_table(mechanism, consumer: int, reports: Sequence[Report], trials: int, seed: int,
                 workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Per-trial xi and t of one consumer for every report, common random numbers across reports."""
    _check_consumer(mechanism, consumer)
    for r, c in reports:
        lo, hi = mechanism.models[consumer].support(c)
        if not lo <= r <= hi:
            raise InputValidationError(f"Report {r} outside [{lo}, {hi}] at level {c}")
    parts = _run_blocks(_report_block, mechanism, trials, seed, workers, consumer, list(reports))
    return np.concatenate([p[0] for p in parts], axis=1), np.concatenate([p[1] for p in parts], axis=1)


def truthful_samples(mechanism, trials: int, seed: int, workers: int = 1) -> Dict[str, np.ndarray]:
    """Per-trial outcome arrays with every consumer reporting truthfully."""
    parts = _run_blocks(_truthful_block, mechanism, trials, seed, workers)
    return {key: np.concatenate([p[key] for p in parts], axis=0) for key in parts[0]}


# ============================================================================
# Statistics helpers
# ----------------------------------------------------------------------------
def _mean_se(samples: np.ndarray) -> Tuple[float, float]:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return float(samples.mean()), 0.0
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))


def _slack(se: float) -> float:
    return SLACK_FACTOR * se + TOLERANCE


def _check_consumer(mechanism, consumer: int) -> None:
    if not 0 <= consumer < mechanism.scenario.size:
        raise InputValidationError(f"Consumer {consumer} outside 0..{mechanism.scenario.size - 1}")


def level_grid(model: ValuationModel, b: int, points: int = DEFAULT_GRID_POINTS,
               theta_grid: Optional[Sequence[float]] = None) -> List[float]:
    """Valuation grid for one level: the given points inside the support, else an even grid."""
    lo, hi = model.support(b)
    if theta_grid is not None:
        return [float(x) for x in theta_grid if lo <= x <= hi]
    return [float(x) for x in np.linspace(lo, hi, points)]


def _summarize(suite: str, frame: pd.DataFrame, consumer: Optional[int], trials: int, seed: int,
               extra: Optional[Dict[str, Any]] = None, passed: Optional[bool] = None) -> VerificationReport:
    if frame.empty:
        return VerificationReport(suite=suite, passed=True if passed is None else passed, consumer=consumer,
                                  trials=trials, seed=seed, checks=0, violations=0, worst_margin=0.0,
                                  extra=extra or {})
    violations = int((frame["margin"] > 0.0).sum())
    ordered = frame.sort_values("margin", ascending=False, kind="mergesort")
    worst = ordered.iloc[0].to_dict()
    ok = violations == 0 if passed is None else passed and violations == 0
    if not ok:
        logger.warning(f"{suite} suite flagged {violations} of {len(frame)} checks for consumer {consumer}")
    return VerificationReport(
        suite=suite, passed=ok, consumer=consumer, trials=trials, seed=seed,
        checks=len(frame), violations=violations, worst_margin=float(worst["margin"]), worst=worst,
        rows=ordered.head(REPORTED_ROWS).to_dict("records"), extra=extra or {},
    )


# ============================================================================
# Suites
# ----------------------------------------------------------------------------
def estimate_interim(mechanism, consumer: int, report: Report, trials: int, seed: int,
                     theta: Optional[float] = None, workers: int = 1) -> InterimEstimate:
    """
    Interim allocation probability, expected payment and utility of one report.

    Args:
        mechanism: Workflow running the mechanism
        consumer: Index of the reporting consumer
        report: (r, c)
        trials: Number of draws of the other consumers' types
        seed: Master seed
        theta: True valuation the utility is evaluated at (default r)
        workers: Thread count for blocks

    Returns:
        InterimEstimate: Means and standard errors
    """
    r, c = float(report[0]), int(report[1])
    xi, t = report_table(mechanism, consumer, [(r, c)], trials, seed, workers)
    theta = r if theta is None else float(theta)
    allocation, allocation_se = _mean_se(xi[0])
    payment, payment_se = _mean_se(t[0])
    utility, utility_se = _mean_se(theta * xi[0] - t[0])
    return InterimEstimate(consumer=consumer, r=r, c=c, trials=trials,
                           allocation=allocation, allocation_se=allocation_se,
                           payment=payment, payment_se=payment_se,
                           theta=theta, utility=utility, utility_se=utility_se)


def verify_bic(mechanism, consumer: int, trials: int, seed: int,
               theta_grid: Optional[Sequence[float]] = None, levels: Optional[Sequence[int]] = None,
               points: int = DEFAULT_GRID_POINTS, workers: int = 1) -> VerificationReport:
    """
    Truth against every legal misreport on a valuation grid.

    For each true (theta, b) and each report (r, c) with c <= b, the paired
    per-trial gain theta (xi_mis - xi_truth) - (t_mis - t_truth) must not have
    a mean above SLACK_FACTOR paired standard errors.

    Args:
        mechanism: Workflow running the mechanism
        consumer: Index of the tested consumer
        trials: Trials per report
        seed: Master seed
        theta_grid: Valuations to test (default an even grid per level)
        levels: True levels to test (default all)
        points: Grid size when theta_grid is not given
        workers: Thread count for blocks

    Returns:
        VerificationReport: Worst margin and the most critical comparisons
    """
    _check_consumer(mechanism, consumer)
    model = mechanism.models[consumer]
    k = mechanism.scenario.market.k
    true_levels = list(levels) if levels is not None else list(range(1, k + 1))

    reports: List[Report] = [(r, c) for c in range(1, max(true_levels) + 1)
                             for r in level_grid(model, c, points, theta_grid)]
    xi, t = report_table(mechanism, consumer, reports, trials, seed, workers)

    rows = []
    for truth, (theta, b) in enumerate(reports):
        if b not in true_levels:
            continue
        for lie, (r, c) in enumerate(reports):
            if c > b or lie == truth:
                continue
            gain, se = _mean_se(theta * (xi[lie] - xi[truth]) - (t[lie] - t[truth]))
            rows.append({"theta": theta, "b": b, "r": r, "c": c,
                         "gain_mean": gain, "gain_se": se, "margin": gain - _slack(se)})

    report = _summarize("bic", pd.DataFrame(rows), consumer, trials, seed)
    logger.info(f"BIC suite: {report.checks} comparisons, {report.violations} violations")
    return report


def verify_ir(mechanism, consumer: int, trials: int, seed: int,
              theta_grid: Optional[Sequence[float]] = None, levels: Optional[Sequence[int]] = None,
              points: int = DEFAULT_GRID_POINTS, profiles: Optional[int] = None,
              workers: int = 1) -> VerificationReport:
    """
    Interim utility >= -slack on the grid, zero utility at the bottom of each
    support and non-negative realized utility on sampled truthful profiles.

    Args:
        mechanism: Workflow running the mechanism
        consumer: Index of the tested consumer
        trials: Trials per grid point
        seed: Master seed
        theta_grid: Valuations to test (default an even grid per level)
        levels: Levels to test (default all)
        points: Grid size when theta_grid is not given
        profiles: Number of ex-post profiles (default trials)
        workers: Thread count for blocks

    Returns:
        VerificationReport: Interim rows plus ex-post counts in extra
    """
    _check_consumer(mechanism, consumer)
    model = mechanism.models[consumer]
    k = mechanism.scenario.market.k
    tested = list(levels) if levels is not None else list(range(1, k + 1))

    reports: List[Report] = [(r, b) for b in tested for r in level_grid(model, b, points, theta_grid)]
    xi, t = report_table(mechanism, consumer, reports, trials, seed, workers)

    rows = []
    bottom_ok = True
    for index, (theta, b) in enumerate(reports):
        utility, se = _mean_se(theta * xi[index] - t[index])
        rows.append({"theta": theta, "b": b, "utility": utility, "utility_se": se,
                     "margin": -utility - _slack(se)})
        if theta == model.support(b)[0] and abs(utility) > _slack(se):
            bottom_ok = False

    samples = truthful_samples(mechanism, profiles or trials, seed, workers)
    realized = samples["theta"] * samples["xi"] - samples["t"]
    ex_post_violations = int((realized < -TOLERANCE).sum())
    extra = {
        "bottom_utility_zero": bottom_ok,
        "ex_post_profiles": int(realized.shape[0]),
        "ex_post_violations": ex_post_violations,
        "ex_post_min_utility": float(realized.min()) if realized.size else 0.0,
    }

    report = _summarize("ir", pd.DataFrame(rows), consumer, trials, seed, extra,
                        passed=bottom_ok and ex_post_violations == 0)
    logger.info(f"IR suite: {report.violations} interim and {ex_post_violations} ex-post violations")
    return report


def verify_interim(mechanism, consumer: int, trials: int, seed: int,
                   theta_grid: Optional[Sequence[float]] = None,
                   points: int = DEFAULT_GRID_POINTS, workers: int = 1) -> VerificationReport:
    """Interim allocation non-decreasing in r per level and in c at a fixed r."""
    _check_consumer(mechanism, consumer)
    model = mechanism.models[consumer]
    k = mechanism.scenario.market.k

    reports: List[Report] = []
    for c in range(1, k + 1):
        reports.extend((r, c) for r in level_grid(model, c, points, theta_grid))
    for c in range(1, k):
        lo, hi = model.support(c + 1)
        reports.extend((r, c + 1) for r in level_grid(model, c, points, theta_grid)
                       if lo <= r <= hi and (r, c + 1) not in reports)
    position = {report: index for index, report in enumerate(reports)}
    xi, _ = report_table(mechanism, consumer, reports, trials, seed, workers)

    rows = []

    def compare(kind: str, low: Report, high: Report) -> None:
        drop, se = _mean_se(xi[position[low]] - xi[position[high]])
        rows.append({"direction": kind, "r_low": low[0], "c_low": low[1], "r_high": high[0],
                     "c_high": high[1], "allocation_drop": drop, "drop_se": se, "margin": drop - _slack(se)})

    for c in range(1, k + 1):
        grid = sorted(r for r, level in reports if level == c)
        for low, high in zip(grid, grid[1:]):
            compare("valuation", (low, c), (high, c))
    for c in range(1, k):
        for r in level_grid(model, c, points, theta_grid):
            if (r, c + 1) in position:
                compare("level", (r, c), (r, c + 1))

    return _summarize("interim", pd.DataFrame(rows), consumer, trials, seed)


def estimate_profit(mechanism, trials: int, seed: int, workers: int = 1) -> ProfitEstimate:
    """
    Expected profit sum(t) - sum(p g) against expected virtual surplus
    sum(xi w) - sum(p g) over truthful profiles.

    Args:
        mechanism: Workflow running the mechanism
        trials: Number of profiles
        seed: Master seed
        workers: Thread count for blocks

    Returns:
        ProfitEstimate: Both estimates, their paired difference and whether
        it lies within SLACK_FACTOR standard errors
    """
    market = mechanism.scenario.market
    if mechanism.scenario.size == 0:
        _blocks(trials)
        return ProfitEstimate(trials=trials, seed=seed, profit=0.0, profit_se=0.0, virtual_surplus=0.0,
                              virtual_surplus_se=0.0, difference=0.0, difference_se=0.0, consistent=True)

    samples = truthful_samples(mechanism, trials, seed, workers)
    costs = samples["g"] @ np.asarray(market.p, dtype=float)
    profit = samples["t"].sum(axis=1) - costs
    surplus = (samples["xi"] * samples["w"]).sum(axis=1) - costs

    profit_mean, profit_se = _mean_se(profit)
    surplus_mean, surplus_se = _mean_se(surplus)
    difference, difference_se = _mean_se(profit - surplus)
    consistent = abs(difference) <= _slack(difference_se)
    if not consistent:
        logger.warning(f"Profit {profit_mean:.6g} and virtual surplus {surplus_mean:.6g} disagree")

    return ProfitEstimate(trials=trials, seed=seed, profit=profit_mean, profit_se=profit_se,
                          virtual_surplus=surplus_mean, virtual_surplus_se=surplus_se,
                          difference=difference, difference_se=difference_se, consistent=consistent)
