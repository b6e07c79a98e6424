"""
Valuation Models - Per-consumer conditional valuation distributions
Virtual valuations, their inverses, inverse-cdf sampling and the lattice
check of the generalized monotone hazard rate condition.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from scipy import stats

from core.exceptions import DomainError, InputValidationError, SingularDensityError

# Logger configuration
logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 257
INVERSION_ITERATIONS = 100
PRIOR_TOLERANCE = 1e-9
HAZARD_TOLERANCE = 1e-12


class ValuationModel(ABC):
    """
    Abstract base class for a consumer's valuation distribution family.

    A model holds one conditional distribution F(theta | b) per flexibility
    level b = 1..k plus the level prior q(b). Subclasses provide support,
    density, cdf and inverse cdf; everything else is derived here and works
    on scalars as well as numpy arrays.
    """

    family = "abstract"

    def __init__(self, prior: Sequence[float]):
        self.prior = tuple(float(q) for q in prior)
        if not self.prior:
            raise InputValidationError("Level prior must have at least one entry")

    @property
    def levels(self) -> int:
        """Number of flexibility levels k the model is defined on."""
        return len(self.prior)

    @abstractmethod
    def support(self, b: int) -> Tuple[float, float]:
        """Closed support [lo, hi] of F(. | b)."""

    @abstractmethod
    def pdf(self, theta, b: int) -> np.ndarray:
        """Density f(theta | b)."""

    @abstractmethod
    def cdf(self, theta, b: int) -> np.ndarray:
        """Distribution function F(theta | b)."""

    @abstractmethod
    def ppf(self, u, b: int) -> np.ndarray:
        """Inverse distribution function of F(. | b)."""

    @property
    def theta_min(self) -> float:
        return min(self.support(b)[0] for b in range(1, self.levels + 1))

    @property
    def theta_max(self) -> float:
        return max(self.support(b)[1] for b in range(1, self.levels + 1))

    def check_level(self, b: int) -> None:
        if not 1 <= int(b) <= self.levels:
            raise DomainError(f"Flexibility level {b} outside 1..{self.levels}")

    def validate_prior(self) -> None:
        """Raises InputValidationError unless q is a probability vector."""
        prior = np.asarray(self.prior)
        if np.any(prior < 0.0) or abs(prior.sum() - 1.0) > PRIOR_TOLERANCE:
            raise InputValidationError(f"Level prior {self.prior} does not sum to 1")

    def hazard(self, theta, b: int) -> np.ndarray:
        """Hazard rate f / (1 - F); infinite where the survival function vanishes."""
        theta = np.asarray(theta, dtype=float)
        density = self.pdf(theta, b)
        survival = 1.0 - self.cdf(theta, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(survival > 0.0, density / survival, np.inf)

    def virtual_valuation(self, theta, b: int) -> np.ndarray:
        """
        Vectorized w(theta, b) = theta - (1 - F(theta | b)) / f(theta | b).
        No domain checks; use the module-level virtual_valuation for those.
        """
        theta = np.asarray(theta, dtype=float)
        density = self.pdf(theta, b)
        survival = 1.0 - self.cdf(theta, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            return theta - np.where(survival > 0.0, survival / density, 0.0)

    def virtual_valuations(self, theta, levels) -> np.ndarray:
        """w(theta_j, b_j) for paired arrays of valuations and levels."""
        theta = np.asarray(theta, dtype=float)
        levels = np.asarray(levels, dtype=int)
        result = np.empty(theta.shape, dtype=float)
        for b in range(1, self.levels + 1):
            mask = levels == b
            if mask.any():
                result[mask] = self.virtual_valuation(theta[mask], b)
        return result

    def inverse_virtual_valuation(self, y, b: int) -> np.ndarray:
        """
        Smallest theta in the level-b support with w(theta, b) >= y.

        Bisection on the support; MHR makes w monotone in theta so the
        search is total. Returns NaN where y exceeds w at the top of the
        support (no valuation reaches it).

        Args:
            y: Virtual value(s) to invert
            b: Flexibility level

        Returns:
            np.ndarray: Valuation threshold(s), same shape as y
        """
        y = np.asarray(y, dtype=float)
        lo_edge, hi_edge = self.support(b)
        lo = np.full(y.shape, lo_edge)
        hi = np.full(y.shape, hi_edge)
        for _ in range(INVERSION_ITERATIONS):
            mid = 0.5 * (lo + hi)
            above = self.virtual_valuation(mid, b) >= y
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)

        at_bottom = self.virtual_valuation(np.full(y.shape, lo_edge), b) >= y
        reachable = self.virtual_valuation(np.full(y.shape, hi_edge), b) >= y
        return np.where(reachable, np.where(at_bottom, lo_edge, hi), np.nan)

    def sample(self, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Inverse-cdf draws: b ~ q, then theta ~ F(. | b).

        Args:
            rng: Seeded numpy generator
            size: Number of independent (theta, b) pairs

        Returns:
            Tuple of (theta array, level array)
        """
        self.validate_prior()
        cumulative = np.cumsum(self.prior)
        level_u = rng.random(size)
        theta_u = rng.random(size)
        levels = np.minimum(np.searchsorted(cumulative, level_u, side="right"), self.levels - 1) + 1

        theta = np.empty(size, dtype=float)
        for b in range(1, self.levels + 1):
            mask = levels == b
            if mask.any():
                theta[mask] = self.ppf(theta_u[mask], b)
        return theta, levels

    def describe(self) -> Dict[str, Any]:
        """Parameters for reports."""
        return {"family": self.family, "prior": list(self.prior)}


class UniformLevelModel(ValuationModel):
    """
    Uniform[lower, upper_b] conditional on level b.

    Closed forms: w(theta, b) = 2 theta - upper_b and
    w^-1(y, b) = (y + upper_b) / 2. Strictly decreasing upper bounds give
    a hazard 1 / (upper_b - theta) that increases in b.
    """

    family = "uniform"

    def __init__(self, upper: Sequence[float], prior: Sequence[float], lower: float = 0.0):
        super().__init__(prior)
        self.upper = tuple(float(u) for u in upper)
        self.lower = float(lower)
        if len(self.upper) != len(self.prior):
            raise InputValidationError("Uniform model needs one upper bound per level")
        if any(u <= self.lower for u in self.upper):
            raise InputValidationError(f"Upper bounds {self.upper} must exceed lower bound {self.lower}")

    def support(self, b: int) -> Tuple[float, float]:
        self.check_level(b)
        return self.lower, self.upper[b - 1]

    def pdf(self, theta, b: int) -> np.ndarray:
        lo, hi = self.support(b)
        return stats.uniform.pdf(theta, loc=lo, scale=hi - lo)

    def cdf(self, theta, b: int) -> np.ndarray:
        lo, hi = self.support(b)
        return stats.uniform.cdf(theta, loc=lo, scale=hi - lo)

    def ppf(self, u, b: int) -> np.ndarray:
        lo, hi = self.support(b)
        return stats.uniform.ppf(u, loc=lo, scale=hi - lo)

    def virtual_valuation(self, theta, b: int) -> np.ndarray:
        self.check_level(b)
        return 2.0 * np.asarray(theta, dtype=float) - self.upper[b - 1]

    def inverse_virtual_valuation(self, y, b: int) -> np.ndarray:
        lo, hi = self.support(b)
        y = np.asarray(y, dtype=float)
        theta = np.maximum(0.5 * (y + hi), lo)
        return np.where(y <= hi, theta, np.nan)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "upper": list(self.upper), "lower": self.lower}


class TruncatedExponentialModel(ValuationModel):
    """
    Exponential with rate lambda_b truncated to [lower, upper].

    Hazard lambda / (1 - exp(-lambda (upper - theta))) grows with theta and
    with lambda, so rates increasing in level satisfy the MHR pair.
    """

    family = "truncated_exponential"

    def __init__(self, rate: Sequence[float], prior: Sequence[float], lower: float, upper: float):
        super().__init__(prior)
        self.rate = tuple(float(r) for r in rate)
        self.lower = float(lower)
        self.upper = float(upper)
        if len(self.rate) != len(self.prior):
            raise InputValidationError("Truncated exponential model needs one rate per level")
        if any(r <= 0.0 for r in self.rate):
            raise InputValidationError(f"Rates {self.rate} must be positive")
        if self.upper <= self.lower:
            raise InputValidationError("Upper bound must exceed lower bound")

    def _frozen(self, b: int):
        self.check_level(b)
        rate = self.rate[b - 1]
        return stats.truncexpon(b=(self.upper - self.lower) * rate, loc=self.lower, scale=1.0 / rate)

    def support(self, b: int) -> Tuple[float, float]:
        self.check_level(b)
        return self.lower, self.upper

    def pdf(self, theta, b: int) -> np.ndarray:
        return self._frozen(b).pdf(theta)

    def cdf(self, theta, b: int) -> np.ndarray:
        return self._frozen(b).cdf(theta)

    def ppf(self, u, b: int) -> np.ndarray:
        return self._frozen(b).ppf(u)

    def virtual_valuation(self, theta, b: int) -> np.ndarray:
        self.check_level(b)
        rate = self.rate[b - 1]
        theta = np.asarray(theta, dtype=float)
        return theta + np.expm1(-rate * (self.upper - theta)) / rate

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "rate": list(self.rate), "lower": self.lower, "upper": self.upper}


@dataclass_json
@dataclass(frozen=True)
class RegularityReport:
    """Outcome of the lattice scan of the generalized MHR condition."""

    passed: bool
    monotone_in_theta: bool
    strict_in_level: bool
    negative_at_bottom: bool
    grid_size: int
    first_violation: Optional[Dict[str, Any]] = None


def virtual_valuation(model: ValuationModel, theta: float, b: int) -> float:
    """
    Virtual valuation w(theta, b) with domain checks.

    Args:
        model: Consumer's valuation model
        theta: Valuation, must lie in [theta_min, theta_max]
        b: Flexibility level

    Returns:
        float: theta - (1 - F(theta | b)) / f(theta | b)
    """
    model.check_level(b)
    if not model.theta_min <= theta <= model.theta_max:
        raise DomainError(f"Valuation {theta} outside [{model.theta_min}, {model.theta_max}]")
    if float(model.pdf(theta, b)) <= 0.0:
        raise SingularDensityError(f"Density f({theta} | {b}) is zero")
    return float(model.virtual_valuation(theta, b))


def _decreasing_steps(hazard: np.ndarray) -> np.ndarray:
    slack = HAZARD_TOLERANCE * np.maximum(1.0, np.abs(hazard[:-1]))
    return np.flatnonzero(np.diff(hazard) < -slack)


def check_regularity(model: ValuationModel, grid_size: int = DEFAULT_GRID_SIZE) -> RegularityReport:
    """
    Scans the hazard rate on a grid_size x k lattice.

    Checks (a) hazard non-decreasing in theta per level, (b) hazard strictly
    increasing in b at every lattice point of the shared support and
    (c) w(theta_min, b) < 0 per level. The top of each support is left out
    of the lattice since the hazard is infinite there.

    Args:
        model: Valuation model to check
        grid_size: Lattice points per level (>= 2)

    Returns:
        RegularityReport: Pass/fail flags and the first violating lattice pair
    """
    if grid_size < 2:
        raise InputValidationError(f"grid_size must be at least 2, got {grid_size}")

    violations: List[Dict[str, Any]] = []
    levels = range(1, model.levels + 1)

    monotone_in_theta = True
    for b in levels:
        lo, hi = model.support(b)
        grid = np.linspace(lo, hi, grid_size, endpoint=False)
        bad = _decreasing_steps(model.hazard(grid, b))
        if bad.size:
            monotone_in_theta = False
            j = int(bad[0])
            violations.append({"condition": "monotone_in_theta", "level": b,
                               "theta": [float(grid[j]), float(grid[j + 1])]})

    strict_in_level = True
    shared_lo = max(model.support(b)[0] for b in levels)
    shared_hi = min(model.support(b)[1] for b in levels)
    if model.levels > 1 and shared_hi <= shared_lo:
        logger.warning(f"Level supports of {model.family} model do not overlap; level check is vacuous")
    elif model.levels > 1:
        grid = np.linspace(shared_lo, shared_hi, grid_size, endpoint=False)
        for b in range(1, model.levels):
            bad = np.flatnonzero(model.hazard(grid, b + 1) <= model.hazard(grid, b))
            if bad.size:
                strict_in_level = False
                violations.append({"condition": "strict_in_level", "levels": [b, b + 1],
                                   "theta": float(grid[int(bad[0])])})

    negative_at_bottom = True
    for b in levels:
        lo, _ = model.support(b)
        bottom = float(model.virtual_valuation(lo, b))
        if not bottom < 0.0:
            negative_at_bottom = False
            violations.append({"condition": "negative_at_bottom", "level": b,
                               "theta": lo, "virtual_valuation": bottom})

    passed = monotone_in_theta and strict_in_level and negative_at_bottom
    if not passed:
        logger.warning(f"Model {model.describe()} fails regularity: {violations[0]}")

    return RegularityReport(
        passed=passed,
        monotone_in_theta=monotone_in_theta,
        strict_in_level=strict_in_level,
        negative_at_bottom=negative_at_bottom,
        grid_size=grid_size,
        first_violation=violations[0] if violations else None,
    )
