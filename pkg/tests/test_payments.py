import numpy as np
import pytest

from core.exceptions import InconsistentTraceError, MonotonicityViolationError
from core.market import Consumer, MarketStructure, Scenario
from core.valuation import UniformLevelModel, ValuationModel
from services.allocator import allocate
from services.payments import integral_payment, theta_thresholds, threshold_payment


def test_threshold_payment_uniform_examples():
    model20 = UniformLevelModel(upper=[20.0], prior=[1.0])
    model10 = UniformLevelModel(upper=[10.0], prior=[1.0])
    schedule = threshold_payment([4.0, 0.0, 4.0], [model20, model10, model20], [1, 1, 1], [1, 1, 0])
    assert schedule.theta_thresholds == pytest.approx((12.0, 5.0, 12.0))
    assert schedule.t == pytest.approx((12.0, 5.0, 0.0))


def test_bisection_agrees_with_closed_form():
    model = UniformLevelModel(upper=[20.0, 10.0], prior=[0.5, 0.5])
    vthr = np.linspace(0.0, 9.9, 40)
    closed = model.inverse_virtual_valuation(vthr, 2)
    generic = ValuationModel.inverse_virtual_valuation(model, vthr, 2)
    assert np.allclose(closed, generic, atol=1e-9)


def test_unreachable_threshold():
    model = UniformLevelModel(upper=[10.0], prior=[1.0])
    schedule = threshold_payment([12.0], [model], [1], [0])
    assert schedule.theta_thresholds == (None,)
    assert schedule.t == (0.0,)
    with pytest.raises(InconsistentTraceError):
        threshold_payment([12.0], [model], [1], [1])


def test_vectorized_thresholds_group_levels():
    model = UniformLevelModel(upper=[20.0, 10.0], prior=[0.5, 0.5])
    result = theta_thresholds(model, [4.0, 4.0, 11.0], [1, 2, 2])
    assert result[:2] == pytest.approx([12.0, 7.0])
    assert np.isnan(result[2])


def test_integral_payment_step_functions():
    model = UniformLevelModel(upper=[20.0], prior=[1.0])
    assert integral_payment(15.0, lambda s: int(s > 12.0), model, 1) == pytest.approx(12.0, abs=1e-9)
    assert integral_payment(10.0, lambda s: int(s > 12.0), model, 1) == 0.0
    assert integral_payment(0.0, lambda s: int(2 * s - 20 > 0), model, 1) == 0.0
    assert integral_payment(7.0, lambda s: 1, model, 1) == 0.0


def test_integral_payment_detects_non_monotone_allocation():
    model = UniformLevelModel(upper=[20.0], prior=[1.0])
    with pytest.raises(MonotonicityViolationError):
        integral_payment(15.0, lambda s: int(3.0 < s < 9.0), model, 1)


def test_threshold_and_integral_payments_agree():
    """
    Threshold inversion and theta xi - integral xi ds agree for 1000 consumers
    """
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 1000:
        k = int(rng.integers(1, 4))
        n = int(rng.integers(1, 7))
        market = MarketStructure(k=k, m=rng.integers(0, 3, size=k),
                                 p=np.sort(10.0 - rng.uniform(0.0, 10.0, size=k))[::-1])
        models = []
        for _ in range(n):
            upper = np.sort(rng.uniform(8.0, 25.0, size=k))[::-1]
            models.append(UniformLevelModel(upper=upper, prior=[1.0 / k] * k))
        scenario = Scenario(market, [Consumer(model) for model in models])
        thetas, levels = [], []
        for model in scenario.models:
            theta, level = model.sample(rng, 1)
            thetas.append(float(theta[0]))
            levels.append(int(level[0]))
        w = [float(model.virtual_valuation(theta, b)) for model, theta, b in zip(models, thetas, levels)]

        allocation = allocate(w, levels, market)
        schedule = threshold_payment(allocation.vthr, models, levels, allocation.xi)
        for l in range(n):
            def served(s, l=l):
                trial = list(w)
                trial[l] = float(models[l].virtual_valuation(s, levels[l]))
                return allocate(trial, levels, market).xi[l]

            paid = integral_payment(thetas[l], served, models[l], levels[l], quad_points=40)
            assert paid == pytest.approx(schedule.t[l], abs=1e-6)
            assert schedule.t[l] <= thetas[l] + 1e-9
            checked += 1
