import numpy as np
import pytest

from controller.mechanism_workflow import FlexibleAuctionWorkflow, MechanismFault
from core.exceptions import InputValidationError
from core.market import MarketStructure, Scenario
from services.simulate import (BLOCK_SIZE, estimate_interim, estimate_profit, report_table, verify_bic,
                               verify_interim, verify_ir)

from conftest import uniform_scenario


def test_single_consumer_interim_is_an_indicator(single_consumer_workflow):
    """
    With nobody else in the market the allocation is 1 iff w(r) > 0, with zero variance
    """
    served = estimate_interim(single_consumer_workflow, 0, (7.0, 1), trials=500, seed=1)
    assert served.allocation == 1.0 and served.allocation_se == 0.0
    assert served.payment == pytest.approx(5.0)
    assert served.utility == pytest.approx(2.0)
    unserved = estimate_interim(single_consumer_workflow, 0, (3.0, 1), trials=500, seed=1)
    assert unserved.allocation == 0.0 and unserved.payment == 0.0


def test_symmetric_consumers_agree():
    scenario = uniform_scenario(m=[1, 0], p=[6.0, 4.0], uppers=[[20.0, 10.0], [20.0, 10.0]])
    workflow = FlexibleAuctionWorkflow(scenario)
    first = estimate_interim(workflow, 0, (12.0, 1), trials=20_000, seed=4)
    second = estimate_interim(workflow, 1, (12.0, 1), trials=20_000, seed=4)
    combined = np.hypot(first.allocation_se, second.allocation_se)
    assert abs(first.allocation - second.allocation) <= 3 * combined + 1e-9


def test_identical_reports_share_random_numbers(bic_k2_workflow):
    xi, t = report_table(bic_k2_workflow, 0, [(6.0, 1), (6.0, 1)], trials=1500, seed=3)
    assert np.array_equal(xi[0], xi[1])
    assert np.array_equal(t[0], t[1])
    assert xi.shape == (2, 1500)


def test_report_outside_support_rejected(bic_k2_workflow):
    with pytest.raises(InputValidationError):
        report_table(bic_k2_workflow, 0, [(15.0, 2)], trials=10, seed=0)
    with pytest.raises(InputValidationError):
        report_table(bic_k2_workflow, 7, [(5.0, 1)], trials=10, seed=0)


@pytest.mark.slow
def test_bic_holds_for_two_levels(bic_k2_workflow):
    report = verify_bic(bic_k2_workflow, 0, trials=10_000, seed=0)
    assert report.passed, report.worst
    assert report.checks > 0
    assert report.violations == 0


@pytest.mark.slow
def test_bic_holds_for_three_levels(bic_k3_workflow):
    report = verify_bic(bic_k3_workflow, 1, trials=10_000, seed=2)
    assert report.passed, report.worst


@pytest.mark.slow
def test_bic_holds_on_purchase_scenario(bic_purchase_workflow):
    report = verify_bic(bic_purchase_workflow, 3, trials=10_000, seed=5)
    assert report.passed, report.worst


def test_bic_flags_halved_payments(bic_k2_workflow):
    faulty = FlexibleAuctionWorkflow(bic_k2_workflow.scenario, fault=MechanismFault.HALVED_PAYMENTS)
    report = verify_bic(faulty, 0, trials=2048, seed=0)
    assert not report.passed
    assert report.violations >= 1
    assert report.worst_margin > 0.0


def test_bic_flags_serve_everyone(bic_k2_workflow):
    faulty = FlexibleAuctionWorkflow(bic_k2_workflow.scenario, fault=MechanismFault.SERVE_EVERYONE)
    report = verify_bic(faulty, 0, trials=2048, seed=0)
    assert not report.passed


def test_ir_holds_with_zero_utility_at_bottom(bic_k2_workflow):
    report = verify_ir(bic_k2_workflow, 1, trials=4096, seed=8, profiles=100_000)
    assert report.passed, report.worst
    assert report.extra["bottom_utility_zero"]
    assert report.extra["ex_post_profiles"] == 100_000
    assert report.extra["ex_post_violations"] == 0


def test_ir_flags_doubled_payments(bic_k2_workflow):
    faulty = FlexibleAuctionWorkflow(bic_k2_workflow.scenario, fault=MechanismFault.DOUBLED_PAYMENTS)
    report = verify_ir(faulty, 0, trials=2048, seed=8)
    assert not report.passed
    assert report.extra["ex_post_violations"] > 0


def test_interim_allocation_monotone(bic_k3_workflow):
    report = verify_interim(bic_k3_workflow, 0, trials=4096, seed=6)
    assert report.passed, report.worst
    directions = {row["direction"] for row in report.rows}
    assert directions <= {"valuation", "level"}


@pytest.mark.slow
def test_single_consumer_profit_closed_form(single_consumer_workflow):
    """
    Uniform[0, 10]: E[5 * 1{theta > 5}] = E[(2 theta - 10)^+] = 2.5
    """
    estimate = estimate_profit(single_consumer_workflow, trials=1_000_000, seed=12)
    assert estimate.profit == pytest.approx(2.5, rel=0.01)
    assert estimate.virtual_surplus == pytest.approx(2.5, rel=0.01)
    assert estimate.consistent


def test_profit_identity_on_regular_scenarios(bic_k2_workflow, bic_k3_workflow, bic_purchase_workflow,
                                              two_level_scenario):
    for workflow in (bic_k2_workflow, bic_k3_workflow, bic_purchase_workflow,
                     FlexibleAuctionWorkflow(two_level_scenario)):
        estimate = estimate_profit(workflow, trials=20_000, seed=17)
        assert estimate.consistent, estimate


def test_profit_identity_breaks_when_everyone_is_served(bic_k2_workflow):
    faulty = FlexibleAuctionWorkflow(bic_k2_workflow.scenario, fault=MechanismFault.SERVE_EVERYONE)
    assert not estimate_profit(faulty, trials=5000, seed=17).consistent


def test_zero_consumers_profit():
    workflow = FlexibleAuctionWorkflow(Scenario(MarketStructure(k=1, m=[1], p=[2.0])))
    estimate = estimate_profit(workflow, trials=100, seed=0)
    assert estimate.profit == 0.0 and estimate.virtual_surplus == 0.0
    assert estimate.consistent


def test_results_independent_of_worker_count(bic_k2_workflow):
    trials = 3 * BLOCK_SIZE + 17
    serial = estimate_profit(bic_k2_workflow, trials=trials, seed=9, workers=1)
    threaded = estimate_profit(bic_k2_workflow, trials=trials, seed=9, workers=3)
    assert serial == threaded
    assert verify_interim(bic_k2_workflow, 1, trials=trials, seed=9, workers=1) == \
        verify_interim(bic_k2_workflow, 1, trials=trials, seed=9, workers=2)


def test_trials_must_be_positive(bic_k2_workflow):
    with pytest.raises(InputValidationError):
        estimate_profit(bic_k2_workflow, trials=0, seed=0)
