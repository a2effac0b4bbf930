import json
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from casim.engine import PAPER_6CC, SimConfig, simulate, single_cell
from casim.eventlog import EventKind, EventLog
from casim.metrics import (
    ExcludedFromMetric,
    best_cc_fraction,
    best_cc_mask,
    evaluate,
    gbr_fulfillment,
    qoe_coefficient,
    sojourn_ms,
)
from casim.traffic import Burst, TrafficConfig, User, Workload

ONE_CC = single_cell([(900.0, 1.4)])  # 6 PRBs x 1080 bits per frame


def run_one_cc(bursts, scheduler="SRUS", horizon=1000, n_users=None):
    n_users = n_users or max(b.user_id for b in bursts) + 1
    users = [User(i, 200.0) for i in range(n_users)]
    return simulate(SimConfig(ccs=ONE_CC, horizon_ms=horizon, scheduler=scheduler), Workload(users, bursts))


def test_sojourn_queued_then_served():
    a = Burst(0, 0, 9, 0, 324_000, 100)  # 32400 bits: frames 0-4
    b = Burst(1, 1, 9, 0, 194_400, 100)  # 19440 bits: waits 5 frames, served over 3
    result = run_one_cc([a, b])
    assert sojourn_ms(result.bursts[0], result.log) == 5
    assert sojourn_ms(result.bursts[1], result.log) == 8


def test_sojourn_minimum_is_one_frame():
    result = run_one_cc([Burst(0, 0, 9, 3, 1_000_000, 1)])
    assert sojourn_ms(result.bursts[0], result.log) == 1


def test_sojourn_includes_preemption_gap():
    elastic = Burst(0, 0, 8, 0, 6_480_000, 20)  # 20 full frames of the carrier
    gbr = Burst(1, 1, 3, 5, 6_480_000, 5)  # takes the whole carrier for frames 5-9
    result = run_one_cc([elastic, gbr], scheduler="QSCS")
    assert result.log.count(EventKind.PRE) == 1
    assert sojourn_ms(result.bursts[1], result.log) == 5
    assert sojourn_ms(result.bursts[0], result.log) == 25


def test_sojourn_of_expired_burst_is_its_window():
    b = Burst(0, 0, 3, 0, 10_000_000, 50)
    result = run_one_cc([b])
    assert result.outcome[0] is EventKind.EXP
    assert sojourn_ms(result.bursts[0], result.log) == 50


def test_sojourn_excludes_truncated():
    result = run_one_cc([Burst(0, 0, 9, 0, 100_000_000, 2000)], horizon=10)
    with pytest.raises(ExcludedFromMetric):
        sojourn_ms(result.bursts[0], result.log)
    assert evaluate(result).sojourn_ms_by_qci[9] is None


def test_best_cc_single_carrier_is_one():
    result = run_one_cc([Burst(0, 0, 9, 0, 5_000_000, 100), Burst(1, 1, 3, 4, 2_000_000, 100)])
    assert evaluate(result).beta_opt_cc == 1.0


def test_best_cc_empty_log():
    assert best_cc_fraction(EventLog(), np.zeros(0, int), np.zeros((0, 2))) is None


def test_best_cc_rules_on_tie():
    snr = np.array([[40.0, 40.0, 30.0]])
    assert best_cc_mask(snr, "snr_tie").tolist() == [[True, True, False]]
    assert best_cc_mask(snr, "rank_head").tolist() == [[True, False, False]]
    with pytest.raises(ValueError):
        best_cc_mask(snr, "median")


def _srus_expected(n_users, prbs, top):
    """Exact E[top PRBs / occupied PRBs] when every occupied carrier is saturated."""

    def onto(n, k):
        return sum((-1) ** j * comb(k, j) * (k - j) ** n for j in range(k + 1))

    m = len(prbs)
    total = Fraction(0)
    for k in range(1, m + 1):
        for occ in combinations(range(m), k):
            p = Fraction(onto(n_users, k), m**n_users)
            total += p * Fraction(sum(prbs[c] for c in occ if c in top), sum(prbs[c] for c in occ))
    return float(total)


def test_srus_best_cc_share_matches_dispatch_distribution():
    expected = _srus_expected(60, [cc.prb_count for cc in PAPER_6CC], {0, 1})
    assert expected == pytest.approx(0.4843734867, abs=1e-9)
    users = [User(i, 500.0) for i in range(60)]
    bursts = [Burst(i, i, 9, 0, 140_000_000, 2500) for i in range(60)]  # saturating backlogs
    betas = [
        evaluate(simulate(SimConfig(horizon_ms=50, seed=s, scheduler="SRUS"), Workload(users, bursts))).beta_opt_cc
        for s in range(20)
    ]
    assert np.mean(betas) == pytest.approx(expected, rel=0.05)


def test_qscs_uncontended_is_all_best_carrier():
    bursts = [
        Burst(0, 0, 9, 0, 20_000_000, 200),
        Burst(1, 0, 7, 300, 5_000_000, 200),
        Burst(2, 0, 8, 600, 1_000_000, 100),
    ]
    result = simulate(SimConfig(horizon_ms=1000), Workload([User(0, 400.0)], bursts))
    assert evaluate(result).beta_opt_cc == 1.0


def test_qscs_gbr_reservation_on_best_carriers_spill_only_spare():
    # the reservation sits on the 900 MHz pair; a lone GBR burst may also
    # absorb idle PRBs further down its ranking, which shortens its sojourn
    b = Burst(0, 0, 2, 0, 20_000_000, 200)
    result = simulate(SimConfig(horizon_ms=1000), Workload([User(0, 400.0)], [b]))
    a = result.log.allocations()
    first = a["frame"] == 0
    per_cc = np.bincount(a["cc"][first], minlength=6)
    assert per_cc[:2].sum() == 31  # every best-carrier PRB is used first
    report = evaluate(result)
    assert report.beta_qos == 1.0 and report.sojourn_ms_by_qci[2] < 200


def _bursts(sizes, qci=3):
    return [Burst(i, 0, qci, 0, 1, 1, size_bits=s) for i, s in enumerate(sizes)]


def test_gbr_fulfilment_examples():
    bursts = _bursts([1000, 2000])
    assert gbr_fulfillment(bursts, np.array([1000, 2000]), {3}) == 1.0
    assert gbr_fulfillment(bursts, np.array([1000, 1000]), {3}) == 0.75
    assert gbr_fulfillment(bursts, np.array([1000, 1000]), {3}, bit_weighted=True) == pytest.approx(2 / 3)
    assert gbr_fulfillment(bursts, np.array([0, 0]), {2}) is None
    assert gbr_fulfillment(_bursts([10]), np.array([20]), {3}) == 1.0


def test_qoe_examples():
    assert qoe_coefficient(1.0, 1.0) == 1.0
    assert qoe_coefficient(0.0, 0.7) == 0.0
    assert qoe_coefficient(0.8, 0.9) == pytest.approx(0.72)
    for bad in (-0.1, 1.5, float("nan")):
        with pytest.raises(ValueError):
            qoe_coefficient(bad, 0.5)


@given(st.floats(0, 1), st.floats(0, 1))
def test_qoe_is_exact_product(q, o):
    assert qoe_coefficient(q, o) == q * o


def test_censoring_removes_windows_past_horizon():
    # both GBR bursts expire unfulfilled; the second's window would outlive the run
    bursts = [Burst(0, 0, 3, 0, 10_000_000, 100), Burst(1, 1, 3, 900, 10_000_000, 200)]
    report = evaluate(run_one_cc(bursts))
    assert report.n_completed_by_qci[3] == 1 and report.sojourn_ms_by_qci[3] == 100.0
    assert report.beta_qos < 1  # still scored for fulfilment


def test_report_fields_and_json():
    cfg = SimConfig(horizon_ms=2000, seed=1, traffic=TrafficConfig(n_users=3))
    report = evaluate(simulate(cfg))
    d = json.loads(report.to_json())
    assert d["scheduler"] == "QSCS" and d["seed"] == 1 and d["no_data"] is False
    assert d["alpha_sch_qoe"] == d["beta_qos"] * d["beta_opt_cc"]
    for key in ("beta_opt_cc", "beta_qos", "alpha_sch_qoe"):
        assert 0.0 <= d[key] <= 1.0
    c = report.counts
    assert c["completed"] + c["expired"] + c["truncated"] == c["arrived"]
    assert report.mean_sojourn_ms([]) is None
