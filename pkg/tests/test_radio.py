import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from casim.engine import PAPER_6CC
from casim.radio import (
    CcClass,
    ComponentCarrier,
    LinkBudget,
    PrbGrid,
    coverage_radius_m,
    noise_power_dbm,
    path_loss_db,
    prb_count_for_bandwidth,
    prb_rate_bps,
    rank_ccs_for_user,
    snr_db,
)

LB = LinkBudget()

# Reference values evaluated independently at 30-digit precision.
PL_1000M_900MHZ_FREE = 91.53485018878650
PL_35M_2100MHZ = 47.93676744693803
NOISE_DBM = -112.44727494896694
SNR_1000M = {900.0: 49.91242476018, 1800.0: 43.89182484690, 2100.0: 42.55288905429}
COVERAGE_M = {900.0: 26672.84117017, 1800.0: 17949.49103449, 2100.0: 16436.02639835}


@pytest.mark.parametrize("bw,n", [(1.4, 6), (3, 15), (5, 25), (10, 50), (15, 75), (20, 100)])
def test_prb_table(bw, n):
    assert prb_count_for_bandwidth(bw) == n


@pytest.mark.parametrize("bw", [0, 2, 7.5, 25])
def test_prb_table_rejects_unknown(bw):
    with pytest.raises(ValueError):
        prb_count_for_bandwidth(bw)


def test_carrier_validation():
    cc = ComponentCarrier(0, 900.0, 5.0)
    assert cc.prb_count == 25 and cc.cc_class is CcClass.SHARED
    with pytest.raises(ValueError):
        ComponentCarrier(0, -1.0, 5.0)
    with pytest.raises(ValueError):
        ComponentCarrier(0, 900.0, 4.0)


def test_link_budget_validation():
    with pytest.raises(ValueError):
        LinkBudget(pathloss_exponent=1.9)
    with pytest.raises(ValueError):
        LinkBudget(spectral_efficiency_cap_bps_per_hz=0)


def test_path_loss_reference_values():
    assert path_loss_db(1000, 900, replace(LB, pathloss_exponent=2.0)) == pytest.approx(PL_1000M_900MHZ_FREE, abs=1e-10)
    assert path_loss_db(35, 2100, LB) == pytest.approx(PL_35M_2100MHZ, abs=1e-10)


def test_path_loss_minimum_separation():
    with pytest.raises(ValueError):
        path_loss_db(34.9, 900, LB)


@given(st.floats(35, 30_000), st.floats(1e-3, 1000), st.floats(100, 5000))
def test_path_loss_monotone_in_distance(d, eps, f):
    assert path_loss_db(d + eps, f, LB) >= path_loss_db(d, f, LB)


@given(st.floats(35, 30_000), st.floats(100, 5000), st.floats(1e-3, 1000))
def test_path_loss_monotone_in_frequency(d, f, eps):
    assert path_loss_db(d, f + eps, LB) > path_loss_db(d, f, LB)


def test_noise_floor():
    assert noise_power_dbm(LB) == pytest.approx(NOISE_DBM, abs=1e-12)


def test_snr_reference_values():
    for f, expected in SNR_1000M.items():
        assert snr_db(1000, ComponentCarrier(0, f, 1.4), LB) == pytest.approx(expected, abs=1e-9)


@given(st.floats(35, 20_000), st.floats(1, 5_000))
def test_snr_decreases_with_distance_and_band(d, step):
    lo, hi = ComponentCarrier(0, 900.0, 1.4), ComponentCarrier(1, 1800.0, 1.4)
    assert snr_db(d, lo, LB) > snr_db(d + step, lo, LB)
    assert snr_db(d, lo, LB) > snr_db(d, hi, LB)


def test_prb_rate_examples():
    assert prb_rate_bps(-math.inf, LB) == 0.0
    assert prb_rate_bps(0.0, LB) == pytest.approx(180_000.0)
    assert prb_rate_bps(60.0, LB) == pytest.approx(1_080_000.0)  # cap binds


@given(st.floats(-30, 80), st.floats(0, 20))
def test_prb_rate_monotone_and_capped(s, step):
    assert 0 <= prb_rate_bps(s, LB) <= prb_rate_bps(s + step, LB) <= 1_080_000.0 + 1e-6


def test_rank_examples():
    assert rank_ccs_for_user(500, [ComponentCarrier(3, 1800.0, 1.4)], LB) == [3]
    twins = [ComponentCarrier(1, 1800.0, 1.4), ComponentCarrier(0, 1800.0, 3.0)]
    assert rank_ccs_for_user(500, twins, LB) == [0, 1]
    for d in (35, 300, 1000):
        assert rank_ccs_for_user(d, list(PAPER_6CC), LB) == [0, 1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        rank_ccs_for_user(100, [], LB)


@given(st.floats(35, 10_000), st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_rank_is_permutation(d, shadow):
    assert sorted(rank_ccs_for_user(d, list(PAPER_6CC), LB, shadow)) == list(range(6))


def test_coverage_radius_reference_and_bisection():
    for f, expected in COVERAGE_M.items():
        cc = ComponentCarrier(0, f, 1.4)
        r = coverage_radius_m(cc, LB)
        assert r == pytest.approx(expected, rel=1e-10)
        root = brentq(lambda d, cc=cc: snr_db(d, cc, LB) - LB.snr_min_db, 35.0, 1e6, xtol=1e-9)
        assert r == pytest.approx(root, rel=1e-9)


def test_coverage_degenerate_threshold():
    cc = ComponentCarrier(0, 2100.0, 1.4)
    lb = replace(LB, snr_min_db=snr_db(35, cc, LB) + 1)
    assert coverage_radius_m(cc, lb) == 0.0


def test_prb_grid_exclusivity():
    grid = PrbGrid([ComponentCarrier(0, 900.0, 1.4)])
    grid.assign(0, [0, 1], 7)
    assert grid.owner(0, 1) == 7 and grid.free_prbs(0) == [2, 3, 4, 5]
    with pytest.raises(RuntimeError):
        grid.assign(0, [1, 2], 8)
    with pytest.raises(RuntimeError):
        grid.assign(0, [3, 3], 8)
    grid.clear()
    assert np.all(grid.occupancy(0) == PrbGrid.FREE)
