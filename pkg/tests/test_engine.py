import time

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from casim.engine import PAPER_6CC, ConfigError, Engine, SimConfig, run, simulate, single_cell
from casim.eventlog import EventKind
from casim.metrics import evaluate
from casim.radio import CcClass, ComponentCarrier, LinkBudget
from casim.schedulers import Grant, SchedulerKind
from casim.traffic import Burst, TrafficConfig, User, UserType, Workload, generate_workload

from invariants import run_violations

ONE_CC = single_cell([(900.0, 1.4)])


def test_zero_users_gives_empty_log():
    cfg = SimConfig(traffic=TrafficConfig(n_users=0), horizon_ms=1000)
    log, report = run(cfg)
    assert len(log) == 0 and report.no_data
    assert report.beta_qos is None and report.alpha_sch_qoe is None


def test_single_prb_frame_burst():
    b = Burst(0, 0, 9, 7, 1_080_000, 1)  # 1080 bits: one capped PRB
    result = simulate(SimConfig(ccs=ONE_CC, horizon_ms=100), Workload([User(0, 200.0)], [b]))
    assert result.log.to_text() == "ARR 7 0\nADM 7 0\nALLOC 7 0 0 0 1080\nDONE 7 0\n"
    assert evaluate(result).sojourn_ms_by_qci[9] == 1.0


def test_idle_frames_produce_no_events():
    bursts = [Burst(0, 0, 9, 0, 1_080_000, 1), Burst(1, 0, 9, 50, 1_080_000, 1)]
    log = simulate(SimConfig(ccs=ONE_CC, horizon_ms=100), Workload([User(0, 200.0)], bursts)).log
    _, frame, _ = log.columns()
    assert set(frame.tolist()) == {0, 50}


def test_done_in_crossing_frame():
    b = Burst(0, 0, 9, 0, 1_000_000, 20)  # 20000 bits: 6480 per frame -> crosses in frame 3
    log = simulate(SimConfig(ccs=ONE_CC, horizon_ms=100, scheduler="SRUS"), Workload([User(0, 200.0)], [b])).log
    frames, _ = log.of_kind(EventKind.DONE)
    assert frames.tolist() == [3]
    assert log.allocations()["bits"].tolist()[-1:] == [20000 - 3 * 6480]


def test_gbr_window_expiry_records_shortfall():
    b = Burst(0, 0, 3, 10, 10_000_000, 100)  # needs 10000 bits per frame, the carrier offers 6480
    log = simulate(SimConfig(ccs=ONE_CC, horizon_ms=1000, scheduler="SRUS"), Workload([User(0, 200.0)], [b])).log
    frames, x = log.of_kind(EventKind.EXP)
    assert frames.tolist() == [109]
    assert x.tolist() == [[0, 1_000_000 - 100 * 6480]]


def test_truncation_at_horizon():
    b = Burst(0, 0, 9, 0, 100_000_000, 2000)
    log = simulate(SimConfig(ccs=ONE_CC, horizon_ms=10), Workload([User(0, 200.0)], [b])).log
    frames, x = log.of_kind(EventKind.TRUNC)
    assert frames.tolist() == [10] and x.tolist() == [[0, b.size_bits - 10 * 6480]]


def test_engine_rejects_overgrant():
    b = Burst(0, 0, 9, 0, 1_080_000, 1)
    engine = Engine(SimConfig(ccs=ONE_CC, horizon_ms=10), Workload([User(0, 200.0)], [b]))
    engine.scheduler.schedule = lambda frame: [Grant(0, [0, 1], 0)]
    with pytest.raises(RuntimeError, match="exceed"):
        engine.run()


def test_full_preset_replays_identically():
    cfg = SimConfig(seed=42)
    t0 = time.perf_counter()
    first = simulate(cfg).digest()
    assert simulate(cfg).digest() == first
    assert time.perf_counter() - t0 < 120


def test_replay_file_reproduces_digest(tmp_path):
    cfg = SimConfig(horizon_ms=3000, seed=5)
    wl = generate_workload(cfg.traffic, cfg.horizon_ms, cfg.seed)
    wl.write_replay(tmp_path / "w.csv")
    assert simulate(cfg, Workload.read_replay(tmp_path / "w.csv")).digest() == simulate(cfg).digest()


def test_shadowing_changes_channels_not_traffic():
    base = SimConfig(horizon_ms=2000, seed=3)
    shadowed = base.with_(link_budget=LinkBudget(shadowing_sigma_db=8.0))
    a, b = simulate(base), simulate(shadowed)
    assert [x.size_bits for x in a.bursts] == [x.size_bits for x in b.bursts]
    assert not np.array_equal(a.ctx.snr, b.ctx.snr)
    assert simulate(shadowed).digest() == b.digest()


@pytest.mark.parametrize(
    "changes,path",
    [
        ({"frame_ms": 2}, "frame_ms"),
        ({"horizon_ms": 0}, "horizon_ms"),
        ({"ccs": ()}, "ccs"),
        ({"scheduler": "PF"}, "scheduler"),
        ({"best_cc_rule": "first"}, "metrics.best_cc_rule"),
        ({"gbr_metric_qcis": {0, 2}}, "gbr_metric_qcis"),
        ({"migration_hysteresis_db": -1.0}, "qscs.migration_hysteresis_db"),
        ({"seed": -3}, "seed"),
    ],
)
def test_config_errors_name_the_field(changes, path):
    with pytest.raises(ConfigError) as info:
        SimConfig(**changes)
    assert info.value.path == path


def test_carrier_ids_must_follow_order():
    with pytest.raises(ConfigError):
        SimConfig(ccs=(PAPER_6CC[1],))


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.integers(0, 10_000),
    st.sampled_from(list(SchedulerKind)),
    st.integers(1, 4),
    st.floats(0.0, 1.0),
)
def test_random_runs_keep_invariants(seed, kind, n_users, legacy):
    traffic = TrafficConfig(n_users=n_users, requests_per_user_mean=4, legacy_fraction=legacy, cell_radius_m=20_000)
    ccs = (
        ComponentCarrier(0, 900.0, 1.4),
        ComponentCarrier(1, 1800.0, 3.0, CcClass.LTE_A_ONLY),
        ComponentCarrier(2, 2100.0, 1.4),
    )
    cfg = SimConfig(horizon_ms=3000, seed=seed, scheduler=kind, traffic=traffic, ccs=ccs)
    result = simulate(cfg)
    assert run_violations(result) == []
    legacy_users = [u.user_id for u in result.ctx.users if u.user_type is UserType.LEGACY_LTE]
    a = result.log.allocations()
    users = np.array([b.user_id for b in result.ctx.bursts])[a["burst"]]
    assert not np.any(np.isin(users, legacy_users) & (a["cc"] == 1))  # LTE-A-only carrier


@pytest.mark.parametrize("seed", range(20))
def test_jus_serves_at_least_separated_schedulers(seed):
    cfg = SimConfig(horizon_ms=3000, seed=seed, traffic=TrafficConfig(n_users=4, requests_per_user_mean=6))
    wl = generate_workload(cfg.traffic, cfg.horizon_ms, seed)
    served = {
        k: sum(b.served_bits for b in simulate(cfg.with_(scheduler=k), wl).bursts)
        for k in (SchedulerKind.JUS, SchedulerKind.SRUS, SchedulerKind.SBLS_CD, SchedulerKind.SBLS_LL)
    }
    assert all(served[SchedulerKind.JUS] >= v for v in served.values())
