from __future__ import annotations

from dataclasses import dataclass

import pytest

from casim import config as casim_config
from casim.engine import simulate
from casim.metrics import MetricsReport, evaluate
from casim.schedulers import SchedulerKind
from casim.traffic import Workload, generate_workload

from invariants import run_violations

MATRIX_SEEDS = list(range(20))
POLICIES = list(SchedulerKind)

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@dataclass
class Cell:
    report: MetricsReport
    violations: list[str]
    replay_digest: str


@pytest.fixture(scope="session")
def shrunk_matrix() -> dict[tuple[SchedulerKind, int], Cell]:
    """Every policy on 20 seeds of the shrunk preset, replayed from one workload per seed."""
    base = casim_config.preset("paper-6cc-shrunk")
    cells = {}
    for seed in MATRIX_SEEDS:
        cfg_seed = base.with_(seed=seed)
        text = generate_workload(cfg_seed.traffic, cfg_seed.horizon_ms, seed).to_replay_text()
        for kind in POLICIES:
            cfg = cfg_seed.with_(scheduler=kind)
            result = simulate(cfg, Workload.from_replay_text(text))
            again = simulate(cfg, Workload.from_replay_text(text)).digest()
            cells[kind, seed] = Cell(evaluate(result), run_violations(result), again)
    return cells


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
