"""The 1 ms frame loop.

Within a frame: arrivals are injected, the policy re-optimises and admits or
dispatches, it returns grants, the engine credits bits PRB by PRB (only a
burst's last PRB of a frame may be partly used) and then retires bursts that
are complete or whose GBR service window has closed. Frames with nothing
backlogged are skipped without changing the log.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .eventlog import EventKind, EventLog
from .qos import DEFAULT_GBR_METRIC_QCIS, DEFAULT_QCI_TABLE, QciTable
from .radio import CcClass, ComponentCarrier, LinkBudget
from .schedulers import RunContext, Scheduler, SchedulerKind, make_scheduler
from .traffic import Burst, BurstState, TrafficConfig, Workload, generate_workload, spawn_streams

log = logging.getLogger(__name__)

PAPER_6CC = (
    ComponentCarrier(0, 900.0, 1.4),
    ComponentCarrier(1, 900.0, 5.0),
    ComponentCarrier(2, 1800.0, 1.4),
    ComponentCarrier(3, 1800.0, 1.4),
    ComponentCarrier(4, 1800.0, 3.0),
    ComponentCarrier(5, 2100.0, 1.4),
)

BEST_CC_RULES = ("snr_tie", "rank_head")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SimConfig:
    horizon_ms: int = 180_000
    frame_ms: int = 1
    ccs: tuple[ComponentCarrier, ...] = PAPER_6CC
    link_budget: LinkBudget = field(default_factory=LinkBudget)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    scheduler: SchedulerKind = SchedulerKind.QSCS
    seed: int = 0
    qci_table: QciTable = DEFAULT_QCI_TABLE
    # QCIs that get reservations (QSCS) and service windows; None -> GBR rows of the table
    reservation_qcis: frozenset[int] | None = None
    gbr_metric_qcis: frozenset[int] = DEFAULT_GBR_METRIC_QCIS
    migration_hysteresis_db: float = 0.0
    best_cc_rule: str = "snr_tie"
    beta_qos_bit_weighted: bool = False
    subcarrier_spacing_khz: float = 15.0  # kept for completeness; nothing runs below a PRB

    def __post_init__(self) -> None:
        if not isinstance(self.scheduler, SchedulerKind):
            object.__setattr__(self, "scheduler", _wrap("scheduler", SchedulerKind.parse, self.scheduler))
        if self.frame_ms != 1:
            raise ConfigError("frame_ms", "only 1 ms frames are supported")
        if not isinstance(self.horizon_ms, int) or self.horizon_ms <= 0:
            raise ConfigError("horizon_ms", f"must be a positive integer, got {self.horizon_ms!r}")
        if self.horizon_ms % self.frame_ms:
            raise ConfigError("horizon_ms", "must be a multiple of frame_ms")
        if not self.ccs:
            raise ConfigError("ccs", "at least one component carrier is required")
        for i, cc in enumerate(self.ccs):
            if cc.cc_id != i:
                raise ConfigError(f"ccs[{i}].cc_id", f"carriers must be numbered 0..M-1, got {cc.cc_id}")
        for name in ("reservation_qcis", "gbr_metric_qcis"):
            qcis = getattr(self, name)
            if qcis is not None:
                object.__setattr__(self, name, frozenset(qcis))
                if not set(qcis) <= set(range(1, 10)):
                    raise ConfigError(name, f"QCIs must lie in 1..9, got {sorted(qcis)}")
        if self.migration_hysteresis_db < 0:
            raise ConfigError("qscs.migration_hysteresis_db", "must be >= 0")
        if self.best_cc_rule not in BEST_CC_RULES:
            raise ConfigError("metrics.best_cc_rule", f"expected one of {BEST_CC_RULES}, got {self.best_cc_rule!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")

    @property
    def gbr_qcis(self) -> frozenset[int]:
        return self.qci_table.gbr_qcis() if self.reservation_qcis is None else self.reservation_qcis

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


def _wrap(path, fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def config_fields() -> list[str]:
    return [f.name for f in fields(SimConfig)]


def shadowing_matrix(cfg: SimConfig, n_users: int) -> np.ndarray:
    sigma = cfg.link_budget.shadowing_sigma_db
    if sigma == 0 or n_users == 0:
        return np.zeros((n_users, len(cfg.ccs)))
    return spawn_streams(cfg.seed)["shadowing"].normal(0.0, sigma, size=(n_users, len(cfg.ccs)))


@dataclass
class RunResult:
    config: SimConfig
    ctx: RunContext
    log: EventLog
    bursts: list[Burst]  # bursts that arrived before the horizon, final state
    outcome: dict[int, EventKind] = field(default_factory=dict)  # DONE / EXP / TRUNC per burst

    def digest(self) -> str:
        return self.log.digest()


class Engine:
    """Owns one run: the context, the scheduler and the log."""

    def __init__(self, cfg: SimConfig, workload: Workload):
        self.cfg = cfg
        horizon = cfg.horizon_ms
        bursts = sorted(
            (b for b in workload.fresh_bursts() if b.arrival_ms < horizon),
            key=lambda b: (b.arrival_ms, b.burst_id),
        )
        by_id: list[Burst | None] = [None] * (max((b.burst_id for b in bursts), default=-1) + 1)
        for b in bursts:
            by_id[b.burst_id] = b
        self.ctx = RunContext.build(
            cfg.ccs,
            workload.users,
            by_id,
            cfg.link_budget,
            cfg.qci_table,
            gbr_qcis=cfg.gbr_qcis,
            shadowing_db=shadowing_matrix(cfg, len(workload.users)),
            migration_hysteresis_db=cfg.migration_hysteresis_db,
        )
        self.pending = bursts
        self.log = EventLog()
        self.scheduler: Scheduler = make_scheduler(cfg.scheduler, self.ctx, spawn_streams(cfg.seed)["scheduler"])
        self.live: dict[int, Burst] = {}
        self.outcome: dict[int, EventKind] = {}
        self._next = 0

    def step_frame(self, frame: int) -> None:
        ctx, sched, ev = self.ctx, self.scheduler, self.log
        new = []
        while self._next < len(self.pending) and self.pending[self._next].arrival_ms == frame:
            b = self.pending[self._next]
            self._next += 1
            ev.add(EventKind.ARR, frame, b.burst_id)
            self.live[b.burst_id] = b
            sched.arrive(b, frame)
            new.append(b)
        sched.prepare(frame, new, ev)
        granted = set()
        for cc, prbs, bid in sched.schedule(frame):
            b = self.live.get(bid)
            if b is None:
                raise RuntimeError(f"frame {frame}: grant to burst {bid} which is not in the system")
            r = ctx.bits[b.user_id][cc]
            k = len(prbs)
            rem = b.remaining_bits
            if k == 0:
                continue
            if r <= 0 or rem <= (k - 1) * r:
                raise RuntimeError(f"frame {frame}: {k} PRBs on carrier {cc} exceed what burst {bid} can use")
            got = min(rem, k * r)
            bits = [r] * k
            bits[-1] = got - (k - 1) * r
            ev.add_allocations(frame, cc, list(prbs), bid, bits)
            b.served_bits += got
            sched.credited(bid, got)
            granted.add(bid)
        for bid in list(self.live):
            b = self.live[bid]
            if b.remaining_bits <= 0:
                self._retire(b, frame, EventKind.DONE)
            elif b.qci in ctx.gbr_qcis and frame + 1 >= b.arrival_ms + b.duration_ms:
                self._retire(b, frame, EventKind.EXP, b.remaining_bits)

    def _retire(self, b: Burst, frame: int, kind: EventKind, *extra: int) -> None:
        self.log.add(kind, frame, b.burst_id, *extra)
        self.outcome[b.burst_id] = kind
        b.state = BurstState.DONE
        del self.live[b.burst_id]
        self.scheduler.retire(b)

    def run(self) -> RunResult:
        horizon = self.cfg.horizon_ms
        frame = 0
        while frame < horizon:
            if not self.live:
                if self._next >= len(self.pending):
                    break
                frame = max(frame, self.pending[self._next].arrival_ms)  # skip idle frames
            self.step_frame(frame)
            frame += 1
        for b in list(self.live.values()):
            self.log.add(EventKind.TRUNC, horizon, b.burst_id, b.remaining_bits)
            self.outcome[b.burst_id] = EventKind.TRUNC
        return RunResult(self.cfg, self.ctx, self.log, self.pending, self.outcome)


def simulate(cfg: SimConfig, workload: Workload | None = None) -> RunResult:
    """One run; the workload is generated from ``cfg.seed`` unless given."""
    if workload is None:
        workload = generate_workload(cfg.traffic, cfg.horizon_ms, cfg.seed)
    result = Engine(cfg, workload).run()
    log.info("%s seed=%d events=%d digest=%s", cfg.scheduler.value, cfg.seed, len(result.log), result.digest())
    return result


def run(cfg: SimConfig, workload: Workload | None = None):
    """Run and evaluate: returns ``(EventLog, MetricsReport)``."""
    from .metrics import evaluate

    result = simulate(cfg, workload)
    return result.log, evaluate(result)


def single_cell(
    ccs: Sequence[tuple[float, float]] | Sequence[ComponentCarrier],
    cc_class: CcClass = CcClass.SHARED,
) -> tuple[ComponentCarrier, ...]:
    """Carriers numbered in order from (frequency MHz, bandwidth MHz) pairs."""
    out = []
    for i, cc in enumerate(ccs):
        if isinstance(cc, ComponentCarrier):
            out.append(replace(cc, cc_id=i))
        else:
            out.append(ComponentCarrier(i, float(cc[0]), float(cc[1]), cc_class))
    return tuple(out)
