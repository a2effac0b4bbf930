from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..qos import QciTable
from ..radio import ComponentCarrier, CcClass, LinkBudget, prb_rate_bps, snr_db
from ..traffic import Burst, User, UserType

MAX_AGGREGATED_CCS = 5
FRAME_S = 1e-3


class SchedulerKind(str, enum.Enum):
    JUS = "JUS"
    SRUS = "SRUS"
    SBLS_CD = "SBLS_CD"
    SBLS_LL = "SBLS_LL"
    QSCS = "QSCS"

    @classmethod
    def parse(cls, name: str) -> "SchedulerKind":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scheduler {name!r}; choose from {[k.value for k in cls]}") from None


class AllocationRecord(NamedTuple):
    frame_ms: int
    cc_id: int
    prb_index: int
    burst_id: int
    achieved_bits: int


class Grant(NamedTuple):
    """PRBs of one carrier granted to one burst for the current frame."""

    cc_id: int
    prbs: list[int]
    burst_id: int


class EventSink:
    """What a scheduler may report besides allocations (engine-provided)."""

    def preempted(self, frame: int, victim: int, claimant: int) -> None: ...

    def migrated(self, frame: int, burst_id: int, from_cc: int, to_cc: int) -> None: ...

    def admitted(self, frame: int, burst_id: int) -> None: ...

    def rejected(self, frame: int, burst_id: int) -> None: ...


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def prb_bits(rate_bps: float) -> int:
    """Whole bits one PRB carries in one frame at ``rate_bps``."""
    return int(math.floor(rate_bps * FRAME_S + 1e-9))


def accessible(user: User, cc: ComponentCarrier) -> bool:
    return cc.cc_class is CcClass.SHARED or user.user_type is UserType.LTE_A


@dataclass
class RunContext:
    """Per-run static data every scheduler reads: carriers, per-user channel tables, bursts."""

    ccs: list[ComponentCarrier]
    users: list[User]
    bursts: list[Burst]
    qci_table: QciTable
    bits: list[list[int]]  # bits[user][cc] per PRB-frame
    snr: np.ndarray  # (users, ccs) in dB
    rank: list[list[int]]  # cc ids best-first per user
    usable: list[list[int]]  # ranked, accessible and inside coverage (bits > 0)
    accessible: list[list[int]]  # accessible cc ids, ascending
    top: list[list[int]]  # usable carriers sharing the user's best SNR, ranked
    gbr_qcis: frozenset[int]
    migration_hysteresis_db: float = 0.0

    @property
    def prb_counts(self) -> list[int]:
        return [cc.prb_count for cc in self.ccs]

    def candidates(self, user_id: int) -> list[int]:
        """Carriers a single-carrier policy may pin the user to, ascending; accessible ones if none is usable."""
        return sorted(self.usable[user_id]) or self.accessible[user_id]

    @classmethod
    def build(
        cls,
        ccs: Sequence[ComponentCarrier],
        users: Sequence[User],
        bursts: Sequence[Burst],
        lb: LinkBudget,
        qci_table: QciTable,
        gbr_qcis: frozenset[int] | None = None,
        shadowing_db: np.ndarray | None = None,
        migration_hysteresis_db: float = 0.0,
    ) -> "RunContext":
        ccs = list(ccs)
        if [cc.cc_id for cc in ccs] != list(range(len(ccs))):
            raise ValueError("cc_ids must be 0..M-1 in declaration order")
        n_u, n_c = len(users), len(ccs)
        if shadowing_db is None:
            shadowing_db = np.zeros((n_u, n_c))
        snr = np.empty((n_u, n_c))
        for u in users:
            for cc in ccs:
                snr[u.user_id, cc.cc_id] = snr_db(u.distance_m, cc, lb, float(shadowing_db[u.user_id, cc.cc_id]))
        acc = [[c for c in range(n_c) if accessible(users[u], ccs[c])] for u in range(n_u)]
        # a carrier the user may not access, or hears below the SNR floor, carries nothing for it
        bits = [
            [
                prb_bits(prb_rate_bps(snr[u, c], lb)) if c in acc[u] and snr[u, c] >= lb.snr_min_db else 0
                for c in range(n_c)
            ]
            for u in range(n_u)
        ]
        rank = [sorted(range(n_c), key=lambda c, u=u: (-snr[u, c], c)) for u in range(n_u)]
        usable = [[c for c in rank[u] if bits[u][c] > 0] for u in range(n_u)]
        top = [[c for c in usable[u] if snr[u, c] >= snr[u, usable[u][0]] - 1e-9] if usable[u] else [] for u in range(n_u)]
        return cls(
            ccs=ccs,
            users=list(users),
            bursts=list(bursts),
            qci_table=qci_table,
            bits=bits,
            snr=snr,
            rank=rank,
            usable=usable,
            accessible=acc,
            top=top,
            gbr_qcis=qci_table.gbr_qcis() if gbr_qcis is None else frozenset(gbr_qcis),
            migration_hysteresis_db=migration_hysteresis_db,
        )


class Scheduler:
    """Sequential per-frame contract driven by the engine.

    ``arrive`` is step 1 (queue the new burst), ``prepare`` covers
    re-optimisation plus admission/dispatch/assignment, ``schedule`` returns
    this frame's grants and ``retire`` drops finished bursts.
    """

    kind: SchedulerKind

    def __init__(self, ctx: RunContext, rng: np.random.Generator):
        self.ctx = ctx
        self.rng = rng

    def arrive(self, burst: Burst, frame: int) -> None:
        raise NotImplementedError

    def prepare(self, frame: int, new: list[Burst], events: EventSink) -> None:
        pass

    def schedule(self, frame: int) -> list[Grant]:
        raise NotImplementedError

    def credited(self, burst_id: int, bits: int) -> None:
        """Called after ``bits`` were delivered to ``burst_id`` this frame."""

    def retire(self, burst: Burst) -> None:
        raise NotImplementedError

    def has_backlog(self) -> bool:
        raise NotImplementedError
