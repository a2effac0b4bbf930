"""Two-level schedulers with one independent FIFO resource scheduler per carrier.

SRUS pins each user to one random carrier; SBLS dispatches every burst on
arrival, cyclically (CD) or to the least loaded carrier per PRB (LL).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..traffic import Burst
from .base import Grant, Scheduler, SchedulerKind, ceil_div


def srus_assign_user(user_id: int, ccs: Sequence[int], rng: np.random.Generator) -> int:
    """Uniformly random carrier for ``user_id``; the caller keeps it for the user's lifetime."""
    if not ccs:
        raise ValueError(f"user {user_id} has no accessible carrier")
    return int(ccs[int(rng.integers(len(ccs)))])


def percc_fifo_schedule(
    cc_id: int, queue_view: Sequence[Burst], prbs: Sequence[int], bits: Sequence[Sequence[int]]
) -> list[Grant]:
    """Hand the carrier's PRBs to bursts in arrival order, each taking what it can still use."""
    grants = []
    pos, n = 0, len(prbs)
    for b in queue_view:
        if pos == n:
            break
        r = bits[b.user_id][cc_id]
        if r <= 0 or b.remaining_bits <= 0:
            continue
        k = min(ceil_div(b.remaining_bits, r), n - pos)
        grants.append(Grant(cc_id, list(prbs[pos : pos + k]), b.burst_id))
        pos += k
    return grants


class SblsDispatchState:
    def __init__(self, n_ccs: int):
        self.cursor = 0
        self.load_bits = [0] * n_ccs


def sbls_dispatch(
    burst: Burst,
    ccs: Sequence[int],
    prb_counts: Sequence[int],
    state: SblsDispatchState,
    policy: str,
) -> int:
    """Pick the carrier serving ``burst``; ``ccs`` are the carriers the user may access."""
    if not ccs:
        raise ValueError(f"burst {burst.burst_id} has no accessible carrier")
    n = len(prb_counts)
    if policy == "CD":
        # cycle over every carrier regardless of user, skipping inaccessible ones
        allowed = set(ccs)
        for _ in range(n):
            c = state.cursor
            state.cursor = (state.cursor + 1) % n
            if c in allowed:
                return c
        raise AssertionError("unreachable")
    if policy == "LL":
        # min load/PRBs, compared exactly by cross-multiplication; ties -> lowest id
        best = ccs[0]
        for c in ccs[1:]:
            if state.load_bits[c] * prb_counts[best] < state.load_bits[best] * prb_counts[c]:
                best = c
        return best
    raise ValueError(f"unknown SBLS dispatch policy {policy!r}")


class _PerCarrierFifo(Scheduler):
    def __init__(self, ctx, rng):
        super().__init__(ctx, rng)
        self.fifo: list[dict[int, Burst]] = [{} for _ in ctx.ccs]
        self.cc_of: dict[int, int] = {}
        self._all_prbs = [list(range(n)) for n in ctx.prb_counts]

    def _place(self, burst: Burst, cc: int) -> None:
        self.cc_of[burst.burst_id] = cc
        self.fifo[cc][burst.burst_id] = burst

    def schedule(self, frame):
        grants = []
        bits = self.ctx.bits
        for c, q in enumerate(self.fifo):
            if q:
                grants.extend(percc_fifo_schedule(c, list(q.values()), self._all_prbs[c], bits))
        return grants

    def retire(self, burst):
        c = self.cc_of.pop(burst.burst_id, None)
        if c is not None:
            self.fifo[c].pop(burst.burst_id, None)

    def has_backlog(self):
        return bool(self.cc_of)


class SeparatedRandomUserScheduler(_PerCarrierFifo):
    kind = SchedulerKind.SRUS

    def __init__(self, ctx, rng):
        super().__init__(ctx, rng)
        self.user_cc: dict[int, int] = {}

    def arrive(self, burst, frame):
        u = burst.user_id
        if u not in self.user_cc:
            self.user_cc[u] = srus_assign_user(u, self.ctx.candidates(u), self.rng)
        self._place(burst, self.user_cc[u])


class SeparatedBurstLevelScheduler(_PerCarrierFifo):
    def __init__(self, ctx, rng, policy: str):
        super().__init__(ctx, rng)
        self.policy = policy
        self.kind = SchedulerKind.SBLS_CD if policy == "CD" else SchedulerKind.SBLS_LL
        self.dispatch = SblsDispatchState(len(ctx.ccs))

    def arrive(self, burst, frame):
        c = sbls_dispatch(burst, self.ctx.candidates(burst.user_id), self.ctx.prb_counts, self.dispatch, self.policy)
        self.dispatch.load_bits[c] += burst.remaining_bits
        self._place(burst, c)

    def credited(self, burst_id: int, bits: int) -> None:
        self.dispatch.load_bits[self.cc_of[burst_id]] -= bits

    def retire(self, burst):
        c = self.cc_of.get(burst.burst_id)
        if c is not None:
            self.dispatch.load_bits[c] -= burst.remaining_bits
        super().retire(burst)
