"""QoS and channel scheduling (QSCS).

Bursts are served by QCI precedence and then FIFO. A GBR burst walks its
user's SNR-ranked carriers (restricted to coverage) and aggregates PRBs on up
to five carriers until its required rate is met; that share becomes a
reservation pinned for the service window, taken from idle PRBs first and
otherwise by evicting lower-priority non-GBR holders. Reservations migrate to
better-ranked carriers as room appears there. Non-GBR bursts carry no rate
guarantee, so they are served only on the carriers with the user's best SNR,
recomputed every frame.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from ..qos import QciProfile, is_preemptable_by
from ..traffic import Burst, BurstState, QciQueues
from .base import MAX_AGGREGATED_CCS, EventSink, Grant, RunContext, Scheduler, SchedulerKind, ceil_div

FREE = -1


class Admission(str, enum.Enum):
    ADMITTED = "Admitted"
    ADMITTED_WITH_PREEMPTION = "AdmittedWithPreemption"
    QUEUED = "Queued"
    INFEASIBLE = "CapacityInfeasible"


@dataclass
class AdmissionOutcome:
    kind: Admission
    prbs: dict[int, list[int]] = field(default_factory=dict)
    victims: list[int] = field(default_factory=list)

    @property
    def cc_set(self) -> list[int]:
        return list(self.prbs)


def rate_bits_per_frame(burst: Burst) -> int:
    return ceil_div(burst.required_rate_bps, 1000)


def walk_ranked(
    need_bits: int,
    ranked: Sequence[int],
    bits_u: Sequence[int],
    avail: dict[int, list[int]],
    user_ccs: set[int] | frozenset[int],
    cap: int = MAX_AGGREGATED_CCS,
) -> tuple[dict[int, list[int]], int]:
    """Take PRBs best carrier first until ``need_bits`` is covered.

    Returns the chosen PRBs per carrier and the bits still missing (<= 0 when met).
    A carrier outside ``user_ccs`` is only opened while fewer than ``cap`` are in use.
    """
    chosen: dict[int, list[int]] = {}
    in_use = set(user_ccs)
    for c in ranked:
        if need_bits <= 0:
            break
        lst = avail.get(c)
        if not lst:
            continue
        if c not in in_use and len(in_use) >= cap:
            continue
        r = bits_u[c]
        k = min(len(lst), ceil_div(need_bits, r))
        chosen[c] = lst[:k]
        need_bits -= k * r
        in_use.add(c)
    return chosen, need_bits


def best_case_bits(ranked: Sequence[int], bits_u: Sequence[int], prb_counts: Sequence[int]) -> int:
    """Per-frame bits with every PRB of the user's best five carriers."""
    caps = sorted((prb_counts[c] * bits_u[c] for c in ranked), reverse=True)
    return sum(caps[:MAX_AGGREGATED_CCS])


def victim_order(holders: Sequence[Burst], profiles: dict[int, QciProfile]) -> list[Burst]:
    """Lowest precedence first (largest priority number), then latest arrival."""
    return sorted(holders, key=lambda h: (-profiles[h.qci].priority, -h.arrival_ms, -h.burst_id))


def qscs_admit(
    burst: Burst,
    ctx: RunContext,
    reserved_by: Sequence[Sequence[int]],
    held_by: Sequence[Sequence[int]],
    user_ccs: set[int] | frozenset[int] = frozenset(),
) -> AdmissionOutcome:
    """Decide admission of ``burst`` against the current PRB occupancy.

    ``reserved_by[c][p]`` is the GBR reservation owner of PRB p on carrier c
    and ``held_by[c][p]`` the non-GBR burst holding it; -1 when unused.
    ``user_ccs`` are carriers the user already aggregates. Nothing is mutated.
    """
    u = burst.user_id
    ranked = ctx.usable[u]
    bits_u = ctx.bits[u]
    need = rate_bits_per_frame(burst)
    is_gbr = burst.qci in ctx.gbr_qcis
    if is_gbr and best_case_bits(ranked, bits_u, ctx.prb_counts) < need:
        return AdmissionOutcome(Admission.INFEASIBLE)

    free: dict[int, list[int]] = {}
    holders: dict[int, Burst] = {}
    for c in ranked:
        lst = []
        for p, owner in enumerate(reserved_by[c]):
            if owner != FREE:
                continue
            h = held_by[c][p]
            if h == FREE or h == burst.burst_id:
                lst.append(p)
            else:
                holders[h] = ctx.bursts[h]
        free[c] = lst

    chosen, missing = walk_ranked(need, ranked, bits_u, free, user_ccs)
    if missing <= 0:
        return AdmissionOutcome(Admission.ADMITTED, chosen)
    if not is_gbr:
        # elastic: any share is an admission, nothing is evicted for it
        if chosen:
            return AdmissionOutcome(Admission.ADMITTED, chosen)
        return AdmissionOutcome(Admission.QUEUED)

    profiles = {p.qci: p for p in ctx.qci_table}
    claimant = profiles[burst.qci]
    candidates = victim_order(
        [h for h in holders.values() if is_preemptable_by(profiles[h.qci], claimant)], profiles
    )
    avail = {c: list(v) for c, v in free.items()}
    added: list[int] = []
    for victim in candidates:
        gained = False
        for c in ranked:
            for p, h in enumerate(held_by[c]):
                if h == victim.burst_id and reserved_by[c][p] == FREE:
                    avail[c].append(p)  # after free PRBs: free ones are taken first
                    gained = True
        if not gained:
            continue
        added.append(victim.burst_id)
        chosen, missing = walk_ranked(need, ranked, bits_u, avail, user_ccs)
        if missing <= 0:
            taken = {held_by[c][p] for c, ps in chosen.items() for p in ps}
            victims = [v for v in added if v in taken]
            kind = Admission.ADMITTED_WITH_PREEMPTION if victims else Admission.ADMITTED
            return AdmissionOutcome(kind, chosen, victims)
    return AdmissionOutcome(Admission.QUEUED)


class QscsScheduler(Scheduler):
    kind = SchedulerKind.QSCS

    def __init__(self, ctx: RunContext, rng):
        super().__init__(ctx, rng)
        n = ctx.prb_counts
        self.queues = QciQueues()
        self.profiles = {p.qci: p for p in ctx.qci_table}
        self.precedence = ctx.qci_table.precedence_order()
        self.reservations: dict[int, dict[int, list[int]]] = {}
        self.reserved_by = [[FREE] * k for k in n]
        self.held_by = [[FREE] * k for k in n]
        self.elastic: dict[int, Burst] = {}  # active without reservation, arrival order
        self.rejected: set[int] = set()
        self.user_res_ccs: list[Counter] = [Counter() for _ in ctx.users]
        self.events: EventSink = EventSink()

    # -- bookkeeping -----------------------------------------------------

    def _reserve(self, b: Burst, prbs: dict[int, list[int]]) -> None:
        self.reservations[b.burst_id] = {c: sorted(ps) for c, ps in prbs.items()}
        for c, ps in prbs.items():
            for p in ps:
                self.reserved_by[c][p] = b.burst_id
                self.held_by[c][p] = FREE
            self.user_res_ccs[b.user_id][c] += 1

    def _release(self, b: Burst) -> None:
        for c, ps in self.reservations.pop(b.burst_id).items():
            for p in ps:
                self.reserved_by[c][p] = FREE
            self._drop_user_cc(b.user_id, c)

    def _drop_user_cc(self, u: int, c: int) -> None:
        cnt = self.user_res_ccs[u]
        cnt[c] -= 1
        if cnt[c] <= 0:
            del cnt[c]

    def _clear_holdings(self, burst_id: int) -> None:
        for row in self.held_by:
            for p, h in enumerate(row):
                if h == burst_id:
                    row[p] = FREE

    # -- engine contract -------------------------------------------------

    def arrive(self, burst, frame):
        self.queues.enqueue(burst)

    def prepare(self, frame, new, events):
        self.events = events
        qscs_reoptimize(self, frame)
        self._admit_gbr(frame)

    def _admit_gbr(self, frame: int) -> None:
        for qci in self.precedence:
            if qci not in self.ctx.gbr_qcis:
                continue
            while (bid := self.queues.head(qci)) is not None:
                b = self.ctx.bursts[bid]
                out = qscs_admit(b, self.ctx, self.reserved_by, self.held_by, set(self.user_res_ccs[b.user_id]))
                if out.kind is Admission.QUEUED:
                    break
                self.queues.popleft(qci)
                if out.kind is Admission.INFEASIBLE:
                    # no reservation can carry the rate: served best effort instead
                    self.rejected.add(bid)
                    self.elastic[bid] = b
                    b.state = BurstState.ACTIVE
                    self.events.rejected(frame, bid)
                    continue
                for v in out.victims:
                    self._preempt(self.ctx.bursts[v], b, frame)
                self._clear_holdings(bid)
                self._reserve(b, out.prbs)
                b.state = BurstState.ACTIVE
                self.events.admitted(frame, bid)

    def _preempt(self, victim: Burst, claimant: Burst, frame: int) -> None:
        self._clear_holdings(victim.burst_id)
        self.elastic.pop(victim.burst_id, None)
        victim.state = BurstState.PREEMPTED
        self.queues.requeue_front(victim)
        self.events.preempted(frame, victim.burst_id, claimant.burst_id)

    def _key(self, b: Burst) -> tuple[int, int]:
        return self.profiles[b.qci].precedence_key

    def schedule(self, frame):
        """Strict precedence over the grid.

        GBR work comes first: reserved PRBs, then rate-sized shares for GBR
        bursts without a reservation, then any spare PRB on the user's usable
        carriers. Non-GBR bursts follow and are confined to carriers with the
        user's best SNR: a rate-sized share, then whatever is left there.
        """
        ctx = self.ctx
        bits = ctx.bits
        bursts = ctx.bursts
        grants: list[Grant] = []
        left: dict[int, int] = {}
        user_ccs = [set(cnt) for cnt in self.user_res_ccs]
        avail: dict[int, list[int]] = {
            c: [p for p, o in enumerate(row) if o == FREE] for c, row in enumerate(self.reserved_by)
        }
        new_held = [[FREE] * len(row) for row in self.held_by]

        def take(b: Burst, c: int, prbs: list[int]) -> None:
            grants.append(Grant(c, prbs, b.burst_id))
            del avail[c][: len(prbs)]
            left[b.burst_id] -= len(prbs) * bits[b.user_id][c]
            user_ccs[b.user_id].add(c)

        def share(b: Burst, scope: list[int]) -> None:
            need = min(rate_bits_per_frame(b), b.remaining_bits)
            chosen, _ = walk_ranked(need, scope, bits[b.user_id], avail, user_ccs[b.user_id])
            for c, ps in chosen.items():
                take(b, c, ps)
                if b.qci not in ctx.gbr_qcis:
                    for p in ps:
                        new_held[c][p] = b.burst_id
            if chosen and b.burst_id in self.queues and b.qci not in ctx.gbr_qcis:
                self.queues.remove(b)
                self.elastic[b.burst_id] = b
                b.state = BurstState.ACTIVE
                self.events.admitted(frame, b.burst_id)

        def spare(b: Burst, scope: list[int]) -> None:
            u = b.user_id
            for c in scope:
                need = left[b.burst_id]
                if need <= 0:
                    return
                if not avail[c] or (c not in user_ccs[u] and len(user_ccs[u]) >= MAX_AGGREGATED_CCS):
                    continue
                take(b, c, avail[c][: ceil_div(need, bits[u][c])])

        # reserved PRBs, only as many as the burst can still fill
        reserved = sorted(self.reservations, key=lambda i: (self._key(bursts[i]), bursts[i].arrival_ms, i))
        for bid in reserved:
            b = bursts[bid]
            u = b.user_id
            left[bid] = b.remaining_bits
            for c in ctx.rank[u]:
                ps = self.reservations[bid].get(c)
                if ps is None:
                    continue
                k = min(len(ps), max(0, ceil_div(left[bid], bits[u][c])))
                if k:
                    grants.append(Grant(c, ps[:k], bid))
                    left[bid] -= k * bits[u][c]
                avail[c].extend(ps[k:])
        for c in avail:
            avail[c].sort()

        waiting: list[Burst] = []
        for qci in self.precedence:
            waiting.extend(sorted((b for b in self.elastic.values() if b.qci == qci), key=lambda b: (b.arrival_ms, b.burst_id)))
            waiting.extend(bursts[i] for i in self.queues.queue(qci))
        for b in waiting:
            left[b.burst_id] = b.remaining_bits
        gbr_wait = [b for b in waiting if b.qci in ctx.gbr_qcis]
        nongbr_wait = [b for b in waiting if b.qci not in ctx.gbr_qcis]

        for b in gbr_wait:
            share(b, ctx.usable[b.user_id])
        gbr_all = sorted(
            [bursts[i] for i in reserved] + gbr_wait, key=lambda b: (self._key(b), b.arrival_ms, b.burst_id)
        )
        for b in gbr_all:
            spare(b, ctx.usable[b.user_id])
        for b in nongbr_wait:
            share(b, ctx.top[b.user_id])
        for b in nongbr_wait:
            spare(b, ctx.top[b.user_id])
        self.held_by = new_held
        return grants

    def retire(self, burst):
        bid = burst.burst_id
        if bid in self.reservations:
            self._release(burst)
        self.elastic.pop(bid, None)
        self.rejected.discard(bid)
        if bid in self.queues:
            self.queues.remove(burst)
        self._clear_holdings(bid)

    def has_backlog(self):
        return bool(self.reservations or self.elastic or len(self.queues))

    def active_cc_sets(self) -> dict[int, set[int]]:
        return {u: set(cnt) for u, cnt in enumerate(self.user_res_ccs) if cnt}


def qscs_reoptimize(sched: QscsScheduler, frame: int) -> list[tuple[int, int, int]]:
    """Move each reservation's worst carrier onto a strictly better one with room.

    Room means unreserved PRBs; non-GBR use of them is only a per-frame share
    and gives way. The target must offer at least the capacity being moved, so
    the burst's rate never drops. At most one migration per burst and frame.
    """
    ctx = sched.ctx
    bursts = ctx.bursts
    migrations = []
    for bid in sorted(sched.reservations, key=lambda i: (sched._key(bursts[i]), bursts[i].arrival_ms, i)):
        u = bursts[bid].user_id
        held = sched.reservations[bid]
        ranked = ctx.usable[u]
        pos = {c: i for i, c in enumerate(ranked)}
        worst = max(held, key=pos.__getitem__)
        cap_worst = len(held[worst]) * ctx.bits[u][worst]
        for c in ranked[: pos[worst]]:
            if ctx.snr[u, c] - ctx.snr[u, worst] <= ctx.migration_hysteresis_db:
                continue
            idle = [p for p, o in enumerate(sched.reserved_by[c]) if o == FREE]
            k = ceil_div(cap_worst, ctx.bits[u][c])
            if len(idle) < k:
                continue
            ccs_after = set(sched.user_res_ccs[u])
            if sched.user_res_ccs[u][worst] == 1:
                ccs_after.discard(worst)
            ccs_after.add(c)
            if len(ccs_after) > MAX_AGGREGATED_CCS:
                continue
            for p in held.pop(worst):
                sched.reserved_by[worst][p] = FREE
            sched._drop_user_cc(u, worst)
            if c not in held:
                sched.user_res_ccs[u][c] += 1
            held[c] = sorted(held.get(c, []) + idle[:k])
            for p in idle[:k]:
                sched.reserved_by[c][p] = bid
                sched.held_by[c][p] = FREE
            sched.events.migrated(frame, bid, worst, c)
            migrations.append((bid, worst, c))
            break
    return migrations
