"""Joint user scheduling: one scheduler over the pooled PRBs of every carrier."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..traffic import Burst
from .base import Grant, Scheduler, SchedulerKind, ceil_div


def greedy_max_rate(
    bursts: Sequence[Burst],
    prb_counts: Sequence[int],
    bits: Sequence[Sequence[int]],
    free: Sequence[Sequence[int]] | None = None,
) -> list[Grant]:
    """Each PRB, in (cc_id, prb_index) order, goes to the backlogged burst with the
    best per-PRB rate on that carrier; ties by earliest arrival, then lowest id.

    ``bursts`` must already be in (arrival, burst_id) order.
    """
    left = {b.burst_id: b.remaining_bits for b in bursts}
    grants = []
    for c, n in enumerate(prb_counts):
        prbs = list(range(n)) if free is None else list(free[c])
        if not prbs:
            continue
        # stable sort keeps (arrival, id) order among equal rates
        cands = sorted((b for b in bursts if bits[b.user_id][c] > 0), key=lambda b: -bits[b.user_id][c])
        pos = 0
        for b in cands:
            need = left[b.burst_id]
            if need <= 0:
                continue
            r = bits[b.user_id][c]
            k = min(ceil_div(need, r), len(prbs) - pos)
            grants.append(Grant(c, prbs[pos : pos + k], b.burst_id))
            left[b.burst_id] = need - k * r
            pos += k
            if pos == len(prbs):
                break
    return grants


def optimal_assignment(
    bursts: Sequence[Burst],
    prb_counts: Sequence[int],
    bits: Sequence[Sequence[int]],
) -> list[Grant]:
    """Exact single-frame throughput maximiser (integer program).

    Maximises sum_b min(remaining_b, sum_c x_bc * r_bc) over integer PRB counts
    x_bc, with a tiny per-PRB penalty so no PRB is granted without carrying bits.
    """
    nb, nc = len(bursts), len(prb_counts)
    nx = nb * nc
    total_prbs = sum(prb_counts)
    eps = 1.0 / (4.0 * (total_prbs + 1))
    # variables: x (nb*nc, integer) then y (nb, continuous)
    c_obj = np.concatenate([np.full(nx, eps), -np.ones(nb)])
    rows, lo, hi = [], [], []
    for i, b in enumerate(bursts):
        row = np.zeros(nx + nb)
        for c in range(nc):
            row[i * nc + c] = -bits[b.user_id][c]
        row[nx + i] = 1.0
        rows.append(row)
        lo.append(-np.inf)
        hi.append(0.0)
    for c in range(nc):
        row = np.zeros(nx + nb)
        row[c::nc][:nb] = 1.0
        rows.append(row)
        lo.append(0.0)
        hi.append(prb_counts[c])
    ub = np.concatenate(
        [
            np.array([prb_counts[c] if bits[b.user_id][c] > 0 else 0 for b in bursts for c in range(nc)], float),
            np.array([b.remaining_bits for b in bursts], float),
        ]
    )
    res = milp(
        c_obj,
        constraints=LinearConstraint(np.array(rows), lo, hi),
        bounds=Bounds(np.zeros(nx + nb), ub),
        integrality=np.concatenate([np.ones(nx), np.zeros(nb)]),
        options={"mip_rel_gap": 0.0},
    )
    if not res.success:
        raise RuntimeError(f"JUS integer program failed: {res.message}")
    x = np.rint(res.x[:nx]).astype(int).reshape(nb, nc)
    grants = []
    for c in range(nc):
        pos = 0
        order = sorted(range(nb), key=lambda i: -bits[bursts[i].user_id][c])
        for i in order:
            k = int(x[i, c])
            if k:
                grants.append(Grant(c, list(range(pos, pos + k)), bursts[i].burst_id))
                pos += k
    return grants


def uniform_rate_optimal(bursts: Sequence[Burst], prb_counts: Sequence[int], rate: int) -> list[Grant]:
    """Exact optimum when every PRB carries ``rate`` bits for every burst.

    The value of a burst's k-th PRB is ``rate`` up to its last whole PRB, then
    one partial unit, then nothing; picking the N best marginal units of these
    concave per-burst profiles is optimal.
    """
    n_total = sum(prb_counts)
    full = [b.remaining_bits // rate for b in bursts]
    take = [0] * len(bursts)
    left = n_total
    for i, f in enumerate(full):  # full units, earliest arrival first
        k = min(f, left)
        take[i] = k
        left -= k
    if left:
        partial = sorted(
            (i for i, b in enumerate(bursts) if b.remaining_bits % rate),
            key=lambda i: -(bursts[i].remaining_bits % rate),
        )
        for i in partial[:left]:
            take[i] += 1
    grants = []
    slots = ((c, p) for c, n in enumerate(prb_counts) for p in range(n))
    for i, k in enumerate(take):
        by_cc: dict[int, list[int]] = {}
        for _ in range(k):
            c, p = next(slots)
            by_cc.setdefault(c, []).append(p)
        grants.extend(Grant(c, prbs, bursts[i].burst_id) for c, prbs in by_cc.items())
    return grants


def _greedy_certified(bursts, prb_counts, bits, grants) -> bool:
    if len(bursts) <= 1:
        return True
    if all(b.remaining_bits >= sum(n * r for n, r in zip(prb_counts, bits[b.user_id])) for b in bursts):
        return True  # saturated backlogs: the objective is separable per PRB
    user = {b.burst_id: b.user_id for b in bursts}
    got: dict[int, int] = {}
    for g in grants:
        got[g.burst_id] = got.get(g.burst_id, 0) + len(g.prbs) * bits[user[g.burst_id]][g.cc_id]
    served = sum(min(b.remaining_bits, got.get(b.burst_id, 0)) for b in bursts)
    if served == sum(b.remaining_bits for b in bursts):
        return True
    bound = sum(n * max(bits[b.user_id][c] for b in bursts) for c, n in enumerate(prb_counts))
    return served == bound


def jus_schedule(
    bursts: Sequence[Burst], prb_counts: Sequence[int], bits: Sequence[Sequence[int]]
) -> list[Grant]:
    """Throughput-optimal single-frame allocation over the pooled PRBs.

    ``bursts`` must be in (arrival, burst_id) order.
    """
    rates = {bits[b.user_id][c] for b in bursts for c, n in enumerate(prb_counts) if n}
    if len(rates) == 1 and 0 not in rates:
        return uniform_rate_optimal(bursts, prb_counts, rates.pop())
    grants = greedy_max_rate(bursts, prb_counts, bits)
    if _greedy_certified(bursts, prb_counts, bits, grants):
        return grants
    return optimal_assignment(bursts, prb_counts, bits)


class JointUserScheduler(Scheduler):
    kind = SchedulerKind.JUS

    def __init__(self, ctx, rng):
        super().__init__(ctx, rng)
        self.backlog: dict[int, Burst] = {}  # insertion order == arrival order

    def arrive(self, burst, frame):
        self.backlog[burst.burst_id] = burst

    def schedule(self, frame):
        if not self.backlog:
            return []
        return jus_schedule(list(self.backlog.values()), self.ctx.prb_counts, self.ctx.bits)

    def retire(self, burst):
        self.backlog.pop(burst.burst_id, None)

    def has_backlog(self):
        return bool(self.backlog)
