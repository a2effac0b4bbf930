"""Evaluation quantities computed from a run's event log.

* sojourn: arrival to the end of the frame of the burst's last PRB
  (a first-to-last-PRB span is reported alongside);
* beta_opt_cc: share of PRB-frames placed on a carrier with the user's best SNR;
* beta_qos: mean per-burst fulfillment min(1, served / size) over the scored QCIs;
* alpha_sch_qoe: the product of the two betas.

A quantity with nothing to average over is ``None`` ("no data").
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .eventlog import EventKind, EventLog
from .traffic import Burst


class ExcludedFromMetric(LookupError):
    """The burst has no defined value for this metric (e.g. cut off by the horizon)."""


def _served_and_span(log: EventLog, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = log.allocations()
    served = np.bincount(a["burst"], weights=a["bits"], minlength=n).astype(np.int64)
    first = np.full(n, np.iinfo(np.int64).max)
    last = np.full(n, -1)
    np.minimum.at(first, a["burst"], a["frame"])
    np.maximum.at(last, a["burst"], a["frame"])
    return served, first, last


def burst_outcomes(log: EventLog) -> dict[int, EventKind]:
    out = {}
    for kind in (EventKind.DONE, EventKind.EXP, EventKind.TRUNC):
        _, x = log.of_kind(kind)
        for bid in x[:, 0]:
            out[int(bid)] = kind
    return out


def sojourn_ms(burst: Burst, log: EventLog) -> int:
    """Arrival to departure in ms for one burst.

    A completed burst departs at the end of the frame of its last PRB; a GBR
    burst whose window closed departs at the window's end.
    """
    outcome = burst_outcomes(log).get(burst.burst_id)
    if outcome is EventKind.EXP:
        return burst.duration_ms
    if outcome is not EventKind.DONE:
        raise ExcludedFromMetric(f"burst {burst.burst_id} did not finish within the horizon")
    a = log.allocations()
    frames = a["frame"][a["burst"] == burst.burst_id]
    return int(frames.max()) + 1 - burst.arrival_ms


def best_cc_mask(snr: np.ndarray, rule: str = "snr_tie", tol_db: float = 1e-9) -> np.ndarray:
    """(users, ccs) bool: which carriers count as a user's best.

    ``snr_tie`` accepts every carrier whose SNR equals the user's maximum;
    ``rank_head`` only the first of the ranking (lowest id among ties).
    """
    if snr.size == 0:
        return np.zeros(snr.shape, dtype=bool)
    if rule == "snr_tie":
        return snr >= snr.max(axis=1, keepdims=True) - tol_db
    if rule == "rank_head":
        mask = np.zeros(snr.shape, dtype=bool)
        mask[np.arange(snr.shape[0]), np.argmax(snr, axis=1)] = True
        return mask
    raise ValueError(f"unknown best-carrier rule {rule!r}")


def best_cc_fraction(log: EventLog, user_of_burst: np.ndarray, snr: np.ndarray, rule: str = "snr_tie") -> float | None:
    """Fraction of PRB-frames granted on one of the user's best carriers; None without allocations."""
    a = log.allocations()
    if a["frame"].size == 0:
        return None
    best = best_cc_mask(snr, rule)
    users = user_of_burst[a["burst"]]
    return float(np.count_nonzero(best[users, a["cc"]])) / a["frame"].size


def gbr_fulfillment(
    bursts: list[Burst], served_bits: np.ndarray, metric_qcis, bit_weighted: bool = False
) -> float | None:
    """Mean of min(1, served/size) over bursts of ``metric_qcis``; None if there are none."""
    scored = [b for b in bursts if b.qci in metric_qcis]
    if not scored:
        return None
    size = np.array([b.size_bits for b in scored], dtype=float)
    got = np.minimum(served_bits[[b.burst_id for b in scored]], size)
    if bit_weighted:
        return float(got.sum() / size.sum())
    return float(np.mean(got / size))


def qoe_coefficient(beta_qos: float, beta_opt_cc: float) -> float:
    for name, v in (("beta_qos", beta_qos), ("beta_opt_cc", beta_opt_cc)):
        if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0) or math.isnan(v):
            raise ValueError(f"{name} must be a fraction in [0, 1], got {v!r}")
    return beta_qos * beta_opt_cc


@dataclass
class MetricsReport:
    scheduler: str
    seed: int
    sojourn_ms_by_qci: dict[int, float | None]
    sojourn_first_to_last_ms_by_qci: dict[int, float | None]
    n_completed_by_qci: dict[int, int]
    beta_opt_cc: float | None
    beta_qos: float | None
    alpha_sch_qoe: float | None
    counts: dict[str, int] = field(default_factory=dict)
    served_bits_total: int = 0
    digest: str = ""

    @property
    def no_data(self) -> bool:
        return self.beta_opt_cc is None and self.beta_qos is None

    def mean_sojourn_ms(self, qcis) -> float | None:
        """Completion-weighted mean sojourn over a set of QCIs."""
        num = den = 0.0
        for q in qcis:
            n = self.n_completed_by_qci.get(q, 0)
            if n:
                num += self.sojourn_ms_by_qci[q] * n
                den += n
        return num / den if den else None

    def to_json(self) -> str:
        d = asdict(self)
        d["no_data"] = self.no_data
        return json.dumps(d, sort_keys=True)


def evaluate(result) -> MetricsReport:
    """Full report for an engine ``RunResult``."""
    cfg, ctx, log = result.config, result.ctx, result.log
    n = len(ctx.bursts)
    served, first, last = _served_and_span(log, n)
    outcome = burst_outcomes(log)
    user_of = np.array([b.user_id if b is not None else -1 for b in ctx.bursts], dtype=np.int64)

    soj: dict[int, list[float]] = {q: [] for q in range(1, 10)}
    span: dict[int, list[float]] = {q: [] for q in range(1, 10)}
    horizon = cfg.horizon_ms
    for b in result.bursts:
        kind = outcome.get(b.burst_id)
        if b.qci in ctx.gbr_qcis and b.arrival_ms + b.duration_ms > horizon:
            continue  # window runs past the horizon: censored for every policy alike
        if kind is EventKind.DONE:
            soj[b.qci].append(last[b.burst_id] + 1 - b.arrival_ms)
            span[b.qci].append(last[b.burst_id] + 1 - first[b.burst_id])
        elif kind is EventKind.EXP:
            soj[b.qci].append(b.duration_ms)
            if last[b.burst_id] >= 0:
                span[b.qci].append(last[b.burst_id] + 1 - first[b.burst_id])

    beta_opt = best_cc_fraction(log, user_of, ctx.snr, cfg.best_cc_rule)
    beta_qos = gbr_fulfillment(result.bursts, served, cfg.gbr_metric_qcis, cfg.beta_qos_bit_weighted)
    alpha = None if beta_opt is None or beta_qos is None else qoe_coefficient(beta_qos, beta_opt)
    kinds = list(outcome.values())
    counts = {
        "arrived": len(result.bursts),
        "completed": kinds.count(EventKind.DONE),
        "expired": kinds.count(EventKind.EXP),
        "truncated": kinds.count(EventKind.TRUNC),
        "preempted": log.count(EventKind.PRE),
        "migrated": log.count(EventKind.MIG),
        "rejected": log.count(EventKind.REJ),
        "allocations": log.count(EventKind.ALLOC),
    }
    return MetricsReport(
        scheduler=cfg.scheduler.value,
        seed=cfg.seed,
        sojourn_ms_by_qci={q: (float(np.mean(v)) if v else None) for q, v in soj.items()},
        sojourn_first_to_last_ms_by_qci={q: (float(np.mean(v)) if v else None) for q, v in span.items()},
        n_completed_by_qci={q: len(v) for q, v in soj.items()},
        beta_opt_cc=beta_opt,
        beta_qos=beta_qos,
        alpha_sch_qoe=alpha,
        counts=counts,
        served_bits_total=int(served.sum()),
        digest=log.digest(),
    )
