"""User population, burst workload generation and the per-QCI FIFO queues."""

from __future__ import annotations

import enum
import io
import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .radio import MIN_SEPARATION_M


class UserType(str, enum.Enum):
    LTE_A = "LteA"
    LEGACY_LTE = "LegacyLte"


class BurstState(str, enum.Enum):
    QUEUED = "Queued"
    ACTIVE = "Active"
    DONE = "Done"
    PREEMPTED = "Preempted-Requeued"


@dataclass(frozen=True)
class User:
    user_id: int
    distance_m: float
    user_type: UserType = UserType.LTE_A


@dataclass(slots=True)
class Burst:
    burst_id: int
    user_id: int
    qci: int
    arrival_ms: int
    required_rate_bps: int
    duration_ms: int
    size_bits: int = -1
    served_bits: int = 0
    state: BurstState = BurstState.QUEUED

    def __post_init__(self) -> None:
        if self.size_bits < 0:
            self.size_bits = burst_size_bits(self.required_rate_bps, self.duration_ms)

    @property
    def remaining_bits(self) -> int:
        return self.size_bits - self.served_bits


def burst_size_bits(rate_bps: int, duration_ms: int) -> int:
    # ceil(rate * duration / 1000) in exact integer arithmetic
    return -(-int(rate_bps) * int(duration_ms) // 1000)


@dataclass(frozen=True)
class TrafficConfig:
    n_users: int = 10
    cell_radius_m: float = 1000.0
    requests_per_user_mean: float = 25.0
    requests_max_factor: float = 4.0
    rate_distribution: str = "exponential"  # or "fixed"
    rate_mean_bps: float = 35e6
    rate_min_bps: float = 1e6
    rate_max_bps: float = 140e6
    duration_distribution: str = "uniform"  # or "fixed"
    duration_min_ms: int = 100
    duration_max_ms: int = 2500
    qci_weights: tuple[float, ...] = (1.0,) * 9
    legacy_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.n_users < 0:
            raise ValueError("n_users must be >= 0")
        if not self.cell_radius_m > MIN_SEPARATION_M:
            raise ValueError(f"cell_radius_m must exceed {MIN_SEPARATION_M} m")
        if not self.requests_per_user_mean > 0:
            raise ValueError("requests_per_user_mean must be positive")
        if self.requests_max_factor < 1:
            raise ValueError("requests_max_factor must be >= 1")
        if self.rate_distribution not in ("exponential", "fixed"):
            raise ValueError(f"unknown rate_distribution {self.rate_distribution!r}")
        if self.duration_distribution not in ("uniform", "fixed"):
            raise ValueError(f"unknown duration_distribution {self.duration_distribution!r}")
        if not 0 < self.rate_min_bps <= self.rate_mean_bps <= self.rate_max_bps:
            raise ValueError("need 0 < rate_min_bps <= rate_mean_bps <= rate_max_bps")
        if not 0 <= self.duration_min_ms < self.duration_max_ms <= 2500:
            raise ValueError("need 0 <= duration_min_ms < duration_max_ms <= 2500")
        if len(self.qci_weights) != 9 or min(self.qci_weights) < 0 or sum(self.qci_weights) <= 0:
            raise ValueError("qci_weights must be 9 non-negative weights with positive sum")
        if not 0 <= self.legacy_fraction <= 1:
            raise ValueError("legacy_fraction must be in [0, 1]")


STREAMS = ("population", "traffic", "scheduler", "shadowing")


def spawn_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators derived from one seed.

    Child order is fixed, so adding a stream at the end never perturbs the others.
    """
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def generate_population(
    n_users: int, cell_radius_m: float, rng_seed: int | np.random.Generator, legacy_fraction: float = 0.0
) -> list[User]:
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    if not cell_radius_m > MIN_SEPARATION_M:
        raise ValueError(f"cell radius must exceed {MIN_SEPARATION_M} m, got {cell_radius_m}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    # area-uniform over the disc: radial CDF ~ d^2
    d = cell_radius_m * np.sqrt(rng.random(n_users))
    d = np.maximum(d, MIN_SEPARATION_M)
    legacy = rng.random(n_users) < legacy_fraction
    return [
        User(i, float(d[i]), UserType.LEGACY_LTE if legacy[i] else UserType.LTE_A)
        for i in range(n_users)
    ]


@lru_cache(maxsize=64)
def _poisson_rate_for_truncated_mean(mean: float, lo: int, hi: int) -> float:
    def cond_mean(lam: float) -> float:
        k = np.arange(lo, hi + 1)
        p = stats.poisson.pmf(k, lam)
        return float((k * p).sum() / p.sum())

    if cond_mean(1e-9) >= mean:
        return 1e-9
    return optimize.brentq(lambda lam: cond_mean(lam) - mean, 1e-9, hi + 10.0, xtol=1e-12)


@lru_cache(maxsize=64)
def _exponential_scale_for_truncated_mean(mean: float, lo: float, hi: float) -> float:
    span = hi - lo

    def cond_mean(scale: float) -> float:
        e = math.exp(-span / scale)
        return lo + scale - span * e / (1.0 - e)

    # the conditional mean tends to (lo + hi) / 2 as the scale grows
    return optimize.brentq(lambda s: cond_mean(s) - mean, 1e-6 * span, 1e6 * span, xtol=1e-9)


def sample_request_count(cfg: TrafficConfig, rng: np.random.Generator, size: int | None = None):
    """Poisson count conditioned on [1, factor * mean], calibrated to keep the mean."""
    lo, hi = 1, max(1, int(math.floor(cfg.requests_max_factor * cfg.requests_per_user_mean)))
    lam = _poisson_rate_for_truncated_mean(float(cfg.requests_per_user_mean), lo, hi)
    c_lo, c_hi = stats.poisson.cdf(lo - 1, lam), stats.poisson.cdf(hi, lam)
    u = rng.random(size)
    n = stats.poisson.ppf(c_lo + u * (c_hi - c_lo), lam)
    return np.clip(n, lo, hi).astype(np.int64)


def sample_rates_bps(cfg: TrafficConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    if cfg.rate_distribution == "fixed":
        return np.full(size, int(round(cfg.rate_mean_bps)), dtype=np.int64)
    lo, hi = cfg.rate_min_bps, cfg.rate_max_bps
    scale = _exponential_scale_for_truncated_mean(float(cfg.rate_mean_bps), float(lo), float(hi))
    # inverse CDF of the exponential conditioned on [lo, hi]
    mass = -math.expm1(-(hi - lo) / scale)
    r = lo - scale * np.log1p(-rng.random(size) * mass)
    return np.rint(np.clip(r, lo, hi)).astype(np.int64)


def sample_durations_ms(cfg: TrafficConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    if cfg.duration_distribution == "fixed":
        return np.full(size, cfg.duration_max_ms, dtype=np.int64)
    return rng.integers(cfg.duration_min_ms + 1, cfg.duration_max_ms + 1, size=size)


def generate_requests(
    user: User, cfg: TrafficConfig, rng: np.random.Generator, horizon_ms: int
) -> list[Burst]:
    """Bursts for one user; ``burst_id`` is left at -1 until the workload is assembled."""
    if horizon_ms <= 0:
        raise ValueError("simulation horizon must be positive")
    n = int(sample_request_count(cfg, rng))
    arrivals = rng.integers(0, horizon_ms, size=n)
    weights = np.asarray(cfg.qci_weights, dtype=float)
    qcis = rng.choice(np.arange(1, 10), size=n, p=weights / weights.sum())
    rates = sample_rates_bps(cfg, rng, n)
    durations = sample_durations_ms(cfg, rng, n)
    return [
        Burst(-1, user.user_id, int(q), int(a), int(r), int(d))
        for a, q, r, d in zip(arrivals, qcis, rates, durations)
    ]


@dataclass
class Workload:
    users: list[User]
    bursts: list[Burst]

    def fresh_bursts(self) -> list[Burst]:
        """Unserved copies, so several scheduler runs can share one workload."""
        return [
            Burst(b.burst_id, b.user_id, b.qci, b.arrival_ms, b.required_rate_bps, b.duration_ms, b.size_bits)
            for b in self.bursts
        ]

    @property
    def total_bits(self) -> int:
        return sum(b.size_bits for b in self.bursts)

    def to_replay_text(self) -> str:
        out = io.StringIO()
        out.write("# casim workload v1\n")
        out.write("# U,user_id,distance_m,user_type\n")
        out.write("# B,burst_id,user_id,qci,arrival_ms,rate_bps,duration_ms\n")
        for u in self.users:
            out.write(f"U,{u.user_id},{u.distance_m!r},{u.user_type.value}\n")
        for b in self.bursts:
            out.write(
                f"B,{b.burst_id},{b.user_id},{b.qci},{b.arrival_ms},{b.required_rate_bps},{b.duration_ms}\n"
            )
        return out.getvalue()

    def write_replay(self, path: str | Path) -> None:
        Path(path).write_text(self.to_replay_text(), encoding="utf-8")

    @classmethod
    def from_replay_text(cls, text: str) -> "Workload":
        users, bursts = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                if parts[0] == "U" and len(parts) == 4:
                    users.append(User(int(parts[1]), float(parts[2]), UserType(parts[3])))
                elif parts[0] == "B" and len(parts) == 7:
                    bursts.append(Burst(*(int(p) for p in parts[1:])))
                else:
                    raise ValueError("unrecognised record")
            except ValueError as exc:
                raise ValueError(f"replay line {lineno}: {exc}: {line!r}") from None
        if [u.user_id for u in users] != list(range(len(users))):
            raise ValueError("replay users must be numbered 0..n-1 in order")
        if [b.burst_id for b in bursts] != list(range(len(bursts))):
            raise ValueError("replay bursts must be numbered 0..n-1 in order")
        return cls(users, bursts)

    @classmethod
    def read_replay(cls, path: str | Path) -> "Workload":
        return cls.from_replay_text(Path(path).read_text(encoding="utf-8"))


def generate_workload(cfg: TrafficConfig, horizon_ms: int, seed: int) -> Workload:
    streams = spawn_streams(seed)
    if cfg.n_users == 0:
        return Workload([], [])
    users = generate_population(cfg.n_users, cfg.cell_radius_m, streams["population"], cfg.legacy_fraction)
    pending = []
    for user in users:
        for seq, b in enumerate(generate_requests(user, cfg, streams["traffic"], horizon_ms)):
            pending.append((b.arrival_ms, b.user_id, seq, b))
    pending.sort(key=lambda t: t[:3])
    bursts = []
    for i, (*_, b) in enumerate(pending):
        b.burst_id = i
        bursts.append(b)
    return Workload(users, bursts)


class QciQueues:
    """Nine FIFO queues of burst ids, one per QCI."""

    def __init__(self) -> None:
        self._q: dict[int, deque[int]] = {qci: deque() for qci in range(1, 10)}
        self._members: set[int] = set()

    def enqueue(self, burst: Burst) -> "QciQueues":
        if burst.burst_id in self._members:
            raise RuntimeError(f"burst {burst.burst_id} is already queued")
        self._q[burst.qci].append(burst.burst_id)
        self._members.add(burst.burst_id)
        return self

    def requeue_front(self, burst: Burst) -> "QciQueues":
        """Preempted bursts resume ahead of everything else of their QCI."""
        if burst.burst_id in self._members:
            raise RuntimeError(f"burst {burst.burst_id} is already queued")
        self._q[burst.qci].appendleft(burst.burst_id)
        self._members.add(burst.burst_id)
        return self

    def head(self, qci: int) -> int | None:
        q = self._q[qci]
        return q[0] if q else None

    def popleft(self, qci: int) -> int:
        bid = self._q[qci].popleft()
        self._members.discard(bid)
        return bid

    def remove(self, burst: Burst) -> None:
        self._q[burst.qci].remove(burst.burst_id)
        self._members.discard(burst.burst_id)

    def queue(self, qci: int) -> Sequence[int]:
        return self._q[qci]

    def __contains__(self, burst_id: int) -> bool:
        return burst_id in self._members

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self):
        for qci in range(1, 10):
            yield from self._q[qci]


def enqueue(queues: QciQueues, burst: Burst) -> QciQueues:
    if burst.state is not BurstState.QUEUED:
        raise ValueError(f"only queued bursts can be enqueued, burst {burst.burst_id} is {burst.state.value}")
    return queues.enqueue(burst)
