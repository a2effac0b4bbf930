"""Component carriers, PRB grids and the distance/frequency link budget.

The channel is deterministic: a log-distance path loss with a free-space
intercept at 1 km, equal transmit power per PRB on every carrier, and a
truncated Shannon mapping from SNR to PRB throughput.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PRB_BANDWIDTH_HZ = 180_000.0
THERMAL_NOISE_DBM_PER_HZ = -174.0
MIN_SEPARATION_M = 35.0

# channel bandwidth (MHz) -> number of PRBs
PRB_TABLE: dict[float, int] = {1.4: 6, 3.0: 15, 5.0: 25, 10.0: 50, 15.0: 75, 20.0: 100}


class CcClass(str, enum.Enum):
    SHARED = "Shared"
    LTE_A_ONLY = "LteAOnly"


def prb_count_for_bandwidth(bw_mhz: float) -> int:
    for bw, n in PRB_TABLE.items():
        if math.isclose(bw, float(bw_mhz), abs_tol=1e-9):
            return n
    raise ValueError(
        f"unsupported channel bandwidth {bw_mhz} MHz; expected one of {sorted(PRB_TABLE)}"
    )


@dataclass(frozen=True)
class ComponentCarrier:
    cc_id: int
    center_freq_mhz: float
    bandwidth_mhz: float
    cc_class: CcClass = CcClass.SHARED

    def __post_init__(self) -> None:
        if not self.center_freq_mhz > 0:
            raise ValueError(f"center_freq_mhz must be positive, got {self.center_freq_mhz}")
        prb_count_for_bandwidth(self.bandwidth_mhz)

    @property
    def prb_count(self) -> int:
        return prb_count_for_bandwidth(self.bandwidth_mhz)


@dataclass(frozen=True)
class LinkBudget:
    tx_power_per_prb_dbm: float = 29.0
    noise_figure_db: float = 9.0
    pathloss_exponent: float = 3.5
    snr_min_db: float = 0.0
    spectral_efficiency_cap_bps_per_hz: float = 6.0
    shadowing_sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if self.pathloss_exponent < 2:
            raise ValueError("pathloss_exponent must be >= 2")
        if not self.spectral_efficiency_cap_bps_per_hz > 0:
            raise ValueError("spectral_efficiency_cap_bps_per_hz must be positive")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be >= 0")


def path_loss_db(distance_m: float, freq_mhz: float, lb: LinkBudget) -> float:
    if distance_m < MIN_SEPARATION_M:
        raise ValueError(
            f"distance {distance_m} m is below the {MIN_SEPARATION_M} m minimum separation"
        )
    if not freq_mhz > 0:
        raise ValueError(f"frequency must be positive, got {freq_mhz}")
    return (
        32.45
        + 20.0 * math.log10(freq_mhz)
        + 10.0 * lb.pathloss_exponent * math.log10(distance_m / 1000.0)
    )


def noise_power_dbm(lb: LinkBudget) -> float:
    """Thermal noise over one PRB plus receiver noise figure."""
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(PRB_BANDWIDTH_HZ) + lb.noise_figure_db


def snr_db(distance_m: float, cc: ComponentCarrier, lb: LinkBudget, shadowing_db: float = 0.0) -> float:
    return (
        lb.tx_power_per_prb_dbm
        - path_loss_db(distance_m, cc.center_freq_mhz, lb)
        - shadowing_db
        - noise_power_dbm(lb)
    )


def prb_rate_bps(snr_db_value: float, lb: LinkBudget) -> float:
    if snr_db_value == -math.inf:
        return 0.0
    snr_linear = 10.0 ** (snr_db_value / 10.0)
    return PRB_BANDWIDTH_HZ * min(math.log2(1.0 + snr_linear), lb.spectral_efficiency_cap_bps_per_hz)


def rank_ccs_for_user(
    distance_m: float,
    ccs: Sequence[ComponentCarrier],
    lb: LinkBudget,
    shadowing_db: Sequence[float] | None = None,
) -> list[int]:
    """cc_ids by descending SNR at this distance, ascending cc_id on ties."""
    if not ccs:
        raise ValueError("cannot rank an empty CC list")
    shadow = shadowing_db if shadowing_db is not None else [0.0] * len(ccs)
    snrs = [snr_db(distance_m, cc, lb, s) for cc, s in zip(ccs, shadow)]
    order = sorted(range(len(ccs)), key=lambda i: (-snrs[i], ccs[i].cc_id))
    return [ccs[i].cc_id for i in order]


def coverage_radius_m(cc: ComponentCarrier, lb: LinkBudget) -> float:
    """Largest distance with ``snr_db >= snr_min_db``; 0.0 if not even 35 m is covered."""
    max_pl = lb.tx_power_per_prb_dbm - noise_power_dbm(lb) - lb.snr_min_db
    exponent = (max_pl - 32.45 - 20.0 * math.log10(cc.center_freq_mhz)) / (10.0 * lb.pathloss_exponent)
    radius = 1000.0 * 10.0**exponent
    return radius if radius >= MIN_SEPARATION_M else 0.0


class PrbGrid:
    """Per-frame PRB occupancy of a set of carriers; -1 marks a free PRB."""

    FREE = -1

    def __init__(self, ccs: Sequence[ComponentCarrier]):
        self.ccs = list(ccs)
        self._occ = {cc.cc_id: np.full(cc.prb_count, self.FREE, dtype=np.int64) for cc in self.ccs}

    def clear(self) -> None:
        for arr in self._occ.values():
            arr.fill(self.FREE)

    def owner(self, cc_id: int, prb: int) -> int:
        return int(self._occ[cc_id][prb])

    def occupancy(self, cc_id: int) -> np.ndarray:
        return self._occ[cc_id].copy()

    def free_prbs(self, cc_id: int) -> list[int]:
        return np.flatnonzero(self._occ[cc_id] == self.FREE).tolist()

    def assign(self, cc_id: int, prbs: Sequence[int], burst_id: int) -> None:
        arr = self._occ[cc_id]
        idx = np.asarray(prbs, dtype=np.int64)
        if np.any(arr[idx] != self.FREE) or len(set(prbs)) != len(prbs):
            raise RuntimeError(f"PRB exclusivity violated on cc {cc_id}: {list(prbs)}")
        arr[idx] = burst_id
