"""QoS class identifiers (QCI) and the priority semantics shared by all schedulers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence


class ResourceType(str, enum.Enum):
    GBR = "GBR"
    NON_GBR = "NonGBR"


@dataclass(frozen=True)
class QciProfile:
    qci: int
    resource_type: ResourceType
    priority: int
    pdb_ms: float

    def __post_init__(self) -> None:
        if not 1 <= self.qci <= 9:
            raise ValueError(f"qci must be in 1..9, got {self.qci}")
        if not 1 <= self.priority <= 9:
            raise ValueError(f"priority must be in 1..9, got {self.priority}")
        if not self.pdb_ms > 0:
            raise ValueError(f"pdb_ms must be positive, got {self.pdb_ms}")

    @property
    def is_gbr(self) -> bool:
        return self.resource_type is ResourceType.GBR

    @property
    def precedence_key(self) -> tuple[int, int]:
        # lower is served first; qci breaks ties in custom tables
        return (self.priority, self.qci)


class QciTable:
    """Immutable, qci-indexed collection of the nine QCI profiles."""

    __slots__ = ("_profiles",)

    def __init__(self, profiles: Iterable[QciProfile]):
        profiles = tuple(sorted(profiles, key=lambda p: p.qci))
        qcis = [p.qci for p in profiles]
        if qcis != list(range(1, 10)):
            raise ValueError(f"QCI table must cover 1..9 exactly once, got {qcis}")
        self._profiles = profiles

    def __getitem__(self, qci: int) -> QciProfile:
        return lookup_qci(self, qci)

    def __iter__(self):
        return iter(self._profiles)

    def __len__(self) -> int:
        return len(self._profiles)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QciTable) and self._profiles == other._profiles

    def __hash__(self) -> int:
        return hash(self._profiles)

    def __repr__(self) -> str:
        return f"QciTable({list(self._profiles)!r})"

    @property
    def profiles(self) -> tuple[QciProfile, ...]:
        return self._profiles

    def gbr_qcis(self) -> frozenset[int]:
        return frozenset(p.qci for p in self._profiles if p.is_gbr)

    def precedence_order(self) -> list[int]:
        """QCIs sorted from highest to lowest precedence."""
        return [p.qci for p in sorted(self._profiles, key=lambda p: p.precedence_key)]

    @classmethod
    def from_rows(cls, rows: Sequence[Mapping[str, object]]) -> "QciTable":
        """Build from config rows with keys qci, resource_type, priority, pdb_ms."""
        profiles = []
        for row in rows:
            unknown = set(row) - {"qci", "resource_type", "priority", "pdb_ms"}
            if unknown:
                raise ValueError(f"unknown QCI row keys: {sorted(unknown)}")
            profiles.append(
                QciProfile(
                    qci=int(row["qci"]),
                    resource_type=ResourceType(str(row["resource_type"])),
                    priority=int(row["priority"]),
                    pdb_ms=float(row["pdb_ms"]),
                )
            )
        return cls(profiles)


_G, _N = ResourceType.GBR, ResourceType.NON_GBR

# QCI 9 has no printed delay budget; 300 ms follows the other buffered-streaming rows.
DEFAULT_QCI_TABLE = QciTable(
    [
        QciProfile(1, _G, 2, 100.0),
        QciProfile(2, _G, 4, 150.0),
        QciProfile(3, _G, 3, 50.0),
        QciProfile(4, _G, 5, 300.0),
        QciProfile(5, _G, 1, 100.0),
        QciProfile(6, _G, 6, 300.0),
        QciProfile(7, _N, 7, 100.0),
        QciProfile(8, _N, 8, 300.0),
        QciProfile(9, _N, 9, 300.0),
    ]
)

# GBR fulfilment is scored over these QCIs, independently of the table's resource types.
DEFAULT_GBR_METRIC_QCIS = frozenset({2, 3, 4, 5})


def lookup_qci(table: QciTable, qci: int) -> QciProfile:
    if not isinstance(qci, (int,)) or isinstance(qci, bool) or not 1 <= qci <= 9:
        raise ValueError(f"qci out of range 1..9: {qci!r}")
    return table.profiles[qci - 1]


def precedes(a: QciProfile, b: QciProfile) -> bool:
    """True when ``a`` is served strictly before ``b``."""
    return a.precedence_key < b.precedence_key


def is_preemptable_by(holder: QciProfile, claimant: QciProfile) -> bool:
    """Only non-GBR holders with a strictly worse priority can lose their PRBs."""
    return holder.resource_type is ResourceType.NON_GBR and claimant.priority < holder.priority
