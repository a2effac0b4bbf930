"""Append-only, frame-ordered event log with a canonical text form and digest.

Events are held column-wise (kind, frame and four integer fields). The
canonical serialisation is one line per event: the kind name, the frame and
the kind's fields, space separated. The digest is 64-bit FNV-1a over those
bytes; the hot loop is compiled with numba and cross-checked against a plain
Python renderer in the tests.
"""

from __future__ import annotations

import enum
from pathlib import Path
from typing import Iterator

import numba
import numpy as np

from .schedulers.base import AllocationRecord, EventSink


class EventKind(enum.IntEnum):
    ARR = 0  # burst
    ALLOC = 1  # cc, prb, burst, bits
    PRE = 2  # victim, claimant
    MIG = 3  # burst, from_cc, to_cc
    ADM = 4  # burst
    REJ = 5  # burst
    DONE = 6  # burst
    EXP = 7  # burst, shortfall_bits
    TRUNC = 8  # burst, remaining_bits


N_FIELDS = np.array([1, 4, 2, 3, 1, 1, 1, 2, 2], dtype=np.int64)
_NAMES = [k.name for k in EventKind]
_NAME_BYTES = np.zeros((len(_NAMES), 8), dtype=np.uint8)
_NAME_LEN = np.array([len(n) for n in _NAMES], dtype=np.int64)
for _i, _n in enumerate(_NAMES):
    _NAME_BYTES[_i, : len(_n)] = np.frombuffer(_n.encode("ascii"), dtype=np.uint8)

FNV_OFFSET = np.uint64(0xCBF29CE484222325)
FNV_PRIME = np.uint64(0x100000001B3)


def fnv1a64(data: bytes) -> int:
    """Reference 64-bit FNV-1a."""
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@numba.njit(cache=True)
def _mix(h, byte):
    return (h ^ np.uint64(byte)) * np.uint64(0x100000001B3)


@numba.njit(cache=True)
def _mix_int(h, v, buf):
    if v < 0:
        h = _mix(h, 45)  # '-'
        v = -v
    n = 0
    if v == 0:
        buf[0] = 48
        n = 1
    while v > 0:
        buf[n] = 48 + v % 10
        v //= 10
        n += 1
    for i in range(n - 1, -1, -1):
        h = _mix(h, buf[i])
    return h


@numba.njit(cache=True)
def _digest_columns(kind, frame, fields, n_fields, name_bytes, name_len):
    h = np.uint64(0xCBF29CE484222325)
    buf = np.zeros(24, dtype=np.int64)
    for i in range(kind.shape[0]):
        k = kind[i]
        for j in range(name_len[k]):
            h = _mix(h, name_bytes[k, j])
        h = _mix(h, 32)
        h = _mix_int(h, frame[i], buf)
        for j in range(n_fields[k]):
            h = _mix(h, 32)
            h = _mix_int(h, fields[i, j], buf)
        h = _mix(h, 10)
    return h


class EventLog(EventSink):
    """Columnar event store; also the sink schedulers report into."""

    def __init__(self) -> None:
        self._kind: list[int] = []
        self._frame: list[int] = []
        self._f: list[list[int]] = [[], [], [], []]
        self._frozen: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    # -- appending -------------------------------------------------------

    def add(self, kind: EventKind, frame: int, *fields: int) -> None:
        if len(fields) != N_FIELDS[kind]:
            raise ValueError(f"{kind.name} takes {N_FIELDS[kind]} fields, got {len(fields)}")
        self._frozen = None
        self._kind.append(int(kind))
        self._frame.append(frame)
        for j in range(4):
            self._f[j].append(fields[j] if j < len(fields) else 0)

    def add_allocations(self, frame: int, cc_id: int, prbs: list[int], burst_id: int, bits: list[int]) -> None:
        k = len(prbs)
        self._frozen = None
        self._kind.extend([int(EventKind.ALLOC)] * k)
        self._frame.extend([frame] * k)
        self._f[0].extend([cc_id] * k)
        self._f[1].extend(prbs)
        self._f[2].extend([burst_id] * k)
        self._f[3].extend(bits)

    def preempted(self, frame, victim, claimant):
        self.add(EventKind.PRE, frame, victim, claimant)

    def migrated(self, frame, burst_id, from_cc, to_cc):
        self.add(EventKind.MIG, frame, burst_id, from_cc, to_cc)

    def admitted(self, frame, burst_id):
        self.add(EventKind.ADM, frame, burst_id)

    def rejected(self, frame, burst_id):
        self.add(EventKind.REJ, frame, burst_id)

    # -- columnar access -------------------------------------------------

    def columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(kind, frame, fields[n, 4]) as int64 arrays."""
        if self._frozen is None:
            fields = np.array(self._f, dtype=np.int64).T.reshape(len(self._kind), 4)
            self._frozen = (
                np.array(self._kind, dtype=np.int64),
                np.array(self._frame, dtype=np.int64),
                np.ascontiguousarray(fields),
            )
        return self._frozen

    def __len__(self) -> int:
        return len(self._kind)

    def of_kind(self, kind: EventKind) -> tuple[np.ndarray, np.ndarray]:
        """Frames and the used field columns of every event of ``kind``."""
        k, f, x = self.columns()
        m = k == int(kind)
        return f[m], x[m, : N_FIELDS[kind]]

    def allocations(self) -> dict[str, np.ndarray]:
        frame, x = self.of_kind(EventKind.ALLOC)
        return {"frame": frame, "cc": x[:, 0], "prb": x[:, 1], "burst": x[:, 2], "bits": x[:, 3]}

    def allocation_records(self) -> Iterator[AllocationRecord]:
        a = self.allocations()
        for row in zip(a["frame"], a["cc"], a["prb"], a["burst"], a["bits"]):
            yield AllocationRecord(*(int(v) for v in row))

    def count(self, kind: EventKind) -> int:
        return int(np.count_nonzero(self.columns()[0] == int(kind)))

    # -- serialisation ---------------------------------------------------

    def lines(self) -> Iterator[str]:
        for k, f, *x in zip(self._kind, self._frame, *self._f):
            yield " ".join([_NAMES[k], str(f), *map(str, x[: N_FIELDS[k]])])

    def to_text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def digest(self) -> str:
        """FNV-1a 64 of the canonical text, as 16 hex digits."""
        kind, frame, fields = self.columns()
        h = _digest_columns(kind, frame, fields, N_FIELDS, _NAME_BYTES, _NAME_LEN)
        return f"{int(h):016x}"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="ascii")
