import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from casim.qos import (
    DEFAULT_GBR_METRIC_QCIS,
    DEFAULT_QCI_TABLE,
    QciProfile,
    QciTable,
    ResourceType,
    is_preemptable_by,
    lookup_qci,
    precedes,
)

qcis = st.integers(min_value=1, max_value=9)


def test_lookup_examples():
    p1, p7, p9 = (lookup_qci(DEFAULT_QCI_TABLE, q) for q in (1, 7, 9))
    assert (p1.resource_type, p1.priority, p1.pdb_ms) == (ResourceType.GBR, 2, 100)
    assert (p7.resource_type, p7.priority, p7.pdb_ms) == (ResourceType.NON_GBR, 7, 100)
    assert (p9.resource_type, p9.priority, p9.pdb_ms) == (ResourceType.NON_GBR, 9, 300)


@pytest.mark.parametrize("bad", [0, 10, -1, 2.0, True, "3"])
def test_lookup_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        lookup_qci(DEFAULT_QCI_TABLE, bad)


def test_default_table_invariants():
    profiles = DEFAULT_QCI_TABLE.profiles
    assert [p.qci for p in profiles] == list(range(1, 10))
    assert sorted(p.priority for p in profiles) == list(range(1, 10))
    assert all(p.pdb_ms > 0 for p in profiles)
    assert DEFAULT_QCI_TABLE.gbr_qcis() == frozenset(range(1, 7))
    assert DEFAULT_GBR_METRIC_QCIS == frozenset({2, 3, 4, 5})


@given(qcis)
def test_lookup_round_trip(q):
    assert lookup_qci(DEFAULT_QCI_TABLE, q).qci == q


def test_precedes_examples():
    t = DEFAULT_QCI_TABLE
    assert precedes(t[1], t[7])  # priority 2 before priority 7
    assert not precedes(t[4], t[4])
    assert not precedes(t[9], t[5])


def test_precedes_is_strict_total_order():
    ps = DEFAULT_QCI_TABLE.profiles
    for a, b in itertools.permutations(ps, 2):
        assert precedes(a, b) != precedes(b, a)
    for a, b, c in itertools.permutations(ps, 3):
        if precedes(a, b) and precedes(b, c):
            assert precedes(a, c)
    assert DEFAULT_QCI_TABLE.precedence_order() == [5, 1, 3, 2, 4, 6, 7, 8, 9]


def test_preemption_examples():
    t = DEFAULT_QCI_TABLE
    assert is_preemptable_by(t[7], t[2])
    assert not any(is_preemptable_by(t[1], t[q]) for q in range(1, 10))
    assert not is_preemptable_by(t[8], t[9])


@given(qcis, qcis)
def test_preemption_antisymmetric(a, b):
    t = DEFAULT_QCI_TABLE
    assert not (is_preemptable_by(t[a], t[b]) and is_preemptable_by(t[b], t[a]))


@given(qcis, qcis)
def test_gbr_holders_never_preempted(a, b):
    t = DEFAULT_QCI_TABLE
    if t[a].is_gbr:
        assert not is_preemptable_by(t[a], t[b])


def test_table_must_cover_all_qcis():
    with pytest.raises(ValueError):
        QciTable(DEFAULT_QCI_TABLE.profiles[:8])
    with pytest.raises(ValueError):
        QciTable([*DEFAULT_QCI_TABLE.profiles[:8], DEFAULT_QCI_TABLE.profiles[0]])


def test_profile_validation():
    with pytest.raises(ValueError):
        QciProfile(1, ResourceType.GBR, 2, 0.0)
    with pytest.raises(ValueError):
        QciProfile(1, ResourceType.GBR, 10, 100.0)


def test_from_rows_round_trip():
    rows = [
        {"qci": p.qci, "resource_type": p.resource_type.value, "priority": p.priority, "pdb_ms": p.pdb_ms}
        for p in DEFAULT_QCI_TABLE
    ]
    assert QciTable.from_rows(rows) == DEFAULT_QCI_TABLE
    rows[0] = {**rows[0], "colour": "red"}
    with pytest.raises(ValueError, match="colour"):
        QciTable.from_rows(rows)
