import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from casim.eventlog import N_FIELDS, EventKind, EventLog, fnv1a64


@pytest.mark.parametrize(
    "data,expected",
    [(b"", 0xCBF29CE484222325), (b"a", 0xAF63DC4C8601EC8C), (b"foobar", 0x85944171F73967E8)],
)
def test_fnv_reference_vectors(data, expected):
    assert fnv1a64(data) == expected


def test_canonical_text():
    log = EventLog()
    log.add(EventKind.ARR, 0, 3)
    log.add_allocations(0, 1, [4, 5], 3, [1080, 200])
    log.add(EventKind.EXP, 2, 3, 77)
    log.migrated(1, 3, 2, 0)
    assert log.to_text() == "ARR 0 3\nALLOC 0 1 4 3 1080\nALLOC 0 1 5 3 200\nEXP 2 3 77\nMIG 1 3 2 0\n"


def test_field_count_checked():
    with pytest.raises(ValueError):
        EventLog().add(EventKind.PRE, 0, 1)


events = st.lists(
    st.sampled_from(list(EventKind)).flatmap(
        lambda k: st.tuples(
            st.just(k),
            st.integers(0, 10**7),
            st.lists(st.integers(-(10**12), 10**12), min_size=int(N_FIELDS[k]), max_size=int(N_FIELDS[k])),
        )
    ),
    max_size=40,
)


@given(events)
def test_compiled_digest_matches_reference(evs):
    log = EventLog()
    for kind, frame, fields in evs:
        log.add(kind, frame, *fields)
    assert log.digest() == f"{fnv1a64(log.to_text().encode('ascii')):016x}"


def test_columnar_views():
    log = EventLog()
    log.add(EventKind.ARR, 0, 1)
    log.add_allocations(2, 0, [0, 1, 2], 1, [10, 10, 5])
    log.add(EventKind.DONE, 2, 1)
    a = log.allocations()
    assert a["prb"].tolist() == [0, 1, 2] and a["bits"].sum() == 25
    assert [r.prb_index for r in log.allocation_records()] == [0, 1, 2]
    assert log.count(EventKind.ALLOC) == 3 and len(log) == 5
    frames, x = log.of_kind(EventKind.DONE)
    assert frames.tolist() == [2] and x.tolist() == [[1]]
    log.add(EventKind.ARR, 3, 2)  # appending after reading refreshes the views
    assert log.count(EventKind.ARR) == 2


def test_write(tmp_path):
    log = EventLog()
    log.add(EventKind.REJ, 4, 9)
    log.write(tmp_path / "ev.log")
    assert (tmp_path / "ev.log").read_text() == "REJ 4 9\n"
    assert np.array_equal(log.columns()[0], [EventKind.REJ])
