import pytest

from casim.errors import (DuplicateObject, NodeAlreadyDown, NodeAlreadyUp,
                          NodeDown, UnknownObject)
from casim.store import (LogRecord, ObjectId, ObjectStore, decode_value,
                         encode_value)


def make_store():
    st = ObjectStore(["n1", "n2"])
    st.create_object(ObjectId("x", "n1"), b"10")
    st.create_object(ObjectId("y", "n2"), b"5")
    return st


def test_value_codec_roundtrip():
    for v in (0, 7, -13, 12345):
        assert decode_value(encode_value(v)) == v


def test_create_and_read():
    st = make_store()
    assert st.read_volatile("x") == b"10"
    assert st.committed("x") == (b"10", 0)
    with pytest.raises(DuplicateObject):
        st.create_object(ObjectId("x", "n2"), b"0")
    with pytest.raises(UnknownObject):
        st.read_volatile("zzz")


def test_volatile_write_does_not_touch_stable():
    st = make_store()
    st.write_volatile("x", b"99")
    assert st.read_volatile("x") == b"99"
    assert st.committed("x") == (b"10", 0)


def test_apply_commit_is_idempotent_by_version():
    st = make_store()
    st.apply_commit("x", b"20", 1)
    assert st.committed("x") == (b"20", 1)
    st.apply_commit("x", b"20", 1)  # replayed apply changes nothing
    assert st.committed("x") == (b"20", 1)
    st.apply_commit("x", b"5", 0)   # stale version loses
    assert st.committed("x") == (b"20", 1)


def test_crash_wipes_volatile_keeps_stable():
    st = make_store()
    st.write_volatile("x", b"99")
    st.crash_node("n1")
    assert not st.node_up("n1")
    assert st.nodes["n1"].volatile == {}
    assert st.nodes["n1"].stable["x"] == (b"10", 0)
    with pytest.raises(NodeDown):
        st.read_volatile("x")
    with pytest.raises(NodeAlreadyDown):
        st.crash_node("n1")


def test_recover_reloads_volatile_from_stable():
    st = make_store()
    st.apply_commit("x", b"33", 1)
    st.crash_node("n1")
    st.recover_node("n1")
    assert st.read_volatile("x") == b"33"
    with pytest.raises(NodeAlreadyUp):
        st.recover_node("n1")


def test_log_survives_crash():
    st = make_store()
    st.append_log("n1", LogRecord("prepare", 7, coordinator="n2",
                                  redo=(("x", b"1", 1),)))
    st.crash_node("n1")
    st.recover_node("n1")
    rec = st.find_log("n1", "prepare", 7)
    assert rec is not None and rec.coordinator == "n2"
    assert st.find_log("n1", "commit", 7) is None


def test_snapshot_restore_skips_superseded_entries():
    st = make_store()
    snap = st.take_snapshot(["x", "y"], "line0")
    st.apply_commit("x", b"50", 1)   # another action commits x meanwhile
    st.write_volatile("y", b"77")
    st.restore_snapshot(snap)
    assert st.read_volatile("x") == b"50"  # not clobbered by stale entry
    assert st.read_volatile("y") == b"5"


def test_snapshot_restore_skip_down():
    st = make_store()
    snap = st.take_snapshot(["x", "y"], "line0")
    st.write_volatile("y", b"0")
    st.crash_node("n2")
    with pytest.raises(NodeDown):
        st.restore_snapshot(snap)
    st.restore_snapshot(snap, skip_down=True)


def test_dumps_sorted_and_exclude_down_volatile():
    st = make_store()
    st.crash_node("n2")
    stable = st.dump_stable()
    assert stable == sorted(stable)
    assert any(ln.startswith("n2\t") for ln in stable)
    assert all(not ln.startswith("n2\t") for ln in st.dump_volatile())
