import pytest

from casim import audit
from casim.errors import MalformedTrace
from casim.trace import Trace

from conftest import TRANSFER, run_text


def good_trace_report():
    res = run_text(TRANSFER)
    return audit.audit_trace(res.trace_text(), all_nodes=["alpha", "beta"])


def test_clean_run_passes_every_audit():
    report = good_trace_report()
    assert report["ok"]
    for name, verdict in report.items():
        if name != "ok":
            assert verdict[0], (name, verdict[1])


def test_serializability_witness_on_serial_history():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(1, "grant", txn=0, obj="x", mode="w")
    t.emit(1, "write", txn=0, obj="x", val="31")
    t.emit(2, "commit2", txn=0, phase="decision", outcome="commit", parts="n1")
    t.emit(3, "begin", txn=1, parent="-")
    t.emit(4, "grant", txn=1, obj="x", mode="r")
    t.emit(4, "read", txn=1, obj="x", val="31")
    t.emit(5, "commit2", txn=1, phase="decision", outcome="commit", parts="-")
    ok, info = audit.audit_serializability(t.events)
    assert ok
    assert info["witness"] == [0, 1]


def test_serializability_detects_conflict_cycle():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent="-")
    t.emit(1, "read", txn=0, obj="x", val="31")
    t.emit(1, "write", txn=1, obj="y", val="32")
    t.emit(2, "write", txn=1, obj="x", val="33")
    t.emit(2, "write", txn=0, obj="y", val="34")
    t.emit(3, "commit2", txn=0, phase="decision", outcome="commit", parts="-")
    t.emit(3, "commit2", txn=1, phase="decision", outcome="commit", parts="-")
    ok, info = audit.audit_serializability(t.events)
    assert not ok
    assert set(info["cycle"]) == {0, 1}


def test_serializability_ignores_aborted_transactions():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent="-")
    t.emit(1, "read", txn=0, obj="x", val="31")
    t.emit(1, "write", txn=1, obj="y", val="32")
    t.emit(2, "write", txn=1, obj="x", val="33")
    t.emit(2, "write", txn=0, obj="y", val="34")
    t.emit(3, "abort", txn=1, cause="deadlock")
    t.emit(3, "commit2", txn=0, phase="decision", outcome="commit", parts="-")
    ok, _ = audit.audit_serializability(t.events)
    assert ok


def test_smuggling_detects_dirty_read():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent="-")
    t.emit(1, "write", txn=0, obj="x", val="39")
    t.emit(2, "read", txn=1, obj="x", val="39")  # pre-commit leak
    t.emit(3, "commit2", txn=0, phase="decision", outcome="commit", parts="-")
    ok, problems = audit.scan_smuggling(t.events)
    assert not ok and "txn 1 read x" in problems[0]


def test_smuggling_allows_reads_after_writer_resolves():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent="-")
    t.emit(1, "write", txn=0, obj="x", val="39")
    t.emit(2, "abort", txn=0, cause="deadlock")
    t.emit(3, "read", txn=1, obj="x", val="31")
    ok, _ = audit.scan_smuggling(t.events)
    assert ok


def test_smuggling_tracks_anti_inheritance():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent=0)
    t.emit(1, "write", txn=1, obj="x", val="39")
    t.emit(2, "commit2", txn=1, phase="nested", parent=0)
    t.emit(3, "begin", txn=2, parent="-")
    t.emit(4, "read", txn=2, obj="x", val="39")  # now dirty under txn 0
    ok, problems = audit.scan_smuggling(t.events)
    assert not ok


def test_bracketing_flags_event_outside_action_span():
    t = Trace()
    t.emit(0, "register", inst="a", role="r", th=0, ok=1)
    t.emit(1, "read", txn=0, obj="x", val="31", inst="a", th=0)
    t.emit(2, "outcome", inst="a", th=0, role="r", outcome="committed")
    t.emit(3, "write", txn=0, obj="x", val="32", inst="a", th=0)  # too late
    ok, problems = audit.scan_bracketing(t.events)
    assert not ok and "after a outcome" in problems[0]


def test_lock_rule_flags_non_ancestor_coexistence():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent="-")
    t.emit(1, "grant", txn=0, obj="x", mode="w")
    t.emit(2, "grant", txn=1, obj="x", mode="w")  # illegal: unrelated txns
    ok, problems = audit.verify_lock_rule(t.events)
    assert not ok and "non-ancestor" in problems[0]


def test_lock_rule_accepts_ancestor_and_transfer():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(0, "begin", txn=1, parent=0)
    t.emit(1, "grant", txn=0, obj="x", mode="r")
    t.emit(2, "grant", txn=1, obj="x", mode="w")  # parent is ancestor: fine
    t.emit(3, "commit2", txn=1, phase="nested", parent=0)
    t.emit(4, "begin", txn=2, parent=0)
    t.emit(5, "grant", txn=2, obj="x", mode="w")  # holder 0 is ancestor
    ok, problems = audit.verify_lock_rule(t.events)
    assert ok, problems


def test_atomicity_replay_matches_run():
    res = run_text(TRANSFER)
    import casim.trace as trace_mod
    events, dumps = trace_mod.parse(res.trace_text())
    ok, problems = audit.scan_atomicity(events, dumps)
    assert ok, problems


def test_atomicity_flags_tampered_dump():
    res = run_text(TRANSFER)
    text = res.trace_text()
    stable = res.store.dump_stable()
    tampered = text.replace(stable[0], stable[0][:-2] + "ff", 1)
    report = audit.audit_trace(tampered, all_nodes=["alpha", "beta"])
    assert not report["atomicity"][0]
    assert not report["ok"]


def test_durability_failure_detected():
    t = Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(1, "commit2", txn=0, phase="decision", outcome="commit",
           parts="n1,n2")
    t.emit(2, "commit2", txn=0, phase="apply", node="n1", objs="x")
    ok, problems = audit.check_durability(t.events, up_nodes={"n1", "n2"})
    assert not ok and "never applied at up node n2" in problems[0]
    # a still-down participant is not a durability violation
    ok, _ = audit.check_durability(t.events, up_nodes={"n1"})
    assert ok


def test_audit_trace_propagates_malformed():
    with pytest.raises(MalformedTrace):
        audit.audit_trace("0\t0\tnonsense\t-\t-\t-\n")
