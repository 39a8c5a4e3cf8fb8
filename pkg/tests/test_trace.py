import pytest

from casim import trace
from casim.errors import MalformedTrace


def make_trace():
    t = trace.Trace()
    t.emit(0, "begin", txn=0, parent="-")
    t.emit(1, "grant", txn=0, obj="x", mode="w")
    t.emit(1, "write", txn=0, obj="x", val="32", th=0, inst="a")
    return t


def test_line_format_is_six_tab_fields():
    t = make_trace()
    for ln in t.lines():
        assert len(ln.split("\t")) == 6


def test_detail_keys_sorted():
    t = trace.Trace()
    t.emit(0, "write", txn=1, obj="x", val="aa", inst="k", th=3)
    det = t.lines()[0].split("\t")[5]
    assert det == "inst=k th=3 val=aa"


def test_roundtrip_parse():
    t = make_trace()
    dumps = {"initial": ["n1\tx\t0\t31"], "stable": ["n1\tx\t0\t31"],
             "volatile": ["n1\tx\t0\t31"]}
    events, parsed_dumps = trace.parse(t.render(dumps))
    assert [e.kind for e in events] == ["begin", "grant", "write"]
    assert events[2].detail["val"] == "32"
    assert parsed_dumps == dumps


def test_hook_sees_every_event():
    t = trace.Trace()
    seen = []
    t.hook = lambda ev: seen.append(ev.seq)
    t.emit(0, "begin", txn=0)
    t.emit(0, "abort", txn=0)
    assert seen == [0, 1]


def test_parse_rejects_bad_seq():
    text = "0\t0\tbegin\t0\t-\t-\n5\t0\tabort\t0\t-\t-\n"
    with pytest.raises(MalformedTrace) as e:
        trace.parse(text)
    assert e.value.line == 2


def test_parse_rejects_unknown_kind():
    with pytest.raises(MalformedTrace):
        trace.parse("0\t0\tfrobnicate\t-\t-\t-\n")


def test_parse_rejects_wrong_field_count():
    with pytest.raises(MalformedTrace):
        trace.parse("0\t0\tbegin\t0\n")


def test_parse_rejects_unknown_dump_section():
    text = "0\t0\tbegin\t0\t-\t-\ndump\n[bogus]\n"
    with pytest.raises(MalformedTrace):
        trace.parse(text)


def test_emit_asserts_known_kind():
    t = trace.Trace()
    with pytest.raises(AssertionError):
        t.emit(0, "nonsense")
