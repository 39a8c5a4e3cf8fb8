import casim.cli as cli

from conftest import TRANSFER


def write_scn(tmp_path, text=TRANSFER):
    p = tmp_path / "scn.scn"
    p.write_text(text)
    return str(p)


def test_run_writes_trace_and_exits_zero(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CASIM_OUT_DIR", str(tmp_path))
    rc = cli.main(["run", write_scn(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "transfer\tcommitted" in out
    assert (tmp_path / "scn.trace").exists()
    assert "audit\tserializability\tpass" in out


def test_run_explicit_outputs_and_flags(tmp_path, capsys):
    trace_path = tmp_path / "t.trace"
    dump_path = tmp_path / "d.dump"
    rc = cli.main(["run", write_scn(tmp_path), "--seed", "7",
                   "--strategy", "flatten", "--horizon", "900",
                   "--trace", str(trace_path), "--dump", str(dump_path)])
    assert rc == 0
    assert trace_path.read_text().startswith("0\t")
    assert "[stable]" in dump_path.read_text()


def test_audit_subcommand_on_written_trace(tmp_path, capsys):
    trace_path = tmp_path / "t.trace"
    assert cli.main(["run", write_scn(tmp_path),
                     "--trace", str(trace_path)]) == 0
    capsys.readouterr()
    assert cli.main(["audit", str(trace_path)]) == 0


def test_validation_error_exits_two_with_line_number(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("node n1\nobject x n1 oops\n")
    rc = cli.main(["run", str(bad)])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_malformed_trace_exits_two(tmp_path, capsys):
    p = tmp_path / "junk.trace"
    p.write_text("0\t0\tnonsense\t-\t-\t-\n")
    assert cli.main(["audit", str(p)]) == 2


def test_sweep_seeds_subcommand(tmp_path, capsys):
    out = tmp_path / "table.tsv"
    rc = cli.main(["sweep", write_scn(tmp_path), "--mode", "seeds",
                   "--range", "0..3", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "sweep\t4 runs\t0 failed" in text
    assert out.read_text().startswith("seed\t")


def test_sweep_crash_subcommand(tmp_path, capsys):
    rc = cli.main(["sweep", write_scn(tmp_path), "--mode", "crash",
                   "--stride", "10"])
    assert rc == 0
    assert "0 failed" in capsys.readouterr().out


def test_version_flag(capsys):
    try:
        cli.main(["--version"])
    except SystemExit as e:
        assert e.code == 0
    assert capsys.readouterr().out.startswith("casim ")
