from casim.scenario import parse_scenario
from casim.sweep import crash_sweep, render_rows, seed_sweep

from conftest import TRANSFER


def test_seed_sweep_rows_all_audited():
    rows = seed_sweep(parse_scenario(TRANSFER), 0, 4)
    assert len(rows) == 5
    assert all(r["ok"] for r in rows), rows
    assert {r["seed"] for r in rows} == set(range(5))


def test_crash_sweep_covers_both_nodes_and_passes():
    rows = crash_sweep(parse_scenario(TRANSFER), stride=8)
    assert {r["node"] for r in rows} == {"alpha", "beta"}
    assert all(r["ok"] for r in rows), [r for r in rows if not r["ok"]]
    assert all(r["stable_unchanged"] and r["volatile_cleared"] for r in rows)
    # some crash points must actually abort the transfer
    outcomes = {r["outcomes"].get("transfer") for r in rows}
    assert "aborted" in outcomes and "committed" in outcomes


def test_render_rows_table():
    rows = seed_sweep(parse_scenario(TRANSFER), 0, 1)
    table = render_rows(rows)
    lines = table.strip().split("\n")
    assert lines[0].startswith("seed\t")
    assert len(lines) == 3
