import csv
import io
import json
import statistics
import subprocess
import sys

import pytest

from snakenet.cli import EXIT_FAULT, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main
from snakenet.portgraph import PortGraph, validate


def run_cli(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, out, _ = run_cli(capsys, "generate", "--family", "random", "--n", "16", "--delta", "3", "--seed", "7", "--out", str(path))
        assert code == EXIT_OK
        assert "N=16" in out and "D=" in out
    assert a.read_bytes() == b.read_bytes()
    assert validate(PortGraph.from_json(a.read_text())) == []


def test_generate_treeloop(capsys):
    code, out, _ = run_cli(capsys, "generate", "--family", "treeloop", "--depth", "2", "--perm", "1,3,2,4")
    assert code == EXIT_OK
    assert json.loads(out)["nodes"] == 7


def test_generate_rejects_single_node(capsys):
    code, _, err = run_cli(capsys, "generate", "--family", "random", "--n", "1")
    assert code == EXIT_USAGE
    assert "at least 2" in err


def test_needs_exactly_one_source(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "generate")
    assert code == EXIT_USAGE
    g = tmp_path / "g.json"
    g.write_text("{}")
    code, _, _ = run_cli(capsys, "generate", "--graph", str(g), "--family", "cycle", "--n", "3")
    assert code == EXIT_USAGE


def test_unknown_option_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, "run", "--bogus")
    assert code == EXIT_USAGE


def test_run_two_cycle(capsys, tmp_path):
    t, m = tmp_path / "t.json", tmp_path / "m.json"
    code, out, _ = run_cli(capsys, "run", "--family", "cycle", "--n", "2", "--transcript-out", str(t), "--map-out", str(m))
    assert code == EXIT_OK
    assert out.startswith("VERDICT=ISOMORPHIC ticks=")
    assert "N=2 D=1" in out
    assert json.loads(t.read_text())["events"][0] == "tick=0 event=Start"
    assert PortGraph.from_json(m.read_text()).node_count == 2


def test_run_random_from_file(capsys, tmp_path):
    g = tmp_path / "g.json"
    run_cli(capsys, "generate", "--family", "random", "--n", "16", "--delta", "3", "--seed", "7", "--out", str(g))
    code, out, _ = run_cli(capsys, "run", "--graph", str(g))
    assert code == EXIT_OK
    assert "VERDICT=ISOMORPHIC" in out


def test_corrupted_replay_is_mismatch(capsys):
    code, out, _ = run_cli(capsys, "run", "--family", "random", "--n", "6", "--seed", "2", "--corrupt")
    assert code == EXIT_MISMATCH
    assert "VERDICT=MISMATCH" in out


def test_budget_overrun_is_fault(capsys, monkeypatch):
    monkeypatch.setenv("SNAKENET_TICK_BUDGET_MULT", "1")
    code, out, _ = run_cli(capsys, "run", "--family", "cycle", "--n", "8")
    assert code == EXIT_FAULT
    assert "VERDICT=FAULT" in out


def test_bad_budget_multiplier(capsys):
    code, _, _ = run_cli(capsys, "run", "--family", "cycle", "--n", "3", "--budget-mult", "0")
    assert code == EXIT_USAGE


def test_rca_and_bca_commands(capsys):
    code, out, _ = run_cli(capsys, "rca", "--family", "cycle", "--n", "3", "--node", "2", "--payload", "BACK")
    assert code == EXIT_OK
    assert json.loads(out)["quiescent_after"] is True
    code, out, _ = run_cli(capsys, "bca", "--family", "cycle", "--n", "3", "--edge", "0,1,1,1")
    assert code == EXIT_OK
    assert json.loads(out)["delivered"] is True
    code, _, _ = run_cli(capsys, "rca", "--family", "cycle", "--n", "3", "--node", "0")
    assert code == EXIT_USAGE
    code, _, _ = run_cli(capsys, "bca", "--family", "cycle", "--n", "3", "--edge", "1,1,0,1")
    assert code == EXIT_USAGE


def test_bench_cycles(capsys):
    code, out, _ = run_cli(capsys, "bench", "--family", "cycle", "--sizes", "8,16,32")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    ratios = [float(r["ticks_per_nd"]) for r in rows]
    assert len(rows) == 3
    assert max(ratios) < 2 * min(ratios)


def test_bench_treeloop_and_small(capsys):
    code, out, _ = run_cli(capsys, "bench", "--family", "treeloop", "--sizes", "1,2,3")
    assert code == EXIT_OK
    ratios = [float(r["ticks_per_nd"]) for r in csv.DictReader(io.StringIO(out))]
    med = statistics.median(ratios)
    assert all(med / 2 <= r <= 2 * med for r in ratios)
    code, out, _ = run_cli(capsys, "bench", "--family", "cycle", "--sizes", "2")
    assert int(next(csv.DictReader(io.StringIO(out)))["ticks"]) > 0


def test_bench_abort_flags_partial_csv(capsys):
    code, out, _ = run_cli(capsys, "bench", "--family", "cycle", "--sizes", "4,8", "--budget-mult", "1")
    assert code == EXIT_FAULT
    assert "# ABORTED" in out


def test_export_dot(capsys):
    code, out, _ = run_cli(capsys, "export-dot", "--family", "cycle", "--n", "3")
    assert code == EXIT_OK
    assert out.startswith("digraph")


@pytest.mark.slow
def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "snakenet", "run", "--family", "cycle", "--n", "3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "VERDICT=ISOMORPHIC" in proc.stdout
