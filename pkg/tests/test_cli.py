import csv
import io
import json

import pytest

from meshmsf.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def triangle(tmp_path):
    p = tmp_path / "tri.txt"
    p.write_text("3 3\n0 1 1\n1 2 2\n0 2 3\n")
    return str(p)


def test_run_triangle(capsys, triangle):
    code, out, _ = run_cli(capsys, "run", "--graph", triangle)
    rep = json.loads(out)
    assert code == 0
    assert rep["verdict"]["status"] == "pass"
    assert rep["msf_weight"] == 3 and rep["components"] == 1
    assert {"n", "records", "vertices", "msf_weight", "components", "steps_total",
            "steps_by_phase", "verdict", "config_echo"} <= rep.keys()
    assert sum(rep["steps_by_phase"].values()) == rep["steps_total"]


def test_run_empty_graph(capsys, tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("16 0\n")
    code, out, _ = run_cli(capsys, "run", "--graph", str(p))
    rep = json.loads(out)
    assert code == 0 and rep["components"] == 16 and rep["msf_weight"] == 0


def test_run_is_reproducible(capsys, triangle):
    a = run_cli(capsys, "run", "--graph", triangle, "--seed", "3")[1]
    b = run_cli(capsys, "run", "--graph", triangle, "--seed", "3")[1]
    assert a == b


def test_usage_and_parse_errors(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1\n0 1 x\n")
    assert run_cli(capsys, "run", "--graph", str(bad))[0] == 2
    assert run_cli(capsys, "run", "--graph", str(tmp_path / "missing"))[0] == 2
    assert run_cli(capsys, "run")[0] == 2
    assert run_cli(capsys, "bench", "--bench-sides", "12")[0] == 2
    assert run_cli(capsys, "bench", "--bench-sides", "16,8")[0] == 2


def test_graph_too_big_for_side(capsys, tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("40 0\n")
    assert run_cli(capsys, "run", "--graph", str(p), "--side", "4")[0] == 2


def test_verify_off(capsys, triangle):
    code, out, _ = run_cli(capsys, "run", "--graph", triangle, "--verify", "off")
    assert code == 0 and json.loads(out)["verdict"]["status"] == "skipped"


def test_verification_failure_exit_code(capsys, triangle, monkeypatch):
    import meshmsf.cli as cli

    def broken(result, g):
        from meshmsf.oracle import Verdict

        return Verdict(False, ["forced"])

    monkeypatch.setattr(cli, "verify", broken)
    assert run_cli(capsys, "run", "--graph", triangle)[0] == 1


def test_internal_error_exit_code(capsys, triangle, monkeypatch):
    import meshmsf.cli as cli
    from meshmsf.errors import CapacityExceeded

    def boom(*a, **k):
        raise CapacityExceeded("full")

    monkeypatch.setattr(cli, "run_msf", boom)
    code, _, err = run_cli(capsys, "run", "--graph", triangle)
    assert code == 3 and "CapacityExceeded" in err


def test_gen_kinds(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "gen", "tree", "-V", "8", "--seed", "1")
    assert code == 0 and out.splitlines()[0] == "8 7"
    code, out, _ = run_cli(capsys, "gen", "grid", "-V", "100")
    assert out.splitlines()[0] == "100 180"
    a = run_cli(capsys, "gen", "random-gnm", "-V", "100", "-M", "300", "--seed", "9")[1]
    b = run_cli(capsys, "gen", "random-gnm", "-V", "100", "-M", "300", "--seed", "9")[1]
    assert a == b
    code, out, _ = run_cli(capsys, "gen", "disjoint-union", "-V", "5", "-M", "4", "--parts", "3")
    assert out.splitlines()[0] == "15 12"
    assert run_cli(capsys, "gen", "grid", "-V", "10")[0] == 2
    dest = tmp_path / "t.txt"
    assert run_cli(capsys, "gen", "tree", "-V", "4", "-o", str(dest))[0] == 0
    assert dest.read_text().startswith("4 3")


def test_bench_csv(capsys):
    code, out, _ = run_cli(capsys, "bench", "--bench-sides", "8", "--trials", "1")
    lines = out.splitlines()
    assert code == 0
    assert lines[-1].startswith("# slope=")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[:-1]))))
    assert len(rows) == 1 and rows[0]["side"] == "8" and rows[0]["n"] == "64"
    phases = ("coarsen", "label", "route", "components", "other")
    assert sum(int(rows[0][p]) for p in phases) == int(rows[0]["total_steps"])


def test_bench_json(capsys):
    code, out, _ = run_cli(capsys, "bench", "--bench-sides", "4,8", "--format", "json", "--trials", "2")
    rep = json.loads(out)
    assert code == 0 and len(rep["rows"]) == 4 and isinstance(rep["slope"], float)


def test_log_levels(capsys, triangle, monkeypatch):
    monkeypatch.setenv("MESHMSF_LOG", "phase")
    code, _, err = run_cli(capsys, "run", "--graph", triangle)
    assert code == 0 and "phase label" in err
    monkeypatch.setenv("MESHMSF_LOG", "step")
    _, _, err = run_cli(capsys, "run", "--graph", triangle)
    assert "meshmsf.steps" in err
    monkeypatch.setenv("MESHMSF_LOG", "loud")
    assert run_cli(capsys, "run", "--graph", triangle)[0] == 2
