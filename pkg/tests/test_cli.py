import json

import numpy as np
import pytest
from click.testing import CliRunner

from pointline import harness
from pointline.cli import main
from pointline.errors import NumericalError
from pointline.io import loads_pairs, loads_rows


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def instance(tmp_path, runner):
    p = tmp_path / "inst.csv"
    r = runner.invoke(main, ["--seed", "3", "gen", "-n", "12", "-k", "0.25", "-o", str(p)])
    assert r.exit_code == 0, r.output
    return p


def test_gen_writes_instance_and_manifest(instance):
    A, w = loads_pairs(instance.read_text())
    assert len(A) == 12 and w is None
    man = json.loads((instance.parent / "inst.csv.manifest.json").read_text())
    assert man["seed"] == 3 and man["command"] == "gen"
    assert man["config"]["gen"]["n"] == 12
    assert len(man["config"]["outliers"]) == 3
    assert "numpy" in man["versions"]


def test_gen_is_reproducible(tmp_path, runner):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    runner.invoke(main, ["--seed", "9", "gen", "-n", "20", "--shuffle", "-o", str(a)])
    runner.invoke(main, ["--seed", "9", "gen", "-n", "20", "--shuffle", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_gen_json_stdout(runner):
    r = runner.invoke(main, ["--format", "json", "gen", "-n", "5"])
    assert r.exit_code == 0
    d = json.loads(r.stdout)
    assert len(d["pairs"]) == 5


@pytest.mark.parametrize("solver", ["exact", "lms", "approx", "ransac-lms"])
def test_solve_then_eval(instance, tmp_path, runner, solver):
    out = tmp_path / f"{solver}.json"
    r = runner.invoke(main, ["solve", str(instance), "--solver", solver, "-o", str(out)])
    assert r.exit_code == 0, r.output
    res = json.loads(out.read_text())
    assert set(res) >= {"theta", "t", "R", "cost", "solver"}
    r = runner.invoke(main, ["eval", str(instance), str(out)])
    assert r.exit_code == 0
    assert json.loads(r.stdout)["cost"] == pytest.approx(res["cost"], rel=1e-12)


def test_solve_with_spec(instance, runner):
    spec = json.dumps({"z": 2, "lip": {"kind": "power", "r": 2}, "outer": {"kind": "sum"}})
    r = runner.invoke(main, ["solve", str(instance), "--spec", spec])
    assert r.exit_code == 0, r.output
    res = json.loads(r.stdout)
    assert res["cost"] >= 0


def test_solve_unmatched(tmp_path, runner):
    p = tmp_path / "u.csv"
    runner.invoke(main, ["--seed", "1", "gen", "-n", "4", "--shuffle", "--noise-std", "0", "--noise-mean", "0", "-o", str(p)])
    r = runner.invoke(main, ["solve-unmatched", str(p)])
    assert r.exit_code == 0, r.output
    d = json.loads(r.stdout)
    man = json.loads((tmp_path / "u.csv.manifest.json").read_text())
    assert d["pi"] == man["config"]["planted_perm"]
    assert d["mode"] == "exact"
    r = runner.invoke(main, ["solve-unmatched", str(p), "--mode", "sampled", "--budget", "50"])
    assert json.loads(r.stdout)["mode"] == "sampled"


def test_solve_unmatched_cap(instance, runner):
    r = runner.invoke(main, ["solve-unmatched", str(instance)])
    assert r.exit_code == 2


def test_coreset_command(tmp_path, runner):
    p = tmp_path / "big.csv"
    runner.invoke(main, ["gen", "-n", "400", "-o", str(p)])
    r = runner.invoke(main, ["coreset", str(p), "--size", "50"])
    assert r.exit_code == 0, r.output
    text = r.stdout
    assert text.splitlines()[0] == "px,py,vx,vy,b,w,u"
    rows = loads_rows(text)
    assert 0 < len(rows) <= 50
    assert all(row["u"] > 0 for row in rows)


def test_stream_command(runner):
    lines = ["px,py,vx,vy,b,w", "# comment"]
    rng = np.random.default_rng(0)
    for _ in range(300):
        lines.append(",".join(str(x) for x in [*rng.uniform(0, 10, 2), 0, 1, rng.uniform(0, 5), 1]))
    r = runner.invoke(main, ["stream", "--leaf-size", "64", "--n-est", "300"], input="\n".join(lines) + "\n")
    assert r.exit_code == 0, r.output
    rows = loads_rows(r.stdout)
    assert 0 < len(rows) < 300
    assert sum(row["u"] for row in rows) == pytest.approx(300, rel=0.5)


def test_stream_bad_record(runner):
    r = runner.invoke(main, ["stream"], input="1,2,3\n")
    assert r.exit_code == 2
    assert "line 1" in r.stderr


def test_bench_error(runner, tmp_path):
    out = tmp_path / "err.csv"
    r = runner.invoke(main, ["bench", "error", "-n", "15", "--ks", "0.1", "--solvers", "lms,approx", "--repeats", "2", "-o", str(out)])
    assert r.exit_code == 0, r.output
    rows = loads_rows(out.read_text())
    assert len(rows) == 4
    assert out.read_text().splitlines()[0] == "solver,n,k,repeat,value"
    assert (tmp_path / "err.csv.manifest.json").exists()


def test_bench_time(runner):
    r = runner.invoke(main, ["bench", "time", "--ns", "10,15", "--repeats", "1"])
    assert r.exit_code == 0, r.output
    assert len(loads_rows(r.stdout)) == 2


def test_bench_unknown_solver(runner):
    r = runner.invoke(main, ["bench", "error", "--solvers", "icp"])
    assert r.exit_code == 2


def test_invalid_inputs_exit_2(runner, tmp_path):
    assert runner.invoke(main, ["solve", str(tmp_path / "missing.csv")]).exit_code == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("px,py,vx,vy,b\n1,2,0,0,1\n")
    assert runner.invoke(main, ["solve", str(bad)]).exit_code == 2
    bad.write_text("x,y\n1,2\n")
    assert runner.invoke(main, ["solve", str(bad)]).exit_code == 2


def test_bad_spec_exit_2(instance, runner):
    assert runner.invoke(main, ["solve", str(instance), "--spec", "{nope"]).exit_code == 2
    assert runner.invoke(main, ["solve", str(instance), "--spec", '{"z": 0.2}']).exit_code == 2


def test_bad_alignment_exit_2(instance, runner, tmp_path):
    a = tmp_path / "a.json"
    a.write_text('{"R": [[2, 0], [0, 2]], "t": [0, 0]}')
    assert runner.invoke(main, ["eval", str(instance), str(a)]).exit_code == 2


def test_numerical_failure_exit_3(instance, runner, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("solver diverged")

    monkeypatch.setattr(harness, "solve", boom)
    r = runner.invoke(main, ["solve", str(instance), "--solver", "lms"])
    assert r.exit_code == 3
    assert "diverged" in r.stderr


def test_manifest_to_stderr_for_stdout_output(runner):
    r = runner.invoke(main, ["gen", "-n", "5"])
    assert json.loads(r.stderr)["command"] == "gen"
