import json

import pytest

from ccpart.bench import BenchRow, parse_configs, to_csv, to_markdown
from ccpart.cli import main
from ccpart.instance import Instance, write_instance

from suite import path, star


@pytest.fixture
def p4(tmp_path):
    f = tmp_path / "p4.inst"
    write_instance(Instance(path([1, 5, 2]), 2, 2), f)
    return f


@pytest.fixture
def star_file(tmp_path):
    f = tmp_path / "star.inst"
    write_instance(Instance(star(3), 2, 2), f)
    return f


@pytest.mark.parametrize("model", ["m1", "m2", "colgen"])
def test_solve_json(p4, capsys, model):
    cuts = "cgc" if model == "colgen" else "lbc"
    assert main(["solve", str(p4), "--model", model, "--cuts", cuts, "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["obj"] == 3 and out["status"] == "optimal"
    if model != "colgen":
        assert out["gap"] == 0.0 and set(out) == {"lb", "obj", "gap", "nodes", "time_s", "status"}


def test_solve_text(p4, capsys):
    assert main(["solve", str(p4)]) == 0
    assert capsys.readouterr().out.splitlines() == ["status optimal", "objective 3", "0 1", "2 3"]


def test_oracle_exit_codes(p4, star_file, capsys):
    assert main(["oracle", str(star_file)]) == 2
    assert capsys.readouterr().out.strip() == "infeasible"
    assert main(["oracle", str(p4), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["obj"] == 3


@pytest.mark.parametrize("model", ["m1", "m2", "colgen"])
def test_infeasible_exit_code(star_file, model):
    assert main(["solve", str(star_file), "--model", model]) == 2


def test_limit_exit_code(tmp_path):
    f = tmp_path / "g.inst"
    assert main(["generate", "--n", "10", "--m", "29", "--k", "3", "--alpha", "2", "--seed", "3", "--out", str(f)]) == 0
    assert main(["solve", str(f), "--model", "m2", "--node-limit", "2"]) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "P4", "--model", "m1", "--cuts", "cgc"],
        ["solve", "P4", "--model", "colgen", "--cuts", "lbc"],
        ["solve", "P4", "--cuts", "bogus"],
        ["solve", "P4", "--model", "m3"],
        ["solve", "P4", "--subset", "0,1:2"],
    ],
)
def test_usage_errors(p4, argv):
    argv = [str(p4) if a == "P4" else a for a in argv]
    assert main(argv) == 1


def test_missing_file(tmp_path):
    assert main(["solve", str(tmp_path / "nope.inst")]) == 1


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.inst", tmp_path / "b.inst"
    for f in (a, b):
        main(["generate", "--n", "8", "--m", "12", "--k", "2", "--alpha", "3", "--seed", "5", "--out", str(f)])
    assert a.read_text() == b.read_text()
    assert a.read_text().splitlines()[0] == "8 12 2 3"


def test_export_mps(p4, tmp_path):
    out = tmp_path / "p4.mps"
    assert main(["export-mps", str(p4), "--model", "m2", "--cuts", "lbc", "--out", str(out)]) == 0
    assert out.read_text().startswith("NAME")
    assert (tmp_path / "p4.mps.names").read_text().splitlines()[0] == "C0000000 y[0,0]"


def test_pool_out(p4, tmp_path):
    pool = tmp_path / "pool.txt"
    assert main(["solve", str(p4), "--model", "colgen", "--subset", "0,1,2:2", "--pool-out", str(pool)]) == 0
    assert all(len(line.split()) == 3 for line in pool.read_text().splitlines())


def test_bench_rows_and_determinism(tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    for s in range(3):
        main(["generate", "--n", "6", "--m", "7", "--k", "2", "--alpha", "2", "--seed", str(s),
              "--out", str(suite / f"g{s}.inst")])
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.csv"
        assert main(["bench", "--suite", str(suite), "--configs", "none;lbc,cgc", "--out", str(out), "--deterministic"]) == 0
        runs.append(out.read_bytes())
    lines = runs[0].decode().splitlines()
    assert lines[0] == "instance,n,m,alpha,k,model,cuts,lb,obj,gap,nodes,columns,time_s,status"
    assert len(lines) == 1 + 18
    assert runs[0] == runs[1]
    md = (tmp_path / "a.md").read_text().splitlines()
    assert len(md) == 2 + 18


def test_parse_configs(tmp_path):
    f = tmp_path / "cfg"
    f.write_text("none\nlbc,lc  # two families\n\n")
    assert parse_configs(str(f)) == [[], ["lbc", "lc"]]
    assert parse_configs("none;cgc") == [[], ["cgc"]]


def row(**kw):
    base = dict(instance="g", n=6, m=7, alpha=2, k=2, model="m1", cuts="none", lb=1.5, obj=4.0, gap=0.0,
                nodes=3, columns=None, time_s=0.25, status="optimal")
    base.update(kw)
    return BenchRow(**base)


def test_markdown_cells():
    lines = to_markdown([row(), row(status="time-limit", obj=None, gap=None)]).splitlines()
    solved = [c.strip() for c in lines[2].split("|")[1:-1]]
    assert solved == ["g (6,7)", "(2,2)", "m1", "none", "1.50", "4", "0", "3", "", "0.25"]
    limited = [c.strip() for c in lines[3].split("|")[1:-1]]
    assert limited[5] == "---" and limited[-1] == "×"


def test_csv_keeps_raw_numbers():
    text = to_csv([row(lb=1 / 3)])
    assert text.splitlines()[1] == "g,6,7,2,2,m1,none,0.3333333333333333,4,0,3,,0.25,optimal"
    assert float(text.splitlines()[1].split(",")[7]) == 1 / 3
