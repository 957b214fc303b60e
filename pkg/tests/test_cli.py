import json
import subprocess
import sys

import pytest

from causalstab.cli import main
from causalstab.graph import MixedGraph, deserialize, serialize, validate


@pytest.fixture
def csv_path(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["synth", "--nodes", "6", "--edge-prob", "0.4", "--samples", "400",
                 "--noise", "uniform", "--seed", "2", "--out", str(out)]) == 0
    return out


def _graph_file(path, arcs):
    path.write_text(serialize(MixedGraph.directed(sorted({v for a in arcs for v in a}), arcs)))
    return str(path)


def test_synth_outputs(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["synth", "--nodes", "3", "--edge-prob", "0", "--samples", "100", "--seed", "1",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x0,x1,x2" and len(lines) == 101
    spec = json.loads((tmp_path / "s.sem.json").read_text())
    assert spec["edges"] == [] and spec["seed"] == 1
    first = out.read_bytes()
    main(["synth", "--nodes", "3", "--edge-prob", "0", "--samples", "100", "--seed", "1",
          "--out", str(out)])
    assert out.read_bytes() == first


@pytest.mark.parametrize("argv", [
    ["synth", "--nodes", "1", "--out", "x.csv"],
    ["synth", "--nodes", "3", "--edge-prob", "2", "--out", "x.csv"],
    ["synth", "--nodes", "3", "--samples", "5", "--out", "x.csv"],
    ["discover", "--algo", "magic", "--input", "x.csv"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_discover_pc_json(csv_path, tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["discover", "--algo", "pc", "--input", str(csv_path), "--alpha", "0.01",
                 "--out", str(out)]) == 0
    g = deserialize(out.read_text())
    assert validate(g, "cpdag") == []
    assert "nodes=6" in capsys.readouterr().out


def test_discover_dot_to_stdout(csv_path, capsys):
    assert main(["discover", "--algo", "fci", "--input", str(csv_path), "--format", "dot"]) == 0
    assert capsys.readouterr().out.startswith('digraph "d" {')


def test_discover_ges_rejects_alpha(csv_path):
    assert main(["discover", "--algo", "ges", "--alpha", "0.5", "--input", str(csv_path)]) == 2


def test_discover_lingam_reproducible(csv_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["discover", "--algo", "lingam", "--seed", "1", "--input", str(csv_path),
                     "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_discover_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["discover", "--algo", "pc", "--input", str(bad)]) == 3
    assert main(["discover", "--algo", "pc", "--input", str(tmp_path / "none.csv")]) == 3


def test_discover_generator_failure(csv_path, monkeypatch):
    from causalstab import lingam

    monkeypatch.setattr(lingam, "MAX_ITER", 1)
    assert main(["discover", "--algo", "lingam", "--input", str(csv_path)]) == 4


def test_compare(tmp_path, capsys):
    ab = _graph_file(tmp_path / "ab.json", [("a", "b")])
    ba = _graph_file(tmp_path / "ba.json", [("b", "a")])
    cd = _graph_file(tmp_path / "cd.json", [("c", "d"), ("d", "e")])
    xy = _graph_file(tmp_path / "xy.json", [("x", "y"), ("y", "z")])
    assert main(["compare", ab, ab]) == 0
    assert main(["compare", ab, ba]) == 0
    assert main(["compare", cd, xy]) == 0
    assert capsys.readouterr().out.split() == ["1.0000", "0.0000", "0.0000"]
    (tmp_path / "junk.json").write_text("{")
    assert main(["compare", ab, str(tmp_path / "junk.json")]) == 3


def test_audit_subsample_and_rank(csv_path, tmp_path, capsys):
    out = tmp_path / "aud"
    assert main(["audit", "--protocol", "subsample", "--algo", "pc", "--inputs", str(csv_path),
                 "--seed", "1", "--out", str(out)]) == 0
    rows = (out / "report.csv").read_text().splitlines()
    assert rows[0] == "protocol,dataset,generator,parameter,left,right,jaccard"
    assert len(rows) == 20
    assert (out / "summary.csv").read_text().startswith("group,protocol,generator,mean,stdev\n")
    assert main(["rank", "--input", str(out / "report.csv"), "--out", str(tmp_path / "r.csv")]) == 0
    ranks = (tmp_path / "r.csv").read_text().splitlines()
    assert ranks[0] == "rank,group,mean,stdev" and ranks[1].startswith("0,d/subsample/pc,")


def test_audit_alpha_sweep_rows(csv_path, tmp_path):
    out = tmp_path / "sweep"
    assert main(["audit", "--protocol", "alpha-sweep", "--algo", "pc", "--inputs", str(csv_path),
                 "--out", str(out)]) == 0
    assert len((out / "report.csv").read_text().splitlines()) == 999
    assert len((out / "edges.csv").read_text().splitlines()) == 1000


def test_audit_usage_errors(csv_path, tmp_path):
    out = str(tmp_path / "x")
    assert main(["audit", "--protocol", "releases", "--inputs", str(csv_path), "--out", out]) == 2
    assert main(["audit", "--protocol", "alpha-sweep", "--algo", "ges", "--inputs", str(csv_path),
                 "--out", out]) == 2
    assert main(["audit", "--protocol", "subsample", "--jobs", "0", "--inputs", str(csv_path),
                 "--out", out]) == 2


def test_audit_projects_writes_matrix(tmp_path):
    paths = []
    for k in range(3):
        p = tmp_path / f"p{k}.csv"
        main(["synth", "--nodes", "5", "--samples", "200", "--seed", str(k), "--out", str(p)])
        paths.append(str(p))
    out = tmp_path / "proj"
    assert main(["audit", "--protocol", "projects", "--algo", "ges", "--inputs", *paths,
                 "--out", str(out)]) == 0
    assert len((out / "report.csv").read_text().splitlines()) == 4
    assert (out / "matrix.csv").read_text().splitlines()[0] == ",p0,p1,p2"


def test_audit_low_completion_exit_4(tmp_path):
    values = ["a,b,c"] + [f"{k},{(k * 7) % 11},{1 if k < 2 else 0}" for k in range(30)]
    p = tmp_path / "rare.csv"
    p.write_text("\n".join(values) + "\n")
    assert main(["audit", "--protocol", "subsample", "--inputs", str(p), "--fraction", "0.5",
                 "--out", str(tmp_path / "o")]) == 4
    assert (tmp_path / "o" / "failures.txt").exists()


def test_rank_errors(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("protocol,dataset,generator,parameter,left,right,jaccard\n")
    assert main(["rank", "--input", str(p)]) == 3
    p.write_text("nonsense\n")
    assert main(["rank", "--input", str(p)]) == 3


def test_rank_three_bands(tmp_path, capsys):
    lines = ["protocol,dataset,generator,parameter,left,right,jaccard"]
    for gen, base in (("pc", 0.85), ("fci", 0.5), ("ges", 0.15)):
        for k in range(10):
            lines.append(f"subsample,d,{gen},f,run00,run{k + 1:02d},{base + 0.001 * k}")
    p = tmp_path / "r.csv"
    p.write_text("\n".join(lines) + "\n")
    assert main(["rank", "--input", str(p), "--by", "generator", "--out", str(tmp_path / "o.csv")]) == 0
    ranks = [line.split(",")[:2] for line in (tmp_path / "o.csv").read_text().splitlines()[1:]]
    assert ranks == [["0", "pc"], ["1", "fci"], ["2", "ges"]]


def test_version_and_module_entry():
    res = subprocess.run([sys.executable, "-m", "causalstab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "graph format 1" in res.stdout and "report format 1" in res.stdout
