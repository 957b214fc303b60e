import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalstab.data import DataError, from_array, random_sem, synth_sem
from causalstab.graph import Edge, EdgeToken, Mark, MixedGraph
from causalstab.stability import (
    GENERATORS,
    Generator,
    StabilityReport,
    graph_jaccard,
    jaccard,
    jaccard_matrix,
    read_report_csv,
    run_alpha_sweep,
    run_cross_generator,
    run_projects,
    run_releases,
    run_subsample,
    sweep_alphas,
    write_report_csv,
    write_summary_csv,
)
from oracles import brute_jaccard

D = lambda a, b: EdgeToken("directed", a, b)  # noqa: E731


def test_jaccard_examples():
    assert jaccard({D("a", "b")}, {D("b", "a")}) == 0.0
    e = {D("a", "b"), EdgeToken("undirected", "b", "c")}
    assert jaccard(e, e) == 1.0
    assert jaccard({D("a", "b"), D("b", "c")}, {D("a", "b"), D("c", "b")}) == pytest.approx(1 / 3)
    assert jaccard(set(), set()) == 1.0
    assert jaccard(set(), {D("a", "b")}) == 0.0


tokens = st.frozensets(st.builds(EdgeToken, st.sampled_from(["directed", "undirected", "bidirected"]),
                                 st.sampled_from("abcd"), st.sampled_from("abcd")), max_size=8)


@settings(max_examples=300, deadline=None)
@given(tokens, tokens)
def test_jaccard_properties(a, b):
    j = jaccard(a, b)
    assert j == jaccard(b, a) == brute_jaccard(a, b)
    assert 0.0 <= j <= 1.0
    assert jaccard(a, a) == 1.0


def test_graph_jaccard_collapses_circles():
    pag = MixedGraph(["a", "b"], [Edge("a", "b", Mark.CIRCLE, Mark.CIRCLE)])
    cpdag = MixedGraph(["a", "b"], [Edge("a", "b", Mark.TAIL, Mark.TAIL)])
    assert graph_jaccard(pag, cpdag) == 1.0


def test_generator_settings():
    assert Generator("pc").alpha == 0.01
    assert Generator("ges").alpha is None
    with pytest.raises(ValueError):
        Generator("ges", alpha=0.5)
    with pytest.raises(ValueError):
        Generator("pc", alpha=1.5)
    with pytest.raises(ValueError):
        Generator("magic")


def _tables(k, rows=300, seed=0, p=6):
    spec = random_sem(p, 0.4, seed)
    return [synth_sem(spec, rows, seed * 100 + r, name=f"proj-1.{r}") for r in range(k)]


def test_releases_consecutive_pairs():
    rep = run_releases(_tables(5), "pc")
    assert len(rep.rows) == 4
    assert [(r.left, r.right) for r in rep.rows] == [(f"proj-1.{k}", f"proj-1.{k + 1}") for k in range(4)]
    assert rep.rows[0].dataset == "proj-1"
    t = _tables(1)[0]
    same = run_releases([t, t], "pc")
    assert same.rows[0].jaccard == 1.0
    with pytest.raises(ValueError):
        run_releases([t], "pc")


def test_releases_alignment_failure():
    rng = np.random.default_rng(0)
    a = from_array(rng.standard_normal((50, 2)), ["p", "q"], "a")
    b = from_array(rng.standard_normal((50, 2)), ["r", "s"], "b")
    with pytest.raises(DataError):
        run_releases([a, b], "pc")


def test_projects_upper_triangle_and_matrix():
    tabs = [synth_sem(random_sem(5, 0.5, k), 200, k, name=f"p{k}") for k in range(5)]
    rep = run_projects(tabs, "pc")
    assert len(rep.rows) == 10
    labels, m = jaccard_matrix(rep)
    assert labels == [f"p{k}" for k in range(5)]
    assert all(m[i][j] == m[j][i] for i in range(5) for j in range(5))
    assert run_projects([tabs[0], tabs[0]], "pc").rows[0].jaccard == 1.0


def test_projects_excludes_unalignable():
    rng = np.random.default_rng(0)
    tabs = _tables(2)
    odd = from_array(rng.standard_normal((50, 2)), ["u", "v"], "odd")
    rep = run_projects(tabs + [odd], "pc")
    assert len(rep.rows) == 1
    assert any("odd" in f for f in rep.failures)


def test_sweep_grid_and_rows():
    alphas = sweep_alphas()
    assert len(alphas) == 999 and alphas[0] == 0.001 and alphas[-1] == 0.999
    t = _tables(1, rows=200)[0]
    rep = run_alpha_sweep(t, "pc")
    assert len(rep.rows) == 998
    assert len(rep.edge_counts) == 999
    assert all(r.left == "alpha=0.001" and r.right != r.left for r in rep.rows)
    with pytest.raises(ValueError):
        run_alpha_sweep(t, "ges")


def test_subsample_protocol():
    t = _tables(1, rows=200)[0]
    rep = run_subsample(t, "pc", root_seed=3)
    assert len(rep.rows) == 19 and rep.completion == 1.0
    again = run_subsample(t, "pc", root_seed=3, jobs=3)
    assert again.rows == rep.rows
    full = run_subsample(t, "pc", fraction=1.0)
    assert all(r.jaccard == 1.0 for r in full.rows)
    lin = run_subsample(t, Generator("lingam"), runs=4, root_seed=1)
    assert lin.rows == run_subsample(t, Generator("lingam"), runs=4, root_seed=1).rows


def test_subsample_skips_degenerate_runs():
    values = np.zeros((40, 3))
    values[:, 0] = np.arange(40)
    values[:, 1] = np.sin(np.arange(40))
    values[:3, 2] = 1.0  # rare nonzero column
    t = from_array(values, ["a", "b", "c"])
    rep = run_subsample(t, "pc", runs=20, fraction=0.5, root_seed=0)
    assert rep.failures and all("degenerate" in f for f in rep.failures)
    assert rep.planned == 19 and rep.completion < 1.0


def test_cross_generator():
    tabs = [synth_sem(random_sem(5, 0.5, k, noise="uniform"), 300, k, name=f"d{k}") for k in range(2)]
    rep = run_cross_generator(tabs, trials=30, root_seed=2)
    assert len(rep.rows) == 30
    for r in rep.rows:
        assert r.left != r.right and r.left in GENERATORS and r.right in GENERATORS
    assert rep.rows == run_cross_generator(tabs, trials=30, root_seed=2, jobs=4).rows
    assert 0.0 <= rep.median() <= 1.0


def test_cross_generator_retries_failures(monkeypatch):
    real = Generator.run

    def flaky(self, t):
        if self.name == "lingam":
            raise RuntimeError("boom")
        return real(self, t)

    monkeypatch.setattr(Generator, "run", flaky)
    tabs = _tables(1, rows=100)
    rep = run_cross_generator(tabs, trials=20, root_seed=0)
    assert len(rep.rows) == 20
    assert all("lingam" not in r.generator for r in rep.rows)
    assert rep.failures and all("boom" in f for f in rep.failures)


def test_summary_recomputable(tmp_path):
    rep = run_subsample(_tables(1, rows=150, p=8, seed=4)[0], "pc", root_seed=1)
    (key, (mean, sd)), = rep.summary().items()
    vals = [r.jaccard for r in rep.rows]
    assert abs(mean - statistics.fmean(vals)) <= 1e-12
    assert abs(sd - statistics.stdev(vals)) <= 1e-12
    write_report_csv(rep, tmp_path / "r.csv")
    back = read_report_csv(tmp_path / "r.csv")
    assert back.rows == rep.rows
    write_summary_csv(rep, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "group,protocol,generator,mean,stdev"
    assert lines[1] == f"{key[0]},subsample,pc,{mean:.2f},{sd:.2f}"


def test_read_report_rejects_malformed(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_report_csv(p)
    p.write_text("protocol,dataset,generator,parameter,left,right,jaccard\nx,y,z,w,l,r,1.5\n")
    with pytest.raises(ValueError):
        read_report_csv(p)
    assert StabilityReport().completion == 1.0
