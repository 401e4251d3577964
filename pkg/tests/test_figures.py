"""Figure rendering smoke tests: every scenario produces a non-empty PNG."""

import os

import pytest

from stochexp import cli, experiments, figures


def render(report, tmp_path, scenario):
    cfg = cli.parse_args([scenario, "--out", str(tmp_path / "r.json")])
    paths = figures.render_figures(report, cfg)
    assert len(paths) == 1
    assert os.path.getsize(paths[0]) > 1000
    return paths[0]


def test_corollary2_figure(tmp_path):
    rep = experiments.run_corollary2(n_paths=64, feller_gate=False, timing=False)
    path = render(rep, tmp_path, "corollary2")
    assert path.endswith("_corollary2.png")


def test_nonunique_figure(tmp_path):
    rep = experiments.run_nonunique(n_paths=200, timing=False)
    render(rep, tmp_path, "nonunique")


def test_nonexist_figure(tmp_path):
    rep = experiments.run_nonexist(n_paths=30, timing=False)
    render(rep, tmp_path, "nonexist")


def test_tanaka_figure(tmp_path):
    rep = experiments.run_tanaka(n_paths=100, timing=False)
    render(rep, tmp_path, "tanaka")


def test_integrability_figure(tmp_path):
    rep = experiments.run_integrability(n_paths=100, horizon=5.0, timing=False)
    render(rep, tmp_path, "integrability")


def test_simulate_and_feller_figures_via_cli(tmp_path):
    out = tmp_path / "sim.json"
    status = cli.main(
        ["simulate", "--drift", "linear", "--paths", "64", "--out", str(out),
         "--no-timestamp", "--plot"]
    )
    assert status == 0
    assert (tmp_path / "sim_simulate.png").exists()


def test_plot_without_out_writes_to_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    status = cli.main(["tanaka", "--paths", "200", "--no-timestamp", "--plot"])
    assert status == 0
    assert (tmp_path / "tanaka.png").exists()
