"""Figure rendering for scenario reports.

One PNG per report, written next to the delimited output (or into the working
directory when the report goes to stdout).  Figures draw on the report's own
diagnostics where possible (histograms, per-level values); path panels are
re-simulated at a small path count from the same master seed, so they depict
the same experiment at sketch scale.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .catalog import parse_drift, sign_convention
from .paths import RngStream, make_grid, sample_brownian
from .report import ScenarioReport
from .sde import solve
from .catalog import make_scalar_spec

__all__ = ["render_figures", "figure_path"]

plt.rcParams.update({"figure.dpi": 120, "axes.grid": True, "grid.alpha": 0.3})


def figure_path(cfg) -> str:
    if cfg.out:
        stem, _ = os.path.splitext(cfg.out)
        return f"{stem}_{cfg.scenario}.png"
    return f"{cfg.scenario}.png"


def render_figures(report: ScenarioReport, cfg) -> list:
    """Render the figure for a report; returns the written paths."""
    renderers = {
        "corollary2": _fig_corollary2,
        "nonunique": _fig_nonunique,
        "nonexist": _fig_nonexist,
        "tanaka": _fig_tanaka,
        "integrability": _fig_integrability,
        "feller": _fig_feller,
        "simulate": _fig_simulate,
    }
    fn = renderers.get(report.scenario)
    if fn is None:
        return []
    path = figure_path(cfg)
    fig = fn(report, cfg)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return [path]


def _hist_panel(ax, histogram, label, xlabel):
    counts = np.asarray(histogram["counts"], dtype=float)
    edges = np.asarray(histogram["edges"], dtype=float)
    ax.stairs(counts, edges, fill=True, alpha=0.6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("paths")
    ax.set_title(label)


def _sample_paths(drift_token, x0, horizon, base_step, xmax, master_seed, n=12):
    entry = parse_drift(drift_token)
    spec = make_scalar_spec(entry, x0)
    from .sde import SolveConfig

    cfg = SolveConfig(base_step=base_step, explosion_threshold=xmax)
    out = []
    for i in range(n):
        sol = solve(spec, cfg, RngStream(master_seed, i), horizon=horizon)
        out.append(sol)
    return out


def _fig_corollary2(report, cfg):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    _hist_panel(
        ax1, report.diagnostics["log_z_histogram"],
        "log Z at the stopped horizon", "log Z",
    )
    p = report.params
    sols = _sample_paths(
        f"pow-plus-linear:{p['alpha']:g}", p["x0"], p["horizon"],
        p["base_step"], min(p["explosion_threshold"], 100.0), report.master_seed,
    )
    for sol in sols:
        ax2.plot(sol.grid.times, sol.states[:, 0], lw=0.8)
    ax2.set_ylim(-4, 20)
    ax2.set_xlabel("t")
    ax2.set_ylabel("shifted-drift paths")
    ez = report.estimate("expected_z")
    sp = report.estimate("survival_prob")
    ax2.set_title(f"E[Z]={ez.value:.3f}, survival={sp.value:.3f}")
    fig.suptitle("drift-shift identity gap")
    return fig


def _fig_nonunique(report, cfg):
    fig, ax = plt.subplots(figsize=(6, 4))
    lambdas = report.params["lambdas"]
    names = ["weight_mean", "shifted_mean", "shifted_var"]
    targets = [1.0, 0.0, report.params["horizon"]]
    for off, (name, target) in enumerate(zip(names, targets)):
        xs, ys, es = [], [], []
        for lam in lambdas:
            e = report.estimate(f"{name}[{lam:g}]")
            xs.append(lam + (off - 1) * 0.05)
            ys.append(e.value - target)
            es.append(3 * (e.std_error or 0.0))
        ax.errorbar(xs, ys, yerr=es, fmt="o", capsize=3, label=f"{name} - target")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("tilt")
    ax.set_ylabel("deviation (3 SE bars)")
    ax.legend(fontsize=8)
    ax.set_title("candidate-measure checks pass for every tilt")
    return fig


def _fig_nonexist(report, cfg):
    fig, ax = plt.subplots(figsize=(6, 4))
    eps = np.asarray(report.diagnostics["eps"], dtype=float)
    maxima = np.asarray(report.diagnostics["max_wqc"], dtype=float)
    ax.plot(eps, maxima, "o-", label="max over paths of shifted path")
    ax.plot(eps, -np.log(report.params["horizon"] / eps), "--",
            label="-log(T/eps) reference slope")
    ax.set_xscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("eps = T - t")
    ax.set_ylabel("W(t) - drift integral")
    ax.legend(fontsize=8)
    ax.set_title("the would-be shifted Brownian motion dives to -inf")
    return fig


def _fig_tanaka(report, cfg):
    p = report.params
    n_steps = int(round(p["horizon"] / p["base_step"]))
    grid = make_grid(p["horizon"], p["base_step"])
    w0 = sample_brownian(grid, RngStream(report.master_seed, 0), 1)
    x = w0.values[:, 0]
    dx = np.diff(x)
    sgn = sign_convention(x[:-1])
    w = np.concatenate([[0.0], np.cumsum(sgn * dx)])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(grid.times, x, label="X")
    ax.plot(grid.times, -x, label="-X (same identity)")
    ax.plot(grid.times, w, label="W = int sgn(X) dX", lw=0.9)
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    res = report.estimate("residual_mirror_max").value
    ax.set_title(f"sign-SDE pair and mirror (mirror residual {res:.2e})")
    return fig


def _fig_integrability(report, cfg):
    fig, ax = plt.subplots(figsize=(6, 4))
    _hist_panel(
        ax, report.diagnostics["m_eta_histogram"],
        "quadratic variation at explosion", "int X^2 du at eta",
    )
    frac = report.estimate("exploded_fraction").value
    ax.set_title(f"M at explosion (exploded fraction {frac:.3f})")
    return fig


def _fig_feller(report, cfg):
    fig, ax = plt.subplots(figsize=(6, 4))
    for side in ("v_plus", "v_minus"):
        diag = report.diagnostics[side]
        levels = np.asarray(diag["truncation_levels"], dtype=float)
        incs = np.maximum(np.asarray(diag["segment_increments"], dtype=float), 1e-300)
        ax.loglog(levels, incs, "o-", label=side)
    ax.set_xlabel("truncation level")
    ax.set_ylabel("segment increment")
    ax.legend(fontsize=8)
    ax.set_title(f"boundary test: {report.diagnostics['classification']}")
    return fig


def _fig_simulate(report, cfg):
    p = report.params
    fig, ax = plt.subplots(figsize=(7, 4))
    sols = _sample_paths(
        p["drift"], p["x0"], p["horizon"], p["base_step"],
        min(p["xmax"], 1e3), report.master_seed, n=10,
    )
    for sol in sols:
        ax.plot(sol.grid.times, sol.states[:, 0], lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("X")
    ax.set_title(f"sample paths: {p['drift']}")
    return fig
