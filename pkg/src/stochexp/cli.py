"""Command-line front end: scenario selection, seeding, report emission.

Subcommands: ``simulate``, ``feller``, ``corollary2``, ``nonunique``,
``nonexist``, ``tanaka``, ``integrability``.  Exit status 0 when every
verdict passes, 1 on a scientific verdict failure, 2 on operational errors
(bad arguments, unwritable output).

Reports go to --out (or stdout) as csv or json; the json form is
byte-identical across reruns with the same seed when --no-timestamp is given,
whatever --jobs is.  With --plot, figures are rendered next to the report.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import experiments
from .catalog import parse_drift
from .engine import simulate_scalar_batch
from .feller import Diffusion1D, classify_explosion
from .report import Estimate, ScenarioReport
from .sde import SolveConfig

__all__ = ["RunConfig", "parse_args", "dispatch", "emit_report", "main"]

EXIT_PASS = 0
EXIT_VERDICT_FAILURE = 1
EXIT_OPERATIONAL_ERROR = 2

_SCENARIO_IDS = (
    "simulate",
    "feller",
    "corollary2",
    "nonunique",
    "nonexist",
    "tanaka",
    "integrability",
)


@dataclass
class RunConfig:
    """Parsed invocation: scenario id, parameters, seeding and output policy."""

    scenario: str
    master_seed: int = 0
    n_paths: int = 10_000
    base_step: float = 1e-3
    horizon: float = 1.0
    alpha: float = 4.0
    x0: float = 0.0
    xmax: float = 1e6
    drift: str = "pow:4"
    lambdas: list = field(default_factory=lambda: [-1.0, 0.0, 1.0])
    eps_list: list = field(default_factory=lambda: list(experiments.DEFAULT_EPS_LIST))
    fmt: str = "json"
    out: str | None = None
    jobs: int = 1
    timestamp: bool = True
    plot: bool = False

    def solve_config(self) -> SolveConfig:
        return SolveConfig(base_step=self.base_step, explosion_threshold=self.xmax)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochexp",
        description="Monte Carlo laboratory for stochastic exponentials of "
        "explosive diffusions",
    )
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="scenario")

    def common(p, horizon=1.0, n_paths=10_000):
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--paths", type=int, default=n_paths,
                       help=f"number of Monte Carlo paths (default {n_paths})")
        p.add_argument("--dt", type=float, default=1e-3,
                       help="base time step (default 1e-3)")
        p.add_argument("--horizon", type=float, default=horizon,
                       help=f"time horizon T (default {horizon:g})")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker threads for path blocks; results do not depend on it")
        p.add_argument("--format", choices=("csv", "json"), default="json", dest="fmt")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit timing fields for byte-identical reruns")
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the report")

    p = sub.add_parser("simulate", help="batch-simulate a catalog SDE and summarize")
    p.add_argument("--drift", default="pow:4",
                   help="catalog entry: zero, constant:c, linear, pow:a, "
                        "pow-plus-linear:a, tanaka-sign")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--xmax", type=float, default=1e6, help="explosion threshold")
    common(p)

    p = sub.add_parser("feller", help="classify explosion boundaries of a catalog SDE")
    p.add_argument("--drift", default="pow:4")
    p.add_argument("--x0", type=float, default=0.0, help="quadrature reference point")
    common(p)

    p = sub.add_parser("corollary2",
                       help="gap between E[Z(T)] and shifted-SDE survival")
    p.add_argument("--alpha", type=float, default=4.0, help="drift power (> 3)")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--xmax", type=float, default=1e6)
    common(p)

    p = sub.add_parser("nonunique", help="multiple tilts pass the candidate checks")
    p.add_argument("--lambda", dest="lambdas", type=float, action="append",
                   help="tilt value; repeatable (default -1 0 1)")
    common(p, n_paths=10_000)

    p = sub.add_parser("nonexist", help="shifted Brownian path diverges to -inf")
    p.add_argument("--eps", dest="eps_list", type=float, action="append",
                   help="distance to the horizon; repeatable (default 2^-4..2^-14)")
    common(p, n_paths=1000)

    p = sub.add_parser("tanaka", help="sign-SDE weak solution and its mirror")
    common(p)

    p = sub.add_parser("integrability",
                       help="explosion with finite quadratic variation")
    p.add_argument("--alpha", type=float, default=4.0, help="drift power (> 3)")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--xmax", type=float, default=1e6,
                   help="upper explosion threshold of the refinement pair")
    common(p, horizon=20.0)
    return parser


def parse_args(argv) -> RunConfig:
    """Parse an argv list; malformed values exit with status 2 (argparse)."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(scenario=ns.scenario)
    cfg.master_seed = ns.seed
    cfg.n_paths = ns.paths
    cfg.base_step = ns.dt
    cfg.horizon = ns.horizon
    cfg.jobs = ns.jobs
    cfg.fmt = ns.fmt
    cfg.out = ns.out
    cfg.timestamp = not ns.no_timestamp
    cfg.plot = ns.plot
    for attr in ("alpha", "x0", "xmax", "drift"):
        if hasattr(ns, attr):
            setattr(cfg, attr, getattr(ns, attr))
    if getattr(ns, "lambdas", None):
        cfg.lambdas = ns.lambdas
    if getattr(ns, "eps_list", None):
        cfg.eps_list = ns.eps_list

    if cfg.n_paths < 2:
        parser.error("--paths must be at least 2")
    if cfg.base_step <= 0 or cfg.horizon <= 0 or cfg.base_step > cfg.horizon:
        parser.error("--dt must be positive and no larger than --horizon")
    if cfg.jobs < 1:
        parser.error("--jobs must be at least 1")
    if cfg.scenario in ("corollary2", "integrability") and cfg.alpha <= 3:
        parser.error("--alpha must exceed 3 (martingale regime)")
    if cfg.scenario in ("simulate", "feller"):
        try:
            parse_drift(cfg.drift)
        except ValueError as exc:
            parser.error(str(exc))
    if cfg.scenario == "nonexist" and any(
        not 0 < e < cfg.horizon for e in cfg.eps_list
    ):
        parser.error("every --eps must lie in (0, horizon)")
    return cfg


def dispatch(cfg: RunConfig) -> ScenarioReport:
    """Run the selected scenario and return its report."""
    if cfg.scenario == "simulate":
        return _run_simulate(cfg)
    if cfg.scenario == "feller":
        return _run_feller(cfg)
    if cfg.scenario == "corollary2":
        return experiments.run_corollary2(
            alpha=cfg.alpha, x0=cfg.x0, horizon=cfg.horizon, n_paths=cfg.n_paths,
            config=cfg.solve_config(), master_seed=cfg.master_seed, jobs=cfg.jobs,
            timing=cfg.timestamp,
        )
    if cfg.scenario == "nonunique":
        return experiments.run_nonunique(
            lambdas=cfg.lambdas, horizon=cfg.horizon, n_paths=cfg.n_paths,
            master_seed=cfg.master_seed, jobs=cfg.jobs, timing=cfg.timestamp,
        )
    if cfg.scenario == "nonexist":
        return experiments.run_nonexist(
            horizon=cfg.horizon, eps_list=cfg.eps_list, n_paths=cfg.n_paths,
            master_seed=cfg.master_seed, base_step=cfg.base_step, jobs=cfg.jobs,
            timing=cfg.timestamp,
        )
    if cfg.scenario == "tanaka":
        return experiments.run_tanaka(
            horizon=cfg.horizon, n_paths=cfg.n_paths, base_step=cfg.base_step,
            master_seed=cfg.master_seed, jobs=cfg.jobs, timing=cfg.timestamp,
        )
    if cfg.scenario == "integrability":
        return experiments.run_integrability(
            alpha=cfg.alpha, x0=cfg.x0, horizon=cfg.horizon, n_paths=cfg.n_paths,
            config=cfg.solve_config(), master_seed=cfg.master_seed, jobs=cfg.jobs,
            xmax_pair=(1e4, cfg.xmax), timing=cfg.timestamp,
        )
    raise ValueError(f"unknown scenario {cfg.scenario!r}")


def _run_simulate(cfg: RunConfig) -> ScenarioReport:
    import time
    from datetime import datetime, timezone

    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat() if cfg.timestamp else None
    entry = parse_drift(cfg.drift)
    summary = simulate_scalar_batch(
        entry.drift, entry.diffusion, cfg.x0, cfg.horizon, cfg.solve_config(),
        cfg.master_seed, cfg.n_paths, jobs=cfg.jobs,
    )
    completed = (~summary.exploded) & (~summary.step_limited)
    n = summary.n_paths

    def mc(name, vals):
        vals = np.asarray(vals, dtype=float)
        return Estimate(name, float(vals.mean()),
                        float(vals.std(ddof=0) / math.sqrt(n)), n)

    estimates = [
        mc("exploded_fraction", summary.exploded),
        Estimate("step_limited_fraction", float(summary.step_limited.mean())),
        mc("m_total_mean", summary.m_total),
        mc("end_time_mean", summary.end_time),
        Estimate(
            "final_state_mean_completed",
            float(summary.final_state[completed].mean()) if completed.any() else math.nan,
        ),
    ]
    return ScenarioReport(
        scenario="simulate",
        params=dict(drift=cfg.drift, x0=cfg.x0, horizon=cfg.horizon,
                    n_paths=cfg.n_paths, base_step=cfg.base_step, xmax=cfg.xmax),
        master_seed=cfg.master_seed,
        estimates=estimates,
        verdicts=[],
        diagnostics={},
        started_at=started,
        wall_seconds=(time.perf_counter() - t0) if cfg.timestamp else None,
    )


def _run_feller(cfg: RunConfig) -> ScenarioReport:
    import time
    from datetime import datetime, timezone

    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat() if cfg.timestamp else None
    entry = parse_drift(cfg.drift)
    rep = classify_explosion(
        Diffusion1D(b=entry.drift, sigma=entry.diffusion, reference_point=cfg.x0)
    )
    estimates = [
        Estimate("v_plus", rep.v_plus.value),
        Estimate("v_minus", rep.v_minus.value),
        Estimate("explodes_plus", float(rep.v_plus.finite)),
        Estimate("explodes_minus", float(rep.v_minus.finite)),
    ]
    return ScenarioReport(
        scenario="feller",
        params=dict(drift=cfg.drift, reference_point=cfg.x0),
        master_seed=cfg.master_seed,
        estimates=estimates,
        verdicts=[],
        diagnostics={
            "classification": rep.classification,
            "v_plus": rep.v_plus.diagnostics,
            "v_minus": rep.v_minus.diagnostics,
        },
        started_at=started,
        wall_seconds=(time.perf_counter() - t0) if cfg.timestamp else None,
    )


def emit_report(report: ScenarioReport, cfg: RunConfig) -> int:
    """Write the report in the configured format; return the exit status."""
    text = report.to_json() if cfg.fmt == "json" else report.to_csv()
    try:
        if cfg.out is None:
            sys.stdout.write(text)
        else:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"stochexp: cannot write report: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL_ERROR
    return EXIT_PASS if report.all_passed else EXIT_VERDICT_FAILURE


def main(argv=None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else list(argv))
    try:
        report = dispatch(cfg)
    except (experiments.GateError, ValueError) as exc:
        print(f"stochexp: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL_ERROR
    status = emit_report(report, cfg)
    if cfg.plot and status != EXIT_OPERATIONAL_ERROR:
        from . import figures

        try:
            paths = figures.render_figures(report, cfg)
            for p in paths:
                print(f"figure: {p}", file=sys.stderr)
        except OSError as exc:
            print(f"stochexp: cannot write figures: {exc}", file=sys.stderr)
            return EXIT_OPERATIONAL_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
