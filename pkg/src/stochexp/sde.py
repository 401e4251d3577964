"""Euler-Maruyama solver for possibly explosive, possibly path-dependent SDEs.

The solver integrates ``dX = mu(X, t) dt + sigma(X, t) dW`` on a base grid,
shrinking the local step to ``kappa / (1 + |mu|)`` where the drift is large.
Substeps refine the driving Brownian path by bridge sampling, so the underlying
Brownian motion is the same whatever the adaptive schedule turns out to be.
Simulation halts with status ``exploded`` as soon as the sup-norm of the state
reaches the configured threshold; the running quadratic-variation budget
``m(t) = int_0^t |X|^2 du`` is accumulated by the left-endpoint rule throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .paths import (
    BrownianPath,
    RngStream,
    TimeGrid,
    aligned_position,
    bridge_sample,
    make_grid,
)

__all__ = [
    "Functional",
    "StateFunction",
    "PathFunction",
    "SdeSpec",
    "SolveConfig",
    "SolutionPath",
    "solve",
    "explosion_time_estimate",
    "budget_time",
    "COMPLETED",
    "EXPLODED",
    "STEP_LIMIT_HIT",
]

COMPLETED = "completed"
EXPLODED = "exploded"
STEP_LIMIT_HIT = "step_limit_hit"


class Functional:
    """Progressively measurable coefficient of a functional SDE.

    ``evaluate(times, states, t)`` must depend only on path values at times
    <= t.  ``times`` and ``states`` are parallel sequences (the path so far);
    the output shape is declared by ``shape``: () or (d,) for drifts,
    (d, d) for diffusions.
    """

    shape: tuple = ()

    def evaluate(self, times, states, t):
        raise NotImplementedError


class StateFunction(Functional):
    """Markov coefficient: a function of the current state only.

    ``fn`` should accept numpy arrays elementwise for scalar problems (this is
    what lets the batch engine vectorize it across paths) or a d-vector for
    vector problems.
    """

    def __init__(self, fn, shape=()):
        self.fn = fn
        self.shape = tuple(shape)

    def evaluate(self, times, states, t):
        return self.fn(states[-1])

    def __call__(self, x):
        return self.fn(x)


class PathFunction(Functional):
    """General path functional; ``fn(times, states, t)`` sees the whole past."""

    def __init__(self, fn, shape=()):
        self.fn = fn
        self.shape = tuple(shape)

    def evaluate(self, times, states, t):
        return self.fn(times, states, t)


@dataclass(frozen=True, eq=False)
class SdeSpec:
    """Coefficients and initial value; state and noise share the dimension d."""

    dim: int
    drift: Functional
    diffusion: Functional
    x0: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.shape != (self.dim,):
            raise ValueError(f"x0 shape {x0.shape} does not match dim {self.dim}")
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class SolveConfig:
    """Step-size, explosion and substepping controls.

    ``kappa`` caps the state change per substep near explosion (local step is
    ``min(base_step, kappa / (1 + |drift|))``); ``max_substeps`` bounds the
    substeps spent inside a single base step, beyond which the path is
    reported with status ``step_limit_hit``.
    """

    base_step: float = 1e-3
    explosion_threshold: float = 1e6
    kappa: float = 40.0
    max_substeps: int = 200_000

    def __post_init__(self):
        if not (
            self.base_step > 0
            and self.explosion_threshold > 0
            and self.kappa > 0
            and self.max_substeps >= 1
        ):
            raise ValueError("all SolveConfig fields must be positive")


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """A single trajectory on its (possibly substep-refined) grid."""

    grid: TimeGrid
    states: np.ndarray  # (n_points, d)
    status: str
    eta_estimate: float | None
    m_values: np.ndarray  # running int |X|^2 du, left-endpoint rule
    driving: BrownianPath

    def __post_init__(self):
        if self.status not in (COMPLETED, EXPLODED, STEP_LIMIT_HIT):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == EXPLODED and self.eta_estimate is None:
            raise ValueError("exploded paths need an explosion-time estimate")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _sup_norm(x) -> float:
    return float(np.max(np.abs(x)))


def _as_vector(out, d, what):
    v = np.atleast_1d(np.asarray(out, dtype=float))
    if v.shape != (d,):
        raise ValueError(f"{what} returned shape {v.shape}, expected ({d},)")
    return v


def _as_matrix(out, d, what):
    s = np.asarray(out, dtype=float)
    if s.ndim == 0:
        s = s.reshape(1, 1) if d == 1 else np.eye(d) * float(s)
    elif s.shape == (1,) and d == 1:
        s = s.reshape(1, 1)
    if s.shape != (d, d):
        raise ValueError(f"{what} returned shape {s.shape}, expected ({d}, {d})")
    return s


def solve(
    spec: SdeSpec,
    config: SolveConfig,
    stream: RngStream,
    horizon: float | None = None,
    driving: BrownianPath | None = None,
) -> SolutionPath:
    """Integrate the SDE until the horizon, explosion, or the substep limit.

    When ``driving`` is omitted, base-grid increments come from stream
    positions ``0 .. n_steps*d - 1`` and substep bridge draws from the aligned
    position after them.  When a pre-sampled ``driving`` path is supplied its
    grid becomes the base grid and only substep draws consume the stream
    (sequentially from its current position), so truncating the driving path
    reproduces the original trajectory up to the truncation time exactly.
    """
    d = spec.dim
    if driving is not None:
        if driving.dim != d:
            raise ValueError("driving path dimension does not match the spec")
        base = driving.grid
        base_incr = driving.increments()
        tail_stream = stream
    else:
        if horizon is None or horizon <= 0:
            raise ValueError("a positive horizon is required without a driving path")
        base = make_grid(horizon, config.base_step)
        z = stream.normals(base.n_steps * d).reshape(base.n_steps, d)
        base_incr = z * np.sqrt(base.steps())[:, None]
        tail_stream = RngStream(
            stream.master_seed,
            stream.path_index,
            position=aligned_position(base.n_steps * d),
        )

    x = spec.x0.copy()
    times = [0.0]
    states = [x]
    m_values = [0.0]
    w_values = [np.zeros(d)]
    status = COMPLETED
    eta = None

    def record(t, xv, mv, wv):
        # Substeps near explosion can be shorter than one float ulp of the
        # clock; a point that does not advance the representable time
        # overwrites the previous record (accumulators keep full precision).
        if t <= times[-1]:
            states[-1] = xv
            m_values[-1] = mv
            w_values[-1] = wv
        else:
            times.append(t)
            states.append(xv)
            m_values.append(mv)
            w_values.append(wv)

    if _sup_norm(x) >= config.explosion_threshold:
        # Degenerate start: already beyond the threshold.
        grid = TimeGrid(times=np.array([0.0]), horizon=base.horizon)
        w = BrownianPath(grid=grid, values=np.zeros((1, d)), dim=d)
        return SolutionPath(
            grid=grid,
            states=np.array(states),
            status=EXPLODED,
            eta_estimate=0.0,
            m_values=np.array([0.0]),
            driving=w,
        )

    h_steps = base.steps()
    done = False
    for k in range(base.n_steps):
        h = float(h_steps[k])
        t0 = float(base.times[k])
        w_step_start = w_values[-1]
        # Bridge arithmetic runs in step-relative coordinates (v = W - W(t_k)),
        # matching the batch engine operation for operation.
        v = np.zeros(d)
        v_target = base_incr[k]
        u = 0.0
        n_sub = 0
        while True:
            mu = _as_vector(spec.drift.evaluate(times, states, t0 + u), d, "drift")
            rem = h - u
            want = config.kappa / (1.0 + _sup_norm(mu))
            last = want >= rem
            if last:
                delta = rem
                v_next = v_target
            else:
                n_sub += 1
                if n_sub > config.max_substeps:
                    status = STEP_LIMIT_HIT
                    done = True
                    break
                delta = want
                z = tail_stream.normals(d)
                v_next = bridge_sample(v, v_target, rem, delta, z)
            sig = _as_matrix(spec.diffusion.evaluate(times, states, t0 + u), d, "diffusion")
            dw = v_next - v
            m_next = m_values[-1] + float(np.sum(x * x)) * delta
            x = x + mu * delta + sig @ dw
            u = h if last else u + delta
            v = v_next
            record(
                float(base.times[k + 1]) if last else t0 + u,
                x,
                m_next,
                w_step_start + v_next,
            )
            if _sup_norm(x) >= config.explosion_threshold:
                status = EXPLODED
                eta = times[-1]
                done = True
                break
            if last:
                break
        if done:
            break

    grid = TimeGrid(times=np.array(times), horizon=base.horizon)
    w_path = BrownianPath(grid=grid, values=np.array(w_values), dim=d)
    return SolutionPath(
        grid=grid,
        states=np.array(states),
        status=status,
        eta_estimate=eta,
        m_values=np.array(m_values),
        driving=w_path,
    )


def explosion_time_estimate(partial: SolutionPath, drift_power: float) -> float:
    """Extrapolated blow-up time for a path stopped at the explosion threshold.

    For drift growing like ``x**alpha`` the deterministic tail beyond the last
    recorded state ``X`` takes time ``X**(1-alpha) / (alpha-1)``.
    """
    if partial.status != EXPLODED:
        raise ValueError("explosion_time_estimate needs an exploded path")
    if drift_power <= 1:
        raise ValueError("drift_power must exceed 1")
    x_last = _sup_norm(partial.final_state())
    t_last = float(partial.grid.times[-1])
    return t_last + x_last ** (1.0 - drift_power) / (drift_power - 1.0)


def budget_time(solution: SolutionPath, budget: float) -> float:
    """First time the running quadratic variation reaches ``budget``.

    Linearly interpolated inside the crossing step (m is piecewise linear in
    time under the left-endpoint rule); ``math.inf`` when the budget is never
    reached on the simulated horizon.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    m = solution.m_values
    if m[-1] < budget:
        return math.inf
    k = int(np.searchsorted(m, budget, side="left"))
    t = solution.grid.times
    if m[k] == budget:
        return float(t[k])
    frac = (budget - m[k - 1]) / (m[k] - m[k - 1])
    return float(t[k - 1] + frac * (t[k] - t[k - 1]))
