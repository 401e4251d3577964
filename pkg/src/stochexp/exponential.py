"""Stochastic exponentials computed in log space.

``Z(t) = exp(int_0^t X dW - 1/2 int_0^t |X|^2 du)`` with left-endpoint Ito
sums on the path grid.  Z is only materialized at output boundaries; near
explosion the integrand is huge and the log representation is what keeps the
arithmetic finite.  Two conventions from the underlying theory are encoded:

* integrals freeze at a stop time (a grid time, e.g. the explosion time);
* if the quadratic-variation budget diverges before the stop time
  (operationally: crosses ``divergence_budget``), Z is reported as exactly 0
  from the crossing time on (``zero_flag``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import BrownianPath, TimeGrid

__all__ = [
    "ExponentialPath",
    "stochastic_exponential",
    "localized_exponential",
    "DEFAULT_DIVERGENCE_BUDGET",
]

DEFAULT_DIVERGENCE_BUDGET = 1e6


@dataclass(frozen=True, eq=False)
class ExponentialPath:
    """Log-space trajectory of a stochastic exponential on a grid.

    ``log_z[k] = ito_integral[k] - m_integral[k] / 2`` holds at every index;
    after ``stop_time`` all three are constant.  When ``zero_flag`` is set the
    budget diverged at ``zero_time`` and Z is exactly 0 from there on.
    """

    grid: TimeGrid
    log_z: np.ndarray
    ito_integral: np.ndarray
    m_integral: np.ndarray
    zero_flag: bool
    stop_time: float
    zero_time: float | None = None

    def z_values(self) -> np.ndarray:
        """Materialized Z on the grid, honoring the zero convention."""
        z = np.exp(self.log_z)
        if self.zero_flag:
            z = np.where(self.grid.times >= self.zero_time, 0.0, z)
        return z

    def z_at(self, t: float) -> float:
        """Z at a grid time."""
        k = int(np.searchsorted(self.grid.times, t))
        if k >= self.grid.n_points or self.grid.times[k] != t:
            raise ValueError(f"time {t} is not a grid point")
        return float(self.z_values()[k])

    def z_terminal(self) -> float:
        return float(self.z_values()[-1])


def _normalize_integrand(x_path, grid: TimeGrid) -> np.ndarray:
    x = np.asarray(x_path, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != grid.n_points:
        raise ValueError(
            f"integrand has {x.shape[0]} points but the grid has {grid.n_points}"
        )
    return x


def _increment_arrays(x, w_path: BrownianPath):
    if x.shape[1] != w_path.dim:
        raise ValueError("integrand and Brownian path dimensions differ")
    dw = w_path.increments()
    steps = w_path.grid.steps()
    ito_inc = np.sum(x[:-1] * dw, axis=1)
    m_inc = np.sum(x[:-1] * x[:-1], axis=1) * steps
    return ito_inc, m_inc


def _freeze_after(arr: np.ndarray, idx: int) -> np.ndarray:
    out = arr.copy()
    out[idx + 1 :] = arr[idx]
    return out


def stochastic_exponential(
    x_path,
    w_path: BrownianPath,
    stop_time: float = math.inf,
    divergence_budget: float = DEFAULT_DIVERGENCE_BUDGET,
) -> ExponentialPath:
    """Z of the integrand along ``w_path``, frozen at ``stop_time``.

    Steps are included while they end at or before ``stop_time`` (stopping is
    grid-resolved; a partial step beyond the last grid point before
    ``stop_time`` is never invented).  If the running budget crosses
    ``divergence_budget`` strictly before ``stop_time``, the zero convention
    kicks in at the crossing grid time.
    """
    if stop_time < 0:
        raise ValueError("stop_time must be non-negative")
    grid = w_path.grid
    x = _normalize_integrand(x_path, grid)
    ito_inc, m_inc = _increment_arrays(x, w_path)
    active = grid.times[1:] <= stop_time
    ito = np.concatenate([[0.0], np.cumsum(ito_inc * active)])
    m = np.concatenate([[0.0], np.cumsum(m_inc * active)])

    zero_flag = False
    zero_time = None
    crossed = np.flatnonzero(m >= divergence_budget)
    if crossed.size:
        idx = int(crossed[0])
        if grid.times[idx] < stop_time:
            zero_flag = True
            zero_time = float(grid.times[idx])
            ito = _freeze_after(ito, idx)
            m = _freeze_after(m, idx)

    return ExponentialPath(
        grid=grid,
        log_z=ito - 0.5 * m,
        ito_integral=ito,
        m_integral=m,
        zero_flag=zero_flag,
        stop_time=float(stop_time),
        zero_time=zero_time,
    )


def localized_exponential(x_path, w_path: BrownianPath, budget: float) -> ExponentialPath:
    """Z of the budget-truncated integrand ``X_N``.

    ``X_N`` drops the integrand from the first grid time at which the running
    budget reaches ``budget`` (strictly before which all steps are whole, so
    the pathwise identity ``Z_X(t ^ tau_N) = Z_{X_N}(t)`` holds exactly on the
    grid).  The truncated budget never diverges, so the zero convention never
    applies here; the overshoot of the final included increment above
    ``budget`` is bounded by one step's contribution.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    grid = w_path.grid
    x = _normalize_integrand(x_path, grid)
    ito_inc, m_inc = _increment_arrays(x, w_path)
    m_full = np.concatenate([[0.0], np.cumsum(m_inc)])
    # step k survives iff the budget is not yet reached at its start
    active = m_full[:-1] < budget
    ito = np.concatenate([[0.0], np.cumsum(ito_inc * active)])
    m = np.concatenate([[0.0], np.cumsum(m_inc * active)])
    crossed = np.flatnonzero(m_full >= budget)
    tau = float(grid.times[crossed[0]]) if crossed.size else math.inf
    return ExponentialPath(
        grid=grid,
        log_z=ito - 0.5 * m,
        ito_integral=ito,
        m_integral=m,
        zero_flag=False,
        stop_time=tau,
    )
