"""Measure-change machinery: drift shifts, density weights, weighted estimates.

The drift-shift transform sends ``dX = mu dt + sigma dW`` to the SDE satisfied
under the exponential change of measure with density Z_X, namely
``mu + sigma . x``.  Exponential-tilt and budget-truncated exponential weights
are exact Radon-Nikodym densities with unit expectation, so plain (not
self-normalized) weighted means are unbiased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exponential import localized_exponential
from .paths import BrownianPath
from .sde import Functional, PathFunction, SdeSpec, StateFunction

__all__ = [
    "TiltWeight",
    "McEstimate",
    "drift_shift_transform",
    "exponential_tilt_weight",
    "qn_weight",
    "shifted_brownian",
    "weighted_expectation",
]

_Z95 = 1.96


@dataclass(frozen=True)
class TiltWeight:
    """A Radon-Nikodym density evaluated at the horizon for one path."""

    path_index: int
    weight: float

    def __post_init__(self):
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ValueError("weight must be finite and non-negative")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error and 95% interval."""

    mean: float
    std_error: float
    n_paths: int

    @property
    def ci_low(self) -> float:
        return self.mean - _Z95 * self.std_error

    @property
    def ci_high(self) -> float:
        return self.mean + _Z95 * self.std_error


def drift_shift_transform(spec: SdeSpec) -> SdeSpec:
    """New spec with drift ``mu(x,t) + sigma(x,t) . x(t)``; all else unchanged.

    When both coefficients are Markov the result stays Markov (and keeps the
    vectorizability of scalar problems); otherwise a general path functional
    is returned.
    """
    mu, sig = spec.drift, spec.diffusion
    if isinstance(mu, StateFunction) and isinstance(sig, StateFunction):
        if spec.dim == 1:
            shifted = StateFunction(lambda x: mu.fn(x) + sig.fn(x) * x, shape=mu.shape)
        else:
            shifted = StateFunction(lambda x: mu.fn(x) + sig.fn(x) @ x, shape=mu.shape)
    else:
        def _shifted(times, states, t):
            x = np.atleast_1d(np.asarray(states[-1], dtype=float))
            m = np.asarray(mu.evaluate(times, states, t), dtype=float)
            s = np.asarray(sig.evaluate(times, states, t), dtype=float)
            if s.ndim == 0:
                return m + s * x
            return m + s @ x

        shifted = PathFunction(_shifted, shape=mu.shape)
    return SdeSpec(dim=spec.dim, drift=shifted, diffusion=sig, x0=spec.x0)


def exponential_tilt_weight(
    w_path: BrownianPath, lam, horizon: float, path_index: int = 0
) -> TiltWeight:
    """Weight ``exp(lam . W(T) - |lam|^2 T / 2)`` of the constant tilt."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    w_t = w_path.value_at(horizon)  # raises if T is off the grid
    log_w = float(lam @ w_t) - 0.5 * float(lam @ lam) * horizon
    return TiltWeight(path_index=path_index, weight=math.exp(log_w))


def qn_weight(
    x_path, w_path: BrownianPath, budget: float, horizon: float, path_index: int = 0
) -> TiltWeight:
    """Weight ``Z_{X_N}(T)`` of the budget-truncated exponential density."""
    loc = localized_exponential(x_path, w_path, budget)
    return TiltWeight(path_index=path_index, weight=loc.z_at(horizon))


def shifted_brownian(w_path: BrownianPath, x_path) -> BrownianPath:
    """The candidate Brownian motion ``W(t) - int_0^t X(u) du``.

    The time integral uses the left-endpoint rule, the same convention as the
    quadratic-variation budget.
    """
    x = np.asarray(x_path, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != w_path.values.shape:
        raise ValueError("integrand shape does not match the Brownian path")
    steps = w_path.grid.steps()[:, None]
    drift_int = np.vstack([np.zeros((1, w_path.dim)), np.cumsum(x[:-1] * steps, axis=0)])
    return BrownianPath(grid=w_path.grid, values=w_path.values - drift_int, dim=w_path.dim)


def weighted_expectation(samples, weights) -> McEstimate:
    """Density-weighted mean ``sum(w_i s_i) / n`` with its standard error.

    Weights are exact densities (unit expectation), not self-normalized, so
    the estimate is unbiased; ``std_error`` is the population standard
    deviation of ``{w_i s_i}`` over sqrt(n).
    """
    s = np.asarray(samples, dtype=float)
    w = np.asarray(weights, dtype=float)
    if s.shape != w.shape or s.ndim != 1:
        raise ValueError("samples and weights must be 1-d of equal length")
    if s.size < 2:
        raise ValueError("need at least two samples")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    ws = w * s
    n = s.size
    return McEstimate(
        mean=float(ws.mean()),
        std_error=float(ws.std(ddof=0) / math.sqrt(n)),
        n_paths=n,
    )
