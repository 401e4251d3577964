"""Time grids, counter-based random streams and Brownian path sampling.

All randomness in the package flows through :class:`RngStream`, a counter-based
(Philox) stream keyed by ``(master_seed, path_index)``.  Distinct key pairs give
statistically independent streams, and every draw is a pure function of
``(master_seed, path_index, position)``, so any path of any simulation can be
replayed bit-identically regardless of scheduling or batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

__all__ = [
    "TimeGrid",
    "RngStream",
    "BrownianPath",
    "make_grid",
    "sample_brownian",
    "refine_brownian",
    "bridge_sample",
    "aligned_position",
]

# Generator.random can return exactly 0.0 (probability 2**-53 per draw) and
# ndtri(0) is -inf; clamp to the smallest uniform that ndtri maps to a finite
# quantile without disturbing any other draw.
_MIN_UNIFORM = 5.6e-17

# Philox emits 4 doubles per counter increment, so constant-time seeking is
# only possible to positions that are multiples of 4.
_PHILOX_BLOCK = 4


def aligned_position(pos: int) -> int:
    """Round a stream position up to the next seekable (multiple-of-4) one."""
    return _PHILOX_BLOCK * ((int(pos) + _PHILOX_BLOCK - 1) // _PHILOX_BLOCK)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time points starting at 0, ending at ``horizon``."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("grid needs at least one time point")
        if t[0] != 0.0:
            raise ValueError("grid must start at 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("grid times must be strictly increasing")
        if t[-1] > self.horizon + 1e-12:
            raise ValueError("last grid time exceeds the horizon")

    @property
    def n_points(self) -> int:
        return self.times.size

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    def steps(self) -> np.ndarray:
        """Consecutive gaps ``times[k+1] - times[k]``."""
        return np.diff(self.times)


def make_grid(horizon: float, base_step: float) -> TimeGrid:
    """Uniform grid of step ``base_step`` on [0, horizon].

    The final point is exactly ``horizon``; when ``base_step`` does not divide
    the horizon the last step is the (shorter) remainder.
    """
    if not (horizon > 0 and base_step > 0):
        raise ValueError("horizon and base_step must be positive")
    if base_step > horizon:
        raise ValueError("base_step must not exceed the horizon")
    n_full = int(math.floor(horizon / base_step + 1e-9))
    times = base_step * np.arange(n_full + 1)
    if times[-1] < horizon - 1e-9 * base_step:
        times = np.append(times, horizon)
    else:
        times[-1] = horizon
    return TimeGrid(times=times, horizon=float(horizon))


class RngStream:
    """Counter-based uniform/normal stream for a single simulation path.

    Output ``i`` of the stream is a pure function of
    ``(master_seed, path_index, i)``.  Normals are produced by applying the
    inverse normal CDF to the stream's uniforms, one uniform per normal, so
    stream positions and draw counts coincide.
    """

    def __init__(self, master_seed: int, path_index: int = 0, position: int = 0):
        if path_index < 0:
            raise ValueError("path_index must be non-negative")
        self.master_seed = int(master_seed)
        self.path_index = int(path_index)
        self.position = 0
        self._gen = Generator(Philox(key=[self.master_seed, self.path_index]))
        if position:
            self.seek(position)

    def seek(self, position: int) -> None:
        """Jump to an absolute stream position (cheap when divisible by 4)."""
        position = int(position)
        if position < 0:
            raise ValueError("position must be non-negative")
        bg = Philox(key=[self.master_seed, self.path_index])
        bg.advance(position // _PHILOX_BLOCK)
        self._gen = Generator(bg)
        self.position = position - position % _PHILOX_BLOCK
        rem = position % _PHILOX_BLOCK
        if rem:
            self.uniforms(rem)

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms in (0, 1)."""
        u = self._gen.random(int(n))
        self.position += int(n)
        return np.maximum(u, _MIN_UNIFORM)

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard normals via the inverse-CDF transform."""
        return ndtri(self.uniforms(n))


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """A d-dimensional Brownian trajectory sampled on a grid.

    ``values`` has shape ``(grid.n_points, dim)`` with ``values[0] = 0``.
    """

    grid: TimeGrid
    values: np.ndarray
    dim: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.n_points, self.dim):
            raise ValueError(
                f"values shape {v.shape} does not match grid/dim "
                f"({self.grid.n_points}, {self.dim})"
            )

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def value_at(self, t: float) -> np.ndarray:
        """Value at a grid time ``t`` (exact membership required)."""
        k = int(np.searchsorted(self.grid.times, t))
        if k >= self.grid.n_points or self.grid.times[k] != t:
            raise ValueError(f"time {t} is not a grid point")
        return self.values[k]


def sample_brownian(grid: TimeGrid, stream: RngStream, dim: int) -> BrownianPath:
    """Sample a Brownian path on ``grid`` from ``stream``.

    Step ``k`` consumes stream positions ``k*dim .. (k+1)*dim - 1``, which is
    the layout the SDE solver relies on when it shares a stream.
    """
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    n = grid.n_steps
    z = stream.normals(n * dim).reshape(n, dim)
    incr = z * np.sqrt(grid.steps())[:, None]
    values = np.vstack([np.zeros((1, dim)), np.cumsum(incr, axis=0)])
    return BrownianPath(grid=grid, values=values, dim=dim)


def bridge_sample(w_left, w_right, gap, offset, z):
    """Brownian bridge draw at ``offset`` into a pinned interval of length ``gap``.

    Works elementwise on scalars or arrays; ``z`` is a standard normal.
    """
    frac = offset / gap
    return w_left + (w_right - w_left) * frac + np.sqrt(offset * (gap - offset) / gap) * z


def refine_brownian(path: BrownianPath, fine: TimeGrid, stream: RngStream) -> BrownianPath:
    """Refine a Brownian path onto a finer grid by bridge interpolation.

    ``fine`` must contain every time of the original grid exactly.  Original
    points keep their values; new points are filled left to right, each drawn
    from the bridge between the last filled point and the nearest original
    point to its right.
    """
    coarse_times = path.grid.times
    fine_times = fine.times
    pos = np.searchsorted(fine_times, coarse_times)
    if np.any(pos >= fine_times.size) or np.any(fine_times[pos] != coarse_times):
        raise ValueError("refined grid must contain all original grid times")
    known = np.zeros(fine_times.size, dtype=bool)
    known[pos] = True
    values = np.empty((fine_times.size, path.dim))
    values[pos] = path.values
    right_anchor = np.empty(fine_times.size, dtype=int)
    nxt = -1
    for j in range(fine_times.size - 1, -1, -1):
        if known[j]:
            nxt = j
        right_anchor[j] = nxt
    for j in range(fine_times.size):
        if known[j]:
            continue
        r = right_anchor[j]
        if r < 0:
            raise ValueError("refined grid extends beyond the original horizon")
        gap = fine_times[r] - fine_times[j - 1]
        off = fine_times[j] - fine_times[j - 1]
        z = stream.normals(path.dim)
        values[j] = bridge_sample(values[j - 1], values[r], gap, off, z)
    return BrownianPath(grid=fine, values=values, dim=path.dim)
