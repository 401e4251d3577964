"""Feller's test for explosions of one-dimensional time-homogeneous diffusions.

For ``dX = b(X) dt + sigma(X) dW`` the diffusion can reach +inf (resp. -inf)
in finite time with positive probability iff the nested integral

    v(+-inf) = int_c^{+-inf} s'(y) [ int_c^y 2 / (s'(z) sigma(z)^2) dz ] dy,
    s'(x) = exp(-int_c^x 2 b / sigma^2),

is finite on that side.  Only the *difference* of scale exponents enters the
integrand; it is integrated locally around each outer node y (the absolute
exponent can exceed 1e29, where double rounding would destroy differences).
The mass of the inner integral concentrates where the exponent is within a
fixed window below its value at y; that window is located explicitly and
integrated on Gauss-Legendre panels graded to a few exponent units each.  The
improper outer integral is truncated along the geometric schedule ``c + 2^k``
and finite/infinite is a numerical judgment made from the decay of the
segment increments, with the truncation levels and tail estimates reported; a
divergence is never silently converted into a large number.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

__all__ = [
    "Diffusion1D",
    "BoundaryLimit",
    "FellerReport",
    "DomainError",
    "IndeterminateExplosionTest",
    "scale_density",
    "feller_v",
    "classify_explosion",
    "NO_EXPLOSION",
    "EXPLODES_PLUS",
    "EXPLODES_MINUS",
    "EXPLODES_BOTH",
]

NO_EXPLOSION = "no_explosion"
EXPLODES_PLUS = "explodes_plus"
EXPLODES_MINUS = "explodes_minus"
EXPLODES_BOTH = "explodes_both"

_MAX_LEVEL = 20  # truncation schedule |x - c| = 2^0 .. 2^20
_DIVERGENCE_BUDGET = 1e12
_DECAY_RATIO = 0.6  # segment increments at or below this: convergent tail
_FLAT_RATIO = 0.95  # segment increments at or above this: divergence
_EXP_OVERFLOW = 700.0
# Inner-integrand mass more than e^-120 below the right endpoint is dropped;
# relative to the retained mass the neglected piece is < 1e-25 even across
# the full 2^20 domain.
_TRIM_WINDOW = 120.0
_GL15_NODES, _GL15_WEIGHTS = np.polynomial.legendre.leggauss(15)
_GL7_NODES, _GL7_WEIGHTS = np.polynomial.legendre.leggauss(7)


class DomainError(ValueError):
    """The diffusion coefficient vanishes somewhere on the probed interval."""


class IndeterminateExplosionTest(RuntimeError):
    """The truncation schedule ended without a finite/infinite decision."""


class _Overflow(Exception):
    """Internal signal: the inner integrand left double range."""


@dataclass(frozen=True)
class Diffusion1D:
    """Scalar time-homogeneous coefficients with a quadrature reference point."""

    b: callable
    sigma: callable
    reference_point: float = 0.0


@dataclass(frozen=True)
class BoundaryLimit:
    """v at one boundary: value, finiteness verdict and quadrature diagnostics.

    ``finite`` is None when the schedule was exhausted inconclusively.
    ``diagnostics`` records truncation levels, segment increments, increment
    ratios, the estimated geometric tail and any notes.
    """

    value: float
    finite: bool | None
    diagnostics: dict = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class FellerReport:
    """Both boundary limits and the resulting explosion classification."""

    v_plus: BoundaryLimit
    v_minus: BoundaryLimit
    classification: str


def _quiet_quad(fn, a, b, epsabs, epsrel, limit=200):
    """quadpack without IntegrationWarning noise; convergence is judged by
    the caller's own increment diagnostics, not quadpack's heuristics."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(fn, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
    return val


class _ScaleExponent:
    """Cached antiderivative B(x) = int_anchor^x 2 b / sigma^2 on adaptive knots.

    New evaluation points integrate from the nearest cached knot, so repeated
    sweeps share an adaptive mesh instead of re-integrating from the anchor
    every time.
    """

    def __init__(self, diff: Diffusion1D, anchor: float | None = None):
        self._diff = diff
        start = diff.reference_point if anchor is None else anchor
        self._knots = [float(start)]
        self._values = [0.0]

    def _integrand(self, y: float) -> float:
        s2 = self._diff.sigma(y) ** 2
        if not s2 > 0:
            raise DomainError(f"sigma vanishes at x={y}")
        return 2.0 * self._diff.b(y) / s2

    def __call__(self, x: float) -> float:
        x = float(x)
        j = bisect.bisect_left(self._knots, x)
        if j < len(self._knots) and self._knots[j] == x:
            return self._values[j]
        # Relative tolerance keeps huge exponents cheap; the absolute floor
        # covers the short in-window increments where accuracy matters.
        candidates = []
        if j > 0:
            candidates.append(j - 1)
        if j < len(self._knots):
            candidates.append(j)
        near = min(candidates, key=lambda i: abs(self._knots[i] - x))
        val = self._values[near] + _quiet_quad(
            self._integrand, self._knots[near], x, epsabs=1e-14, epsrel=1e-12, limit=100
        )
        self._knots.insert(j, x)
        self._values.insert(j, val)
        return val


def _check_sigma(diff: Diffusion1D, a: float, b: float, n_probe: int = 65) -> None:
    """Probe sigma across [a, b]; quadrature nodes are open, so an endpoint
    zero would otherwise slip through as a silently divergent integral."""
    for z in np.linspace(a, b, n_probe):
        if not diff.sigma(float(z)) ** 2 > 0:
            raise DomainError(f"sigma vanishes at x={float(z)}")


def scale_density(diff: Diffusion1D, x: float, _cache: _ScaleExponent | None = None) -> float:
    """Scale-function derivative ``s'(x) = exp(-int_c^x 2 b / sigma^2)``."""
    _check_sigma(diff, diff.reference_point, x)
    cache = _cache if _cache is not None else _ScaleExponent(diff)
    return math.exp(-cache(x))


def _reflected(diff: Diffusion1D) -> Diffusion1D:
    """x -> -x pushforward; the minus boundary becomes the plus boundary."""
    return Diffusion1D(
        b=lambda x: -diff.b(-x),
        sigma=lambda x: diff.sigma(-x),
        reference_point=-diff.reference_point,
    )


class _VecCoeffs:
    """Vectorized views of b and sigma^2.

    Array-aware callables pass through; callables that return one scalar for
    three distinct probe points are treated as constants; anything else goes
    through np.vectorize (correct but slow).
    """

    def __init__(self, diff: Diffusion1D):
        self.b = self._lift(diff.b)
        sigma = self._lift(diff.sigma)
        self._sigma = sigma

    @staticmethod
    def _lift(fn):
        try:
            out = np.asarray(fn(np.array([0.5, 1.5])))
            if out.shape == (2,):
                return fn
        except Exception:
            pass
        try:
            vals = {float(fn(p)) for p in (0.7, 1.9, -1.3)}
            if len(vals) == 1:
                const = vals.pop()
                return lambda x: np.full(np.shape(x), const)
        except Exception:
            pass
        return np.vectorize(fn, otypes=[float])

    def sigma_sq(self, x):
        s2 = np.asarray(self._sigma(x), dtype=float) ** 2
        if np.any(~(s2 > 0)):
            bad = np.asarray(x)[~(s2 > 0)]
            raise DomainError(f"sigma vanishes near x={float(np.atleast_1d(bad)[0])}")
        return s2

    def ratio(self, x):
        """2 b / sigma^2, elementwise."""
        return 2.0 * np.asarray(self.b(x), dtype=float) / self.sigma_sq(x)


def _window_integral(vec, y, lo, e_lo):
    """int_lo^y 2 exp(expo(z)) / sigma(z)^2 dz on graded Gauss-Legendre panels.

    ``expo`` is chained backward from expo(y) = 0 with GL-7 gap integrals, so
    each value is a short local integral, never a difference of huge numbers.
    Panels are sized so the exponent moves ~3 units per panel when the
    exponent is close to linear over the window; the realized per-panel moves
    are verified and None is returned (caller falls back to adaptive
    quadrature) when the grading assumption fails.
    """
    n_panels = int(np.clip(math.ceil(abs(e_lo) / 3.0), 4, 96))
    edges = np.linspace(lo, y, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL15_NODES[None, :]  # (n, 15)

    # Descending evaluation chain: per panel (right to left) its nodes in
    # descending order, then its left edge.
    pts = np.empty(n_panels * 16)
    for j in range(n_panels):
        blk = (n_panels - 1 - j) * 16
        pts[blk : blk + 15] = nodes[j, ::-1]
        pts[blk + 15] = edges[j]
    prev = np.concatenate([[y], pts[:-1]])
    gmid = 0.5 * (prev + pts)
    ghalf = 0.5 * (prev - pts)
    gl_points = gmid[:, None] + ghalf[:, None] * _GL7_NODES[None, :]
    ratio_vals = vec.ratio(gl_points.ravel()).reshape(gl_points.shape)
    gaps = (ratio_vals @ _GL7_WEIGHTS) * ghalf
    expo_pts = -np.cumsum(gaps)

    # Verify grading: each panel's exponent move must stay a few units.
    edge_expo = expo_pts[15::16]  # expo at left edges, right-to-left
    panel_moves = np.diff(np.concatenate([[0.0], edge_expo]))
    if np.any(np.abs(panel_moves) > 12.0):
        return None
    if np.any(expo_pts > 1e-6):
        return None  # exponent not monotone after all

    total = 0.0
    for j in range(n_panels):
        blk = (n_panels - 1 - j) * 16
        e = expo_pts[blk : blk + 15][::-1]
        zs = nodes[j]
        g = 2.0 * np.exp(e) / vec.sigma_sq(zs)
        total += half[j] * float(g @ _GL15_WEIGHTS)
    return total


def _fallback_inner(diff, expo, c, y, inner_rtol, upper=None):
    """Adaptive quadrature over [c, upper or y] (non-monotone exponents)."""

    def g(z):
        s2 = diff.sigma(z) ** 2
        if not s2 > 0:
            raise DomainError(f"sigma vanishes at x={z}")
        arg = expo(z)
        if arg > _EXP_OVERFLOW:
            raise _Overflow
        return 2.0 * math.exp(arg) / s2

    try:
        return _quiet_quad(g, c, upper if upper is not None else y,
                           epsabs=0.0, epsrel=max(inner_rtol, 1e-9), limit=100)
    except _Overflow:
        return math.inf


def _is_nondecreasing(vals):
    return bool(np.all(np.diff(vals) >= -1e-9 * (1.0 + np.abs(vals[:-1]))))


def _monotone_inner(diff, vec, y, left, e_left, inner_rtol):
    """Window-trimmed inner integral over [left, y] for a nondecreasing
    exponent; None when the panel grading verification rejects it."""
    lo = left
    e_lo = e_left
    if e_left < -_TRIM_WINDOW:
        # Walk the window edge in from the linearized estimate until the
        # neglected exponent is safely below the window; short spans near y,
        # so the y-anchored cache is exact where it matters.
        expo = _ScaleExponent(diff, anchor=y)
        slope = max(float(vec.ratio(np.array([y]))[0]), 0.0)
        guess = y - 1.5 * _TRIM_WINDOW / slope if slope > 0 else left
        guess = max(left, guess)
        e_lo = None
        for _ in range(60):
            e_g = expo(guess)
            if e_g <= -0.75 * _TRIM_WINDOW or guess <= left:
                lo, e_lo = guess, e_g
                break
            guess = max(left, y - 2.0 * (y - guess))
        if e_lo is None:
            lo, e_lo = left, expo(left)
    return _window_integral(vec, y, lo, e_lo)


def _speed_weighted_inner(diff, vec, y, inner_rtol, gcache):
    """h(y) = int_c^y 2 exp(B(z) - B(y)) / sigma(z)^2 dz, computed stably.

    Returns math.inf when the exponent overflows (strong inward drift makes
    the product blow up; the segment, and hence v, is then infinite).
    Landscape decisions (overflow, monotonicity, dip location) use the shared
    reference-anchored cache ``gcache``: its rounding noise scales with the
    huge absolute exponent but the thresholds compared against are far
    coarser.  Accurate exponent differences near y always come from a local,
    y-anchored integration.  A single exponent dip (reference point inside an
    inward-drift pocket) is split off and integrated adaptively, with the
    monotone remainder handled by the trimmed-window quadrature.
    """
    c = diff.reference_point
    if y == c:
        return 0.0
    b_y = gcache(y)
    probes = np.linspace(c, y, 8)[:-1]
    gvals = np.array([gcache(p) for p in probes])
    if gvals.max() - b_y > _EXP_OVERFLOW:
        return math.inf
    land = np.append(gvals, b_y)
    if _is_nondecreasing(land):
        win = _monotone_inner(diff, vec, y, c, float(gvals[0] - b_y), inner_rtol)
        if win is not None:
            return win
        return _fallback_inner(diff, _ScaleExponent(diff, anchor=y), c, y, inner_rtol)

    # Split at the probe-level exponent minimum: left of it sits the dip,
    # right of it the landscape should rise toward y.
    z_star = float(probes[int(np.argmin(gvals))])
    rprobes = np.linspace(z_star, y, 8)[:-1]
    rvals = np.array([gcache(p) for p in rprobes])
    if z_star > c and _is_nondecreasing(np.append(rvals, b_y)):
        expo = _ScaleExponent(diff, anchor=y)
        left_part = _fallback_inner(diff, expo, c, y, inner_rtol, upper=z_star)
        if math.isinf(left_part):
            return math.inf
        right_part = _monotone_inner(
            diff, vec, y, z_star, float(rvals[0] - b_y), inner_rtol
        )
        if right_part is not None:
            return left_part + right_part
    return _fallback_inner(diff, _ScaleExponent(diff, anchor=y), c, y, inner_rtol)


def _segment_integral(diff, vec, lo, hi, inner_rtol, gcache, seg_abs=0.0):
    _check_sigma(diff, lo, hi)
    h_vals = {}

    def h(y):
        val = _speed_weighted_inner(diff, vec, y, inner_rtol, gcache)
        if math.isinf(val):
            h_vals["overflow"] = True
            return 1e308
        return val

    # limit=30 bounds the cost when h carries numerical noise near the
    # segment tolerance; smooth cases converge in one or two panels anyway
    val = _quiet_quad(h, lo, hi, epsabs=seg_abs, epsrel=1e-8, limit=30)
    return val, h_vals.get("overflow", False)


def feller_v(diff: Diffusion1D, direction: str, tolerance: float = 1e-9) -> BoundaryLimit:
    """v at the +inf (``direction="plus"``) or -inf boundary.

    The improper integral is accumulated over geometric segments up to
    ``c + 2^20``.  It is declared finite when the segment increments decay
    geometrically and the estimated tail drops below ``tolerance`` relative
    (or, at schedule exhaustion with decaying increments, the tail estimate
    is added and flagged as extrapolated); it is declared infinite when the
    partial values exceed the divergence budget, when the log-space integrand
    overflows, or when the increments stop decaying.  Anything else is an
    indeterminate outcome, reported as such.
    """
    if direction not in ("plus", "minus"):
        raise ValueError("direction must be 'plus' or 'minus'")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if direction == "minus":
        limit = feller_v(_reflected(diff), "plus", tolerance)
        limit.diagnostics["direction"] = "minus"
        return limit

    vec = _VecCoeffs(diff)
    gcache = _ScaleExponent(diff)
    inner_rtol = float(np.clip(tolerance / 10.0, 3e-9, 1e-7))
    c = diff.reference_point
    levels, increments, ratios = [], [], []
    total = 0.0
    lo = c
    for k in range(_MAX_LEVEL + 1):
        hi = c + 2.0**k
        # Segment accuracy only needs to serve the running total: late (tiny)
        # segments may stop at an absolute target instead of chasing relative
        # precision of a negligible contribution.
        seg_abs = 0.05 * tolerance * total
        seg, overflow = _segment_integral(diff, vec, lo, hi, inner_rtol, gcache, seg_abs)
        levels.append(hi - c)
        increments.append(seg)
        if overflow or not math.isfinite(seg):
            return _limit_infinite(levels, increments, ratios, note="integrand overflow")
        total += seg
        if k >= 1:
            prev = increments[-2]
            ratios.append(seg / prev if prev > 0 else (0.0 if seg == 0 else math.inf))
        if total > _DIVERGENCE_BUDGET:
            return _limit_infinite(levels, increments, ratios, note="divergence budget exceeded")
        if seg == 0.0 and total > 0.0:
            return _limit_finite(total, 0.0, levels, increments, ratios)
        if len(ratios) >= 3:
            recent = ratios[-3:]
            if max(recent) <= _DECAY_RATIO:
                rho = max(recent)
                tail = seg * rho / (1.0 - rho)
                if tail <= tolerance * max(total, np.finfo(float).tiny):
                    return _limit_finite(total + tail, tail, levels, increments, ratios)
            if min(recent) >= _FLAT_RATIO and k >= 4:
                return _limit_infinite(levels, increments, ratios, note="non-decaying increments")
            # Stably geometric decay: extrapolate the tail once it is far
            # below the total instead of marching the schedule to exhaustion.
            if (
                k >= 8
                and max(recent) <= _DECAY_RATIO
                and max(recent) - min(recent) <= 0.03 * max(recent)
                and len(ratios) >= 4
                and abs(ratios[-4] - recent[0]) <= 0.03 * max(recent)
            ):
                rho = sum(recent) / 3.0
                tail = seg * rho / (1.0 - rho)
                if tail <= 1e-3 * total:
                    return _limit_finite(
                        total + tail, tail, levels, increments, ratios,
                        note="tail extrapolated",
                    )
        lo = hi
    if len(ratios) >= 3 and max(ratios[-3:]) <= _DECAY_RATIO:
        rho = max(ratios[-3:])
        tail = increments[-1] * rho / (1.0 - rho)
        return _limit_finite(
            total + tail, tail, levels, increments, ratios, note="tail extrapolated"
        )
    return BoundaryLimit(
        value=math.nan,
        finite=None,
        diagnostics=_diag(levels, increments, ratios, note="schedule exhausted"),
    )


def _diag(levels, increments, ratios, tail=None, note=None):
    d = {
        "truncation_levels": list(levels),
        "segment_increments": list(increments),
        "increment_ratios": list(ratios),
    }
    if tail is not None:
        d["estimated_tail"] = tail
    if note:
        d["note"] = note
    return d


def _limit_finite(value, tail, levels, increments, ratios, note=None):
    return BoundaryLimit(
        value=float(value),
        finite=True,
        diagnostics=_diag(levels, increments, ratios, tail=tail, note=note),
    )


def _limit_infinite(levels, increments, ratios, note):
    return BoundaryLimit(
        value=math.inf,
        finite=False,
        diagnostics=_diag(levels, increments, ratios, note=note),
    )


def classify_explosion(diff: Diffusion1D, tolerance: float = 1e-9) -> FellerReport:
    """Run both boundaries; explosion is possible iff at least one v is finite."""
    v_plus = feller_v(diff, "plus", tolerance)
    v_minus = feller_v(diff, "minus", tolerance)
    for side, limit in (("plus", v_plus), ("minus", v_minus)):
        if limit.finite is None:
            raise IndeterminateExplosionTest(
                f"v_{side} did not converge within the truncation schedule: "
                f"{limit.diagnostics.get('note')}"
            )
    table = {
        (True, True): EXPLODES_BOTH,
        (True, False): EXPLODES_PLUS,
        (False, True): EXPLODES_MINUS,
        (False, False): NO_EXPLOSION,
    }
    return FellerReport(
        v_plus=v_plus,
        v_minus=v_minus,
        classification=table[(v_plus.finite, v_minus.finite)],
    )
