"""Named drift/diffusion catalog shared by the CLI and the scenario runners.

Keys: ``zero``, ``constant:c``, ``linear``, ``pow:a``, ``pow-plus-linear:a``,
``tanaka-sign``.  Catalog entries are numpy-vectorized state functions, so
they run unchanged through the single-path solver and the batch engine.
Powers are evaluated by repeated multiplication when the exponent is a small
integer, keeping scalar and vector code paths bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sde import SdeSpec, StateFunction

__all__ = ["CatalogEntry", "parse_drift", "make_scalar_spec", "sign_convention"]


def sign_convention(x):
    """sgn with sgn(0) = -1, elementwise."""
    return np.where(np.asarray(x) > 0, 1.0, -1.0)


def _abs_power(alpha: float):
    if alpha == int(alpha) and 1 <= alpha <= 8:
        n = int(alpha)

        def fn(x):
            a = np.abs(x)
            out = a
            for _ in range(n - 1):
                out = out * a
            return out

        return fn
    return lambda x: np.abs(x) ** alpha


@dataclass(frozen=True)
class CatalogEntry:
    """A named scalar coefficient pair."""

    name: str
    drift: callable
    diffusion: callable


def parse_drift(token: str) -> CatalogEntry:
    """Resolve a catalog token like ``pow:4`` into vectorized coefficients."""
    name, _, arg = token.partition(":")
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    if name == "zero":
        return CatalogEntry(token, lambda x: np.zeros_like(np.asarray(x, dtype=float)), one)
    if name == "constant":
        c = float(arg) if arg else 1.0
        return CatalogEntry(token, lambda x: np.full_like(np.asarray(x, dtype=float), c), one)
    if name == "linear":
        return CatalogEntry(token, lambda x: np.asarray(x, dtype=float) + 0.0, one)
    if name == "pow":
        if not arg:
            raise ValueError("pow drift needs an exponent, e.g. pow:4")
        p = _abs_power(float(arg))
        return CatalogEntry(token, p, one)
    if name == "pow-plus-linear":
        if not arg:
            raise ValueError("pow-plus-linear drift needs an exponent")
        p = _abs_power(float(arg))
        return CatalogEntry(token, lambda x: p(x) + x, one)
    if name == "tanaka-sign":
        return CatalogEntry(token, lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                            sign_convention)
    raise ValueError(f"unknown drift {token!r}; see the catalog in the docs")


def make_scalar_spec(entry: CatalogEntry, x0: float) -> SdeSpec:
    """Wrap a catalog entry as a 1-d SdeSpec for the single-path solver."""
    return SdeSpec(
        dim=1,
        drift=StateFunction(entry.drift, shape=(1,)),
        diffusion=StateFunction(entry.diffusion, shape=(1, 1)),
        x0=np.array([x0]),
    )
