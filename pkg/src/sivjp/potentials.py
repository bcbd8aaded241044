"""Potentials on the circle and the registry used by experiment configs.

A FrozenPotential bundles a potential V, its derivative dV and a certified
upper bound on sup|dV|. The bound drives the global thinning envelope of
the event-driven simulators, so it is certified conservatively: 1.05 times
the max of |dV| over 4096 nodes, which dominates the grid interpolation
error for every smooth potential in scope (the margin is overridable).

Potentials carry both vectorized callables (for quadrature work) and plain
scalar callables (for the per-proposal evaluations inside the event loops,
where numpy dispatch overhead would dominate).

The registry covers the potentials the experiments use -- zero, cos(2z),
a two-parameter trigonometric double well, and a grid-sampled custom
potential -- without pulling in an expression parser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import PeriodicGrid, THRESHOLD_GRID, wrap

CERTIFY_MARGIN = 1.05


def _vectorize(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def g(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
    return g


@dataclass(frozen=True)
class FrozenPotential:
    """A smooth potential with derivative and a certified derivative bound.

    v and dv are vectorized over arrays of angles; v_scalar and dv_scalar
    are their float->float counterparts. dv_sup must dominate sup|dV|; it
    is what the simulators add to the jump rate floor to obtain their
    thinning envelope.
    """

    v: Callable[[np.ndarray], np.ndarray]
    dv: Callable[[np.ndarray], np.ndarray]
    dv_sup: float
    v_scalar: Callable[[float], float]
    dv_scalar: Callable[[float], float]
    name: str = "custom"


def certify_dv_sup(dv: Callable, grid: PeriodicGrid = THRESHOLD_GRID,
                   margin: float = CERTIFY_MARGIN) -> float:
    """margin * max over the grid of |dV|."""
    if margin < 1.0:
        raise ConfigError("certify_dv_sup: margin must be >= 1.0")
    return margin * float(np.max(np.abs(np.asarray(dv(grid.nodes), dtype=float))))


def check_derivative(v: Callable, dv: Callable, grid: PeriodicGrid = THRESHOLD_GRID,
                     h: float = 1e-5, tol: float = 1e-6) -> None:
    """Central finite-difference consistency check of dV against V."""
    z = grid.nodes
    fd = (np.asarray(v(z + h), dtype=float) - np.asarray(v(z - h), dtype=float)) / (2.0 * h)
    err = float(np.max(np.abs(np.asarray(dv(z), dtype=float) - fd)))
    if err > tol:
        raise DomainError(f"potential derivative inconsistent with value: max fd error {err:.3e}")


def frozen_potential(v: Callable, dv: Callable, name: str = "custom",
                     dv_sup: float | None = None, validate: bool = True,
                     v_scalar: Callable[[float], float] | None = None,
                     dv_scalar: Callable[[float], float] | None = None) -> FrozenPotential:
    """Build a FrozenPotential from vectorized callables, certifying dv_sup."""
    v = _vectorize(v)
    dv = _vectorize(dv)
    if validate:
        check_derivative(v, dv)
    if dv_sup is None:
        dv_sup = certify_dv_sup(dv)
    if v_scalar is None:
        v_scalar = lambda x: float(v(np.array([x]))[0])
    if dv_scalar is None:
        dv_scalar = lambda x: float(dv(np.array([x]))[0])
    return FrozenPotential(v=v, dv=dv, dv_sup=float(dv_sup),
                           v_scalar=v_scalar, dv_scalar=dv_scalar, name=name)


# ---------------------------------------------------------------------------
# registry

def zero_potential() -> FrozenPotential:
    return FrozenPotential(
        v=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        dv=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        dv_sup=0.0,
        v_scalar=lambda x: 0.0,
        dv_scalar=lambda x: 0.0,
        name="zero")


def cos_potential() -> FrozenPotential:
    """V(z) = cos z, the standard single-well test potential."""
    return FrozenPotential(
        v=lambda z: np.cos(np.asarray(z, dtype=float)),
        dv=lambda z: -np.sin(np.asarray(z, dtype=float)),
        dv_sup=CERTIFY_MARGIN,
        v_scalar=math.cos,
        dv_scalar=lambda x: -math.sin(x),
        name="cos")


def cos2_potential() -> FrozenPotential:
    """U(z) = -cos(2z): the symmetric double well with minima at 0 and pi."""
    return FrozenPotential(
        v=lambda z: -np.cos(2.0 * np.asarray(z, dtype=float)),
        dv=lambda z: 2.0 * np.sin(2.0 * np.asarray(z, dtype=float)),
        dv_sup=CERTIFY_MARGIN * 2.0,
        v_scalar=lambda x: -math.cos(2.0 * x),
        dv_scalar=lambda x: 2.0 * math.sin(2.0 * x),
        name="cos2")


def two_well_potential(a1: float = 0.2, a2: float = -0.5) -> FrozenPotential:
    """U(z) = a1 cos z + a2 cos 2z.

    The defaults give two non-degenerate wells of different depths: a
    shallow one at z = 0 (U = a1 + a2) and a deep one at z = pi
    (U = a2 - a1). Choosing a2 > 0 instead produces a symmetric pair of
    equal-depth wells at +/- z*, since the potential is even either way.
    """
    def v(z):
        z = np.asarray(z, dtype=float)
        return a1 * np.cos(z) + a2 * np.cos(2.0 * z)

    def dv(z):
        z = np.asarray(z, dtype=float)
        return -a1 * np.sin(z) - 2.0 * a2 * np.sin(2.0 * z)

    return FrozenPotential(
        v=v, dv=dv, dv_sup=certify_dv_sup(dv),
        v_scalar=lambda x: a1 * math.cos(x) + a2 * math.cos(2.0 * x),
        dv_scalar=lambda x: -a1 * math.sin(x) - 2.0 * a2 * math.sin(2.0 * x),
        name=f"two_well({a1},{a2})")


def grid_potential(values: np.ndarray, name: str = "custom-grid") -> FrozenPotential:
    """Potential sampled on a uniform periodic grid.

    The continuous potential is *defined* as the trigonometric interpolant
    of the samples: U(z) = a0 + sum_k (a_k cos kz + b_k sin kz), with
    coefficients from a real FFT. The derivative is then exact for the
    interpolant, so the finite-difference invariant holds by construction.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 4 or n % 2 != 0:
        raise ConfigError("grid_potential: need an even number >= 4 of samples")
    spec = np.fft.rfft(values) / n
    k = np.arange(1, n // 2 + 1)
    a_cos = 2.0 * spec[1:].real
    a_cos[-1] *= 0.5  # Nyquist mode appears once
    b_sin = np.concatenate([-2.0 * spec[1:-1].imag, [0.0]])
    a0 = float(spec[0].real)
    dk_cos = k * a_cos
    dk_sin = k * b_sin

    def v(z):
        kz = np.outer(np.atleast_1d(np.asarray(z, dtype=float)), k)
        out = a0 + np.cos(kz) @ a_cos + np.sin(kz) @ b_sin
        return out.reshape(np.shape(z))

    def dv(z):
        kz = np.outer(np.atleast_1d(np.asarray(z, dtype=float)), k)
        out = np.cos(kz) @ dk_sin - np.sin(kz) @ dk_cos
        return out.reshape(np.shape(z))

    return FrozenPotential(
        v=v, dv=dv, dv_sup=certify_dv_sup(dv),
        v_scalar=lambda x: float(v(np.array([x]))[0]),
        dv_scalar=lambda x: float(dv(np.array([x]))[0]),
        name=name)


POTENTIAL_KINDS = ("zero", "cos2", "two_well", "custom_grid")


def make_potential(kind: str, params: dict | None = None) -> FrozenPotential:
    params = dict(params or {})
    if kind == "zero":
        return zero_potential()
    if kind == "cos2":
        return cos2_potential()
    if kind == "two_well":
        return two_well_potential(**params)
    if kind == "custom_grid":
        if "values" not in params:
            raise ConfigError("custom_grid potential requires 'values'")
        return grid_potential(np.asarray(params["values"], dtype=float))
    raise ConfigError(f"unknown potential kind {kind!r}; choose from {POTENTIAL_KINDS}")


def local_minima(pot: FrozenPotential, grid: PeriodicGrid = THRESHOLD_GRID,
                 curvature_tol: float = 1e-6) -> list[float]:
    """Locations of the non-degenerate local minima of the potential.

    Grid-detected minima are polished by bisection on dV and filtered by a
    second-difference curvature test.
    """
    z = grid.nodes
    vals = np.asarray(pot.v(z), dtype=float)
    idx = np.flatnonzero((vals < np.roll(vals, 1)) & (vals < np.roll(vals, -1)))
    minima = []
    for kk in idx:
        lo = z[kk] - grid.h
        hi = z[kk] + grid.h
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if pot.dv_scalar(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        x0 = 0.5 * (lo + hi)
        h = 1e-4
        curv = (pot.v_scalar(x0 + h) - 2.0 * pot.v_scalar(x0) + pot.v_scalar(x0 - h)) / h ** 2
        if curv > curvature_tol:
            minima.append(wrap(x0))
    return sorted(minima)
