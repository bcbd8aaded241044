"""Circle and torus geometry: angle wrapping, the chordal metric, and
uniform-node periodic quadrature.

Angles are plain floats normalized to [0, 2*pi). The quadrature rule is the
rectangle rule on n equispaced nodes, which for smooth 2*pi-periodic
integrands converges faster than any power of 1/n and is exact on
trigonometric polynomials of degree < n/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, NumericError

TWO_PI = 2.0 * math.pi


def wrap(x: float) -> float:
    """Canonical representative of x in [0, 2*pi). Total on finite floats."""
    if not math.isfinite(x):
        raise DomainError(f"wrap: non-finite input {x!r}")
    r = math.fmod(x, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    # fmod of a tiny negative number can round back up to exactly 2*pi
    if r >= TWO_PI:
        r -= TWO_PI
    return r


def wrap_array(x: np.ndarray) -> np.ndarray:
    """Vectorized wrap."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("wrap_array: non-finite input")
    r = np.mod(x, TWO_PI)
    r[r >= TWO_PI] -= TWO_PI
    return r


def dist_t(x: float, z: float) -> float:
    """Chordal distance |e^{ix} - e^{iz}| = 2|sin((x-z)/2)|, in [0, 2]."""
    return 2.0 * abs(math.sin(0.5 * (x - z)))


@dataclass(frozen=True)
class PeriodicGrid:
    """n equispaced nodes 2*pi*k/n on the circle.

    n must be even and >= 4 so that the node set is symmetric under both
    z -> z + pi and z -> -z, which the symmetry checks rely on.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n < 4 or self.n % 2 != 0:
            raise ConfigError(f"PeriodicGrid: n must be even and >= 4, got {self.n}")

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n) / self.n


# Defaults per the accuracy budget: 512 nodes for density work, 4096 for
# threshold constants, which leaves >= 6 digits of headroom at tilt
# exponents up to rho = 40.
DENSITY_GRID = PeriodicGrid(512)
THRESHOLD_GRID = PeriodicGrid(4096)


def quad_periodic(f: Callable[[np.ndarray], np.ndarray] | np.ndarray,
                  grid: PeriodicGrid) -> float:
    """Uniform-node quadrature (2*pi/n) * sum f(node_k).

    f may be a vectorized callable on angles or an array of node values.
    Spectrally accurate for smooth periodic integrands; exact to round-off
    for trigonometric polynomials of degree < n/2.
    """
    if callable(f):
        vals = np.asarray(f(grid.nodes), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    if vals.shape != (grid.n,):
        raise DomainError(f"quad_periodic: expected {grid.n} node values, got shape {vals.shape}")
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise NumericError(f"quad_periodic: non-finite integrand at node index {int(bad[0])}")
    return grid.h * float(vals.sum())


def arc_sojourn(x0: float, direction: int, length: float, grid: PeriodicGrid,
                out: np.ndarray | None = None) -> np.ndarray:
    """Time spent in each grid cell by a unit-speed arc of the given length.

    Cells are centered on the nodes: cell k = [node_k - h/2, node_k + h/2).
    The deposit is exact (no sub-sampling): full laps contribute uniformly
    and the partial arc is split across cells analytically.
    """
    if out is None:
        out = np.zeros(grid.n)
    if length <= 0.0:
        return out
    lo = x0 if direction > 0 else x0 - length
    _deposit_interval(lo, lo + length, grid, out)
    return out


def _cell_cumulative(x: np.ndarray | float, grid: PeriodicGrid) -> np.ndarray:
    """Per-cell occupancy of the unit-speed path [0, x) from angle 0.

    Works on a scalar (returns shape (n,)) or a batch (returns (m, n)).
    Cells are edge-aligned after shifting by half a cell, so that the
    result refers to node-centered cells.
    """
    h = grid.h
    x = np.asarray(x, dtype=float)[..., None] + 0.5 * h  # center -> edge shift
    laps = np.floor(x / TWO_PI)
    phase = x - TWO_PI * laps
    edges = h * np.arange(grid.n)
    return h * laps + np.clip(phase - edges, 0.0, h)


def _deposit_interval(lo: float, hi: float, grid: PeriodicGrid, out: np.ndarray) -> None:
    out += _cell_cumulative(hi, grid) - _cell_cumulative(lo, grid)


def segments_sojourn(starts: np.ndarray, directions: np.ndarray, lengths: np.ndarray,
                     grid: PeriodicGrid, chunk: int = 4096) -> np.ndarray:
    """Total per-cell occupancy of many unit-speed arcs, vectorized.

    Equivalent to summing arc_sojourn over segments, but batched so that
    event logs with 1e5+ segments bin in a few hundred milliseconds.
    """
    starts = np.asarray(starts, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    directions = np.asarray(directions, dtype=float)
    lo = np.where(directions > 0, starts, starts - lengths)
    hi = lo + lengths
    total = np.zeros(grid.n)
    for k in range(0, lo.size, chunk):
        sl = slice(k, k + chunk)
        total += (_cell_cumulative(hi[sl], grid) - _cell_cumulative(lo[sl], grid)).sum(axis=0)
    return total
