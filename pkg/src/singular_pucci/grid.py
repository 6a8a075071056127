"""Graded radial meshes and sampled fields on them."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import ValidationError

DEFAULT_NODES = 2049
DEFAULT_FIRST_CELL = 1e-6  # relative to R - rho


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radii from ``rho`` to ``R``.

    ``grading`` is the ratio between consecutive cell widths (1 = uniform).
    """

    nodes: np.ndarray
    grading: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValidationError("a radial grid needs at least 3 nodes")
        if not np.all(np.diff(r) > 0):
            raise ValidationError("grid nodes must be strictly increasing")
        if self.grading < 1:
            raise ValidationError("grading must be ≥ 1")
        r.setflags(write=False)
        object.__setattr__(self, "nodes", r)

    @classmethod
    def uniform(cls, rho: float, R: float, n: int = DEFAULT_NODES) -> "RadialGrid":
        r = np.linspace(rho, R, n)
        r[0], r[-1] = rho, R
        return cls(r, 1.0)

    @classmethod
    def geometric(cls, rho: float, R: float, n: int = DEFAULT_NODES,
                  first_cell: float | None = None) -> "RadialGrid":
        """Cells grow by a constant ratio from ``rho`` outward.

        The ratio is chosen so the first cell equals ``first_cell``
        (default ``(R - rho)·1e-6``).
        """
        width = R - rho
        h1 = width * DEFAULT_FIRST_CELL if first_cell is None else first_cell
        cells = n - 1
        if h1 * cells >= width:
            return cls.uniform(rho, R, n)
        # h1 * (q**cells - 1) / (q - 1) = width
        f = lambda lq: h1 * math.expm1(cells * lq) / math.expm1(lq) - width
        lq = brentq(f, 1e-14, 50.0 / cells, xtol=1e-15, rtol=1e-15)
        q = math.exp(lq)
        widths = h1 * q ** np.arange(cells)
        r = rho + np.concatenate(([0.0], np.cumsum(widths)))
        r = rho + (r - rho) * (width / (r[-1] - rho))
        r[0], r[-1] = rho, R
        return cls(r, q)

    @property
    def rho(self) -> float:
        return float(self.nodes[0])

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refined(self, factor: int) -> "RadialGrid":
        """Same construction with ``factor`` times as many cells."""
        n = factor * (self.size - 1) + 1
        if self.grading == 1.0:
            return RadialGrid.uniform(self.rho, self.R, n)
        return RadialGrid.geometric(self.rho, self.R, n, first_cell=self.h[0] / factor)


def interior_stencils(r: np.ndarray):
    """Three-point weights at interior nodes.

    Returns ``(d1, d2)``, each of shape ``(n-2, 3)`` holding weights on
    ``(w[i-1], w[i], w[i+1])``; both are exact for quadratics.
    """
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    s = hm + hp
    d1 = np.column_stack((-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s)))
    d2 = np.column_stack((2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s)))
    return d1, d2


def _apply(weights, w):
    return weights[:, 0] * w[:-2] + weights[:, 1] * w[1:-1] + weights[:, 2] * w[2:]


def interior_derivatives(r: np.ndarray, w: np.ndarray):
    """Centered first and second derivatives at interior nodes."""
    d1, d2 = interior_stencils(r)
    return _apply(d1, w), _apply(d2, w)


def _one_sided(r0, r1, r2, w0, w1, w2):
    # derivatives at r0 of the interpolating quadratic
    a, b = r1 - r0, r2 - r0
    d1 = (-(a + b) / (a * b)) * w0 + (b / (a * (b - a))) * w1 - (a / (b * (b - a))) * w2
    d2 = 2 * (w0 / (a * b) - w1 / (a * (b - a)) + w2 / (b * (b - a)))
    return d1, d2


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValidationError("values and grid lengths differ")
        if not np.all(np.isfinite(v)):
            raise ValidationError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def derivatives(self):
        """First and second derivatives at every node.

        Interior nodes use the centered stencils; the two boundary nodes use
        one-sided quadratic fits (reporting only).
        """
        r, w = self.r, self.values
        d1 = np.empty_like(w)
        d2 = np.empty_like(w)
        d1[1:-1], d2[1:-1] = interior_derivatives(r, w)
        d1[0], d2[0] = _one_sided(r[0], r[1], r[2], w[0], w[1], w[2])
        d1[-1], d2[-1] = _one_sided(r[-1], r[-2], r[-3], w[-1], w[-2], w[-3])
        return d1, d2

    def map(self, func) -> "GridFunction":
        return GridFunction(self.grid, func(self.values))

    def at(self, radius):
        """Cubic interpolation between nodes."""
        from scipy.interpolate import CubicSpline
        return CubicSpline(self.r, self.values)(radius)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["r", "value"])
            for ri, vi in zip(self.r, self.values):
                out.writerow([f"{ri:.17g}", f"{vi:.17g}"])
        return path

    @classmethod
    def from_csv(cls, path, grading: float = 1.0) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(RadialGrid(data[:, 0], grading), data[:, 1])
