"""Discrete covariance measure on a uniform grid.

The measure dR is represented by its masses on the grid cells
]t_i, t_{i+1}] x ]t_j, t_{j+1}], i.e. by planar second differences of R.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels as kr
from .errors import DomainError, EstimationError

MAX_CELLS = 4096


@dataclass(frozen=True)
class Grid:
    n: int
    T: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"grid needs a positive integer cell count, got {self.n}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise DomainError(f"grid horizon must be positive, got {self.T}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "T", float(self.T))

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def index(self, t: float) -> int:
        """Index k with t_k = t; raises for times off the grid."""
        x = float(t) / self.h
        k = int(round(x))
        if abs(x - k) > 1e-9 or not 0 <= k <= self.n:
            raise DomainError(f"time {t} is not a point of the grid (n={self.n}, T={self.T})")
        return k

    def extended(self, extra: int) -> "Grid":
        """Same spacing, `extra` additional cells past T."""
        return Grid(self.n + extra, self.T + extra * self.h)


def grid_from_points(points) -> Grid:
    """Grid from an explicit point array; only uniform partitions from 0 are accepted."""
    p = np.asarray(points, dtype=float)
    if p.ndim != 1 or len(p) < 2 or p[0] != 0:
        raise DomainError("grid points must start at 0 and contain at least two points")
    d = np.diff(p)
    if np.any(d <= 0) or np.max(np.abs(d - d.mean())) > 1e-9 * d.mean():
        raise DomainError("only uniform grids are supported")
    return Grid(len(p) - 1, float(p[-1]))


@dataclass(frozen=True)
class DiscreteMeasure:
    grid: Grid
    mass: np.ndarray = field(repr=False)
    kernel: kr.KernelSpec | None = None

    def __post_init__(self):
        self.mass.setflags(write=False)

    @property
    def n(self) -> int:
        return self.grid.n

    def total(self) -> float:
        return float(self.mass.sum())


def _kernel_matrix(kernel, t):
    S, U = np.meshgrid(t, t, indexing="ij")
    return np.asarray(kr.eval_covariance(kernel, S, U), dtype=float)


def build_measure(kernel: kr.KernelSpec, grid: Grid) -> DiscreteMeasure:
    if grid.n > MAX_CELLS:
        raise DomainError(f"dense measure limited to n <= {MAX_CELLS}")
    if grid.T > kernel.T * (1 + 1e-12):
        raise DomainError("grid extends beyond the kernel horizon")
    R = _kernel_matrix(kernel, grid.points)
    # (a + b) - (c + d) keeps the matrix exactly symmetric
    mass = (R[1:, 1:] + R[:-1, :-1]) - (R[:-1, 1:] + R[1:, :-1])
    return DiscreteMeasure(grid, mass, kernel)


def zero_measure(grid: Grid) -> DiscreteMeasure:
    return DiscreteMeasure(grid, np.zeros((grid.n, grid.n)))


def planar_variation(m: DiscreteMeasure) -> float:
    return float(np.abs(m.mass).sum())


def refine_scan(kernel: kr.KernelSpec, ns=(16, 32, 64, 128, 256, 512, 1024), T=None):
    """Planar variation and grid energy E_n(T) across refinements.

    Returns rows (n, planar_variation, energy) and a flag telling whether the
    planar variation keeps growing (no finite covariance measure in sight).
    """
    T = kernel.T if T is None else T
    rows = []
    for n in ns:
        m = build_measure(kernel, Grid(n, T))
        rows.append((n, planar_variation(m), float(np.trace(m.mass))))
    pv = np.array([r[1] for r in rows])
    ratios = pv[1:] / pv[:-1]
    growing = bool(np.all(ratios > 1.01))
    return rows, growing


def planar_quadratic_variation(kernel: kr.KernelSpec, eps: float, T: float | None = None,
                               nodes: int = 4096) -> float:
    """(1/eps) * int_0^T (Delta_{]t,t+eps]^2} R)^2 dt by the midpoint rule.

    Times past the horizon are clamped, i.e. the process is continued as a
    constant after T.
    """
    T = kernel.T if T is None else float(T)
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not eps < T:
        raise DomainError("eps must be smaller than T")
    t = (np.arange(nodes) + 0.5) * (T / nodes)
    u = np.minimum(t + eps, T)
    sq = (kr.eval_covariance(kernel, u, u) + kr.eval_covariance(kernel, t, t)
          - 2 * kr.eval_covariance(kernel, t, u))
    return float(np.sum(sq ** 2) * (T / nodes) / eps)


def jordan_decompose(m: DiscreteMeasure):
    pos = np.maximum(m.mass, 0.0)
    neg = np.maximum(-m.mass, 0.0)
    return DiscreteMeasure(m.grid, pos, None), DiscreteMeasure(m.grid, neg, None)


def total_variation_measure(m: DiscreteMeasure) -> DiscreteMeasure:
    return DiscreteMeasure(m.grid, np.abs(m.mass), None)


def energy_curve(m: DiscreteMeasure) -> np.ndarray:
    """E_n(t_k) = sum_{i<k} mass[i][i] for k = 0..n."""
    return np.concatenate([[0.0], np.cumsum(np.diag(m.mass))])


def marginal(m: DiscreteMeasure) -> np.ndarray:
    return np.abs(m.mass).sum(axis=0)


def triangle_curve(m: DiscreteMeasure) -> np.ndarray:
    """sum_{i<j<k} mass[i][j] for k = 0..n."""
    # row j of the strictly lower triangle collects the cells (i, j) with i < j
    below = np.tril(m.mass, -1).sum(axis=1)
    return np.concatenate([[0.0], np.cumsum(below)])


def triangle_mass(m: DiscreteMeasure, t: float) -> float:
    k = m.grid.index(t)
    return float(np.tril(m.mass[:k, :k], -1).sum())


def gamma_identity_gap(m: DiscreteMeasure, kernel: kr.KernelSpec | None = None) -> np.ndarray:
    """gamma(t_k) - E_n(t_k) - 2 * triangle(t_k) for every grid point."""
    kernel = kernel or m.kernel
    gamma = kr.variance_curve(kernel, m.grid.points)
    return gamma - energy_curve(m) - 2 * triangle_curve(m)


def telescoping_gap(m: DiscreteMeasure, kernel: kr.KernelSpec | None = None) -> np.ndarray:
    """sum_{i,j<k} mass[i][j] - R(t_k, t_k) for every k >= 1."""
    kernel = kernel or m.kernel
    c = np.cumsum(np.cumsum(m.mass, axis=0), axis=1)
    gamma = kr.variance_curve(kernel, m.grid.points[1:])
    return np.diag(c) - gamma


def rectangle_scaling_exponent(m: DiscreteMeasure, levels=range(3, 9), n_starts: int = 8) -> float:
    """Slope of log mu((s,s+d]^2) against log d, d = 2^-3 T .. 2^-8 T, averaged over s.

    The starting points s = k T / n_starts, k = 0..n_starts-1, must lie on the grid
    together with s + d, which requires n to be a multiple of 2^max(levels).
    """
    n, T = m.grid.n, m.grid.T
    levels = list(levels)
    if n % (2 ** max(levels)) or n % n_starts:
        raise DomainError(f"n must be a multiple of {2 ** max(levels)} for this scan")
    cum = np.zeros((n + 1, n + 1))
    cum[1:, 1:] = np.cumsum(np.cumsum(m.mass, axis=0), axis=1)
    log_d = np.log(np.array([T * 2.0 ** -l for l in levels]))
    slopes = []
    for k in range(n_starts):
        a = k * n // n_starts
        sq = []
        for l in levels:
            b = min(a + n // 2 ** l, n)
            if b - a < n // 2 ** l:
                break
            sq.append(cum[b, b] - cum[a, b] - cum[b, a] + cum[a, a])
        if len(sq) < len(levels):
            continue
        sq = np.array(sq)
        if np.any(sq <= 0):
            raise EstimationError(f"nonpositive square mass at s={a * m.grid.h}: {sq.min():.3e}")
        slopes.append(np.polyfit(log_d, np.log(sq), 1)[0])
    return float(np.mean(slopes))
