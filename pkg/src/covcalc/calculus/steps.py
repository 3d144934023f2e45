"""Step functions on the cells ]t_i, t_{i+1}] of a grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..covmeasure import Grid
from ..errors import DomainError


@dataclass(frozen=True)
class StepFunction:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (self.grid.n,):
            raise DomainError(f"step function needs {self.grid.n} cell values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, grid: Grid) -> "StepFunction":
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "StepFunction":
        return cls(grid, np.full(grid.n, float(c)))

    @classmethod
    def indicator(cls, grid: Grid, a: float, b: float) -> "StepFunction":
        """1_{]a,b]} sampled on the cells (exact when a and b are grid points)."""
        mid = grid.midpoints
        return cls(grid, ((mid > a) & (mid < b)).astype(float))

    @classmethod
    def from_pieces(cls, grid: Grid, pieces) -> "StepFunction":
        """Sum of v * 1_{]a,b]} over (a, b, v) triples."""
        out = np.zeros(grid.n)
        for a, b, v in pieces:
            if b < a:
                raise DomainError(f"piece ({a}, {b}) has b < a")
            out += v * cls.indicator(grid, a, b).values
        return cls(grid, out)

    @classmethod
    def random(cls, grid: Grid, rng: np.random.Generator, pieces: int = 4) -> "StepFunction":
        """Random step function with `pieces` constant stretches on grid breakpoints."""
        cuts = np.sort(rng.choice(np.arange(1, grid.n), size=min(pieces - 1, grid.n - 1),
                                  replace=False))
        bounds = np.concatenate([[0], cuts, [grid.n]])
        vals = rng.normal(size=len(bounds) - 1)
        return cls(grid, np.repeat(vals, np.diff(bounds)))

    def breakpoints(self) -> np.ndarray:
        jumps = np.nonzero(np.diff(self.values))[0] + 1
        return self.grid.points[np.concatenate([[0], jumps, [self.grid.n]])]

    def __call__(self, t):
        """Value at time t (cells are left-open, right-closed)."""
        t = np.asarray(t, dtype=float)
        i = np.clip(np.ceil(t / self.grid.h - 1e-9).astype(int) - 1, 0, self.grid.n - 1)
        return self.values[i]

    def _same_grid(self, other):
        if other.grid != self.grid:
            raise DomainError("step functions live on different grids")

    def __add__(self, other):
        if isinstance(other, StepFunction):
            self._same_grid(other)
            return StepFunction(self.grid, self.values + other.values)
        return StepFunction(self.grid, self.values + float(other))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            self._same_grid(other)
            return StepFunction(self.grid, self.values * other.values)
        return StepFunction(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return StepFunction(self.grid, -self.values)

    def abs(self) -> "StepFunction":
        return StepFunction(self.grid, np.abs(self.values))
