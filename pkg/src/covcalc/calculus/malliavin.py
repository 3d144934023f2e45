"""Cylindrical functionals, Malliavin derivative and Skorohod integrals on the grid.

Random step processes are stored per path as (M, n) arrays of cell values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..covmeasure import DiscreteMeasure
from ..errors import DomainError
from ..simulate import PathEnsemble
from .estimate import MonteCarloEstimate, combined_se
from .regularization import forward_integral
from .smooth import Constant, Partial, Product, SmoothFunction
from .steps import StepFunction
from .wiener import h_inner, wiener_integral


@dataclass(frozen=True)
class CylindricalFunctional:
    """F = f(int phi_1 dX, ..., int phi_k dX)."""
    integrands: tuple
    f: SmoothFunction

    def __post_init__(self):
        object.__setattr__(self, "integrands", tuple(self.integrands))
        if len(self.integrands) < 1:
            raise DomainError("a cylindrical functional needs at least one integrand")
        if self.f.dim != len(self.integrands):
            raise DomainError(f"f takes {self.f.dim} variables, {len(self.integrands)} integrands given")
        g = self.integrands[0].grid
        if any(p.grid != g for p in self.integrands):
            raise DomainError("integrands live on different grids")

    @property
    def grid(self):
        return self.integrands[0].grid

    @property
    def k(self) -> int:
        return len(self.integrands)

    def phi_matrix(self) -> np.ndarray:
        return np.stack([p.values for p in self.integrands])

    def variables(self, paths: PathEnsemble) -> np.ndarray:
        return np.stack([wiener_integral(paths, p) for p in self.integrands], axis=1)

    def evaluate(self, paths: PathEnsemble, Y=None) -> np.ndarray:
        return self.f.value(self.variables(paths) if Y is None else Y)

    def __mul__(self, other: "CylindricalFunctional") -> "CylindricalFunctional":
        return CylindricalFunctional(self.integrands + other.integrands, Product(self.f, other.f))

    @classmethod
    def constant(cls, grid, c: float) -> "CylindricalFunctional":
        return cls((StepFunction.zero(grid),), Constant(c, 1))


def malliavin_derivative(F: CylindricalFunctional, paths: PathEnsemble, Y=None) -> np.ndarray:
    """DF per path as cell values, shape (M, n)."""
    Y = F.variables(paths) if Y is None else Y
    return F.f.grad(Y) @ F.phi_matrix()


@dataclass(frozen=True)
class ElementaryProcess:
    """u_t = sum_l psi_l(t) G_l."""
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((psi, G) for psi, G in self.terms))

    @classmethod
    def deterministic(cls, psi: StepFunction) -> "ElementaryProcess":
        return cls(((psi, CylindricalFunctional.constant(psi.grid, 1.0)),))

    def values(self, paths: PathEnsemble) -> np.ndarray:
        out = np.zeros((paths.M, paths.grid.n))
        for psi, G in self.terms:
            out += G.evaluate(paths)[:, None] * psi.values
        return out

    def scaled(self, w: float) -> "ElementaryProcess":
        return ElementaryProcess(tuple((w * psi, G) for psi, G in self.terms))

    def __add__(self, other: "ElementaryProcess") -> "ElementaryProcess":
        return ElementaryProcess(self.terms + other.terms)

    def times(self, F: CylindricalFunctional) -> "ElementaryProcess":
        """The process F u."""
        return ElementaryProcess(tuple((psi, F * G) for psi, G in self.terms))


def _check(m: DiscreteMeasure, paths: PathEnsemble):
    if m.grid != paths.grid:
        raise DomainError("measure and paths live on different grids")


def pathwise_h_inner(m: DiscreteMeasure, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<a_m, b_m>_H for per-path cell values a, b of shape (M, n)."""
    return np.einsum("mi,mi->m", a @ m.mass, np.broadcast_to(b, a.shape))


def skorohod_cylindrical(u: ElementaryProcess, paths: PathEnsemble, m: DiscreteMeasure) -> np.ndarray:
    """delta(u) = sum_l [G_l int psi_l dX - sum_j <phi_lj, psi_l>_H d_j g_l(Y_l)]."""
    _check(m, paths)
    out = np.zeros(paths.M)
    for psi, G in u.terms:
        Y = G.variables(paths)
        c = np.array([h_inner(m, phi, psi) for phi in G.integrands])
        out += G.f.value(Y) * wiener_integral(paths, psi) - G.f.grad(Y) @ c
    return out


def skorohod_variance_check(u: ElementaryProcess, paths: PathEnsemble, m: DiscreteMeasure):
    """(MC second moment of delta(u), MC mean of ||u||_H^2 + tr(Du mu Du mu))."""
    _check(m, paths)
    d = skorohod_cylindrical(u, paths, m)
    uv = u.values(paths)
    first = pathwise_h_inner(m, uv, uv)
    # D_s u_t = sum_r c_r p_r(s) q_r(t), r running over (term l, variable j)
    cs, ps, qs = [], [], []
    for psi, G in u.terms:
        cs.append(G.f.grad(G.variables(paths)))
        for phi in G.integrands:
            ps.append(phi.values)
            qs.append(psi.values)
    c = np.concatenate(cs, axis=1)
    P, Qm = np.array(ps), np.array(qs)
    B = Qm @ m.mass @ P.T
    second = np.einsum("mr,rs,ms->m", c, B * B.T, c)
    return MonteCarloEstimate.from_samples(d * d), MonteCarloEstimate.from_samples(first + second)


def duality_check(F: CylindricalFunctional, u: ElementaryProcess, paths: PathEnsemble,
                  m: DiscreteMeasure):
    """(E F delta(u), E <DF, u>_H, combined standard error)."""
    lhs = MonteCarloEstimate.from_samples(F.evaluate(paths) * skorohod_cylindrical(u, paths, m))
    rhs = MonteCarloEstimate.from_samples(
        pathwise_h_inner(m, malliavin_derivative(F, paths), u.values(paths)))
    return lhs, rhs, combined_se(lhs, rhs)


def integration_by_parts_check(F: CylindricalFunctional, h: StepFunction, paths: PathEnsemble,
                               m: DiscreteMeasure):
    """(E <DF, h>_H, E F int h dX, combined standard error)."""
    lhs = MonteCarloEstimate.from_samples(malliavin_derivative(F, paths) @ (m.mass @ h.values))
    rhs = MonteCarloEstimate.from_samples(F.evaluate(paths) * wiener_integral(paths, h))
    return lhs, rhs, combined_se(lhs, rhs)


def product_rule_gap(F: CylindricalFunctional, u: ElementaryProcess, paths: PathEnsemble,
                     m: DiscreteMeasure) -> float:
    """max |delta(F u) - F delta(u) + <DF, u>_H| over paths."""
    lhs = skorohod_cylindrical(u.times(F), paths, m)
    rhs = (F.evaluate(paths) * skorohod_cylindrical(u, paths, m)
           - pathwise_h_inner(m, malliavin_derivative(F, paths), u.values(paths)))
    return float(np.max(np.abs(lhs - rhs)))


def fubini_gap(family, paths: PathEnsemble, m: DiscreteMeasure) -> float:
    """family: (weight, ElementaryProcess) pairs; compares delta of the mixture with the mixture of deltas."""
    mixture = ElementaryProcess(())
    total = np.zeros(paths.M)
    for w, u in family:
        mixture = mixture + u.scaled(w)
        total += w * skorohod_cylindrical(u, paths, m)
    return float(np.max(np.abs(skorohod_cylindrical(mixture, paths, m) - total)))


class _SkorohodFunction(SmoothFunction):
    """delta(u) as a smooth function of (Y_1, Z_1, Y_2, Z_2, ...), Z_l = int psi_l dX."""

    def __init__(self, fs, cs):
        self.fs, self.cs = fs, cs
        self.dims = [f.dim for f in fs]
        self.dim = sum(d + 1 for d in self.dims)

    def _blocks(self, y):
        pos = 0
        for f, c, d in zip(self.fs, self.cs, self.dims):
            yield f, c, y[:, pos : pos + d], y[:, pos + d], pos
            pos += d + 1

    def value(self, y):
        return sum(f.value(Y) * Z - f.grad(Y) @ c for f, c, Y, Z, _ in self._blocks(y))

    def grad(self, y):
        out = np.zeros((y.shape[0], self.dim))
        for f, c, Y, Z, pos in self._blocks(y):
            d = f.dim
            out[:, pos : pos + d] = f.grad(Y) * Z[:, None] - f.hess(Y) @ c
            out[:, pos + d] = f.value(Y)
        return out


def skorohod_functional(u: ElementaryProcess, m: DiscreteMeasure) -> CylindricalFunctional:
    """delta(u) written as a cylindrical functional."""
    integrands, fs, cs = [], [], []
    for psi, G in u.terms:
        integrands.extend(G.integrands)
        integrands.append(psi)
        fs.append(G.f)
        cs.append(np.array([h_inner(m, phi, psi) for phi in G.integrands]))
    return CylindricalFunctional(tuple(integrands), _SkorohodFunction(fs, cs))


def derivative_process(u: ElementaryProcess, cell: int) -> ElementaryProcess:
    """s -> D_t u_s for t in the given cell."""
    terms = []
    for psi, G in u.terms:
        for j, phi in enumerate(G.integrands):
            terms.append((phi.values[cell] * psi, CylindricalFunctional(G.integrands, Partial(G.f, j))))
    return ElementaryProcess(tuple(terms))


def commutation_gap(u: ElementaryProcess, paths: PathEnsemble, m: DiscreteMeasure,
                    cells=None) -> float:
    """max over paths and probe cells of |D_t delta(u) - u_t - delta(D_t u)|."""
    _check(m, paths)
    if not u.terms:
        return 0.0
    cells = range(m.grid.n) if cells is None else cells
    lhs = malliavin_derivative(skorohod_functional(u, m), paths)
    uv = u.values(paths)
    gap = 0.0
    for c in cells:
        rhs = uv[:, c] + skorohod_cylindrical(derivative_process(u, c), paths, m)
        gap = max(gap, float(np.max(np.abs(lhs[:, c] - rhs))))
    return gap


def skorohod_via_trace(fprime, fsecond, paths: PathEnsemble, m: DiscreteMeasure, upto=None) -> np.ndarray:
    """delta(f'(X) 1_[0,t]) = forward integral at eps=h minus the trace over s1 < s2.

    The trace is sum_{i<j<k} f''(X_{t_j}) mass[i][j]; with the integrand frozen
    at the left point of each cell this is the exact Skorohod integral of the
    step approximation.
    """
    _check(m, paths)
    g = paths.grid
    k = g.n if upto is None else g.index(upto)
    X = paths.paths
    fwd = forward_integral(fprime(X), paths, g.h, upto)
    w = np.tril(m.mass, -1).sum(axis=1)
    return fwd - fsecond(X[:, :k]) @ w[:k]
