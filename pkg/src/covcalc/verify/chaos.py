"""Hermite polynomials, single-kernel multiple integrals and local-time chaos sums."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels as kr
from ..errors import DomainError
from ..simulate import PathEnsemble

# minimum number of midpoint nodes for the deterministic zeroth-order term;
# the 1/sqrt(s) singularity at 0 makes the midpoint error decay like nodes^-1/2
ZERO_TERM_NODES = 2 ** 22


def hermite(n: int, x):
    """Monic probabilists' Hermite polynomial, E[H_n(Z) H_m(Z)] = n! delta_nm."""
    if n < 0:
        raise DomainError("Hermite order must be nonnegative")
    x = np.asarray(x, dtype=float)
    h0, h1 = np.ones_like(x), x
    if n == 0:
        return h0
    for k in range(1, n):
        h0, h1 = h1, x * h1 - k * h0
    return h1


def multiple_integral_indicator(n: int, s: float, paths: PathEnsemble, kernel=None) -> np.ndarray:
    """I_n(1_[0,s]^{(x) n}) = R(s,s)^{n/2} H_n(X_s / sqrt(R(s,s))) per path."""
    kernel = kernel or paths.kernel
    x = paths.at(s)
    if n == 0:
        return np.ones_like(x)
    r = float(kr.variance_curve(kernel, s))
    if r <= 0:
        return np.zeros_like(x)
    sd = math.sqrt(r)
    return sd ** n * hermite(n, x / sd)


def gaussian_density(var, x):
    var = np.asarray(var, dtype=float)
    return np.exp(-x * x / (2 * var)) / np.sqrt(2 * np.pi * var)


@dataclass(frozen=True)
class ChaosConfig:
    N: int = 8
    points: tuple = ((1.0, 0.0),)
    width: float | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise DomainError("truncation order N must be a nonnegative integer")
        if self.width is not None and not self.width > 0:
            raise DomainError("occupation width must be positive")
        object.__setattr__(self, "points", tuple((float(t), float(x)) for t, x in self.points))


def zero_order_term(kernel, t: float, x: float, n_cells: int, nodes: int = ZERO_TERM_NODES) -> float:
    """int_0^t p_{R(s,s)}(x) ds by the midpoint rule on a refinement of the n_cells grid cells."""
    m = n_cells * max(1, -(-nodes // n_cells))
    s = (np.arange(m) + 0.5) * (t / m)
    var = kr.variance_curve(kernel, s)
    dens = np.where(var > 0, gaussian_density(np.where(var > 0, var, 1.0), x), 0.0)
    return float(dens.sum() * (t / m))


def _nodes(kernel, grid, t, x):
    K = grid.index(t)
    if K == 0:
        raise DomainError("local time needs t > 0")
    nodes = np.arange(1, K + 1)
    w = np.full(K, grid.h)
    w[-1] = 0.5 * grid.h
    var = kr.variance_curve(kernel, grid.points[nodes])
    ok = var > 0
    sd = np.sqrt(np.where(ok, var, 1.0))
    dens = np.where(ok, gaussian_density(np.where(ok, var, 1.0), x), 0.0)
    return nodes, w, dens, sd


def _chaos_coef(n, w, dens, sd, x):
    return w * dens * sd ** (-n) * hermite(n, x / sd) / math.factorial(n)


def chaos_term_norms(kernel, grid, t: float, x: float, N: int) -> np.ndarray:
    """Exact L2 norms of the summands n = 0..N on the grid (the n = 0 term is deterministic, norm 0).

    E[I_n(s) I_n(u)] = n! R(s,u)^n, so the n-th summand has second moment
    n! c^T R^n c with c the node weights times the deterministic factors.
    """
    nodes, w, dens, sd = _nodes(kernel, grid, t, x)
    p = grid.points[nodes]
    R = kr.eval_covariance(kernel, *np.meshgrid(p, p, indexing="ij"))
    out = np.zeros(N + 1)
    for n in range(1, N + 1):
        c = _chaos_coef(n, w, dens, sd, x)
        out[n] = math.sqrt(max(math.factorial(n) * float(c @ (R ** n) @ c), 0.0))
    return out


def chaos_partial_sums(paths: PathEnsemble, cfg: ChaosConfig, kernel=None) -> np.ndarray:
    """Partial sums L_0..L_N at every configured (t, x); shape (N+1, M, points).

    The n-th summand is int_0^t p_R(x) R^{-n/2} H_n(x/sqrt R) I_n(1_[0,s]^n) ds / n!
    with R = R(s,s).  For n >= 1 the time integral runs over [h/2, t] with the
    grid points as nodes (weights h, and h/2 at t), so s = 0 is never touched.
    """
    kernel = kernel or paths.kernel
    g = paths.grid
    out = np.zeros((cfg.N + 1, paths.M, len(cfg.points)))
    for p, (t, x) in enumerate(cfg.points):
        nodes, w, dens, sd = _nodes(kernel, g, t, x)
        out[0, :, p] = zero_order_term(kernel, t, x, len(nodes))
        for n in range(1, cfg.N + 1):
            coef = _chaos_coef(n, w, dens, sd, x)
            I = np.stack([multiple_integral_indicator(n, g.points[i], paths, kernel) for i in nodes],
                         axis=1)
            out[n, :, p] = out[n - 1, :, p] + I @ coef
    return out


def chaos_local_time(paths: PathEnsemble, cfg: ChaosConfig, kernel=None) -> np.ndarray:
    """Truncated chaos sum L_N(t, x) per path; shape (M, points)."""
    return chaos_partial_sums(paths, cfg, kernel)[-1]


def default_width(kernel, t: float, n: int, T: float) -> float:
    """Half the typical increment size, 0.5 * sqrt(gamma(t) h / t) with h = T/n."""
    h = T / n
    return 0.5 * math.sqrt(float(kr.variance_curve(kernel, t)) * h / t)


def occupation_oracle(paths: PathEnsemble, t: float, x: float, width: float) -> np.ndarray:
    """(1/(2 width)) h #{0 <= i <= K : |X_{t_i} - x| < width} per path."""
    if not width > 0:
        raise DomainError("width must be positive")
    K = paths.grid.index(t)
    hits = np.abs(paths.paths[:, : K + 1] - x) < width
    return hits.sum(axis=1) * paths.grid.h / (2 * width)
