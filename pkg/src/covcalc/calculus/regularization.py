"""Regularization integrals on the grid: forward, backward, symmetric, covariation.

X is extended by its value at T after T and by 0 before time 0.  The ds
integral is a Riemann sum with step h: left points for forward integrals and
covariations, right points for backward integrals.
"""
from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..simulate import PathEnsemble
from .steps import StepFunction


def eps_cells(eps: float, h: float) -> int:
    k = int(round(eps / h))
    if k < 1 or abs(k * h - eps) > 1e-9 * h:
        raise DomainError(f"eps={eps} is not a positive multiple of the grid step {h}")
    return k


def _values(X):
    return X.paths if isinstance(X, PathEnsemble) else np.atleast_2d(np.asarray(X, dtype=float))


def _setup(X, eps, upto):
    if not isinstance(X, PathEnsemble):
        raise DomainError("X must be a PathEnsemble")
    g = X.grid
    k = eps_cells(eps, g.h)
    K = g.n if upto is None else g.index(upto)
    return g, k, K


def _integrand(Y, g, shape_m, side):
    """Integrand values at t_0..t_n, shape broadcastable to (M, n+1)."""
    if isinstance(Y, StepFunction):
        v = Y.values
        if side == "left":
            # value on ]t_i, t_{i+1}] used at t_i
            return np.concatenate([v, v[-1:]])[None, :]
        # left limit at t_i
        return np.concatenate([v[:1], v])[None, :]
    a = np.asarray(Y, dtype=float)
    if a.ndim == 0:
        return np.full((1, g.n + 1), float(a))
    a = np.atleast_2d(a)
    if a.shape[1] != g.n + 1:
        raise DomainError(f"integrand needs {g.n + 1} values per path, got {a.shape[1]}")
    return a


def _pad(x, k):
    """Constant extension by k columns on the right."""
    return np.concatenate([x, np.repeat(x[:, -1:], k, axis=1)], axis=1)


def forward_integral(Y, X: PathEnsemble, eps: float, upto=None) -> np.ndarray:
    """h * sum_{i<K} Y_{t_i} (X_{t_i+eps} - X_{t_i}) / eps per path."""
    g, k, K = _setup(X, eps, upto)
    x = _pad(X.paths, k)
    y = _integrand(Y, g, X.M, "left")
    inc = x[:, k : K + k] - x[:, :K]
    return (y[:, :K] * inc).sum(axis=1) * (g.h / eps)


def backward_integral(Y, X: PathEnsemble, eps: float, upto=None) -> np.ndarray:
    """h * sum_{1<=i<=K} Y_{t_i} (X_{t_i} - X_{t_i-eps}) / eps per path."""
    g, k, K = _setup(X, eps, upto)
    x = X.paths
    xl = np.concatenate([np.zeros((X.M, k)), x], axis=1)
    y = _integrand(Y, g, X.M, "right")
    inc = x[:, 1 : K + 1] - xl[:, 1 : K + 1]
    return (y[:, 1 : K + 1] * inc).sum(axis=1) * (g.h / eps)


def symmetric_integral(Y, X: PathEnsemble, eps: float, upto=None) -> np.ndarray:
    return 0.5 * (forward_integral(Y, X, eps, upto) + backward_integral(Y, X, eps, upto))


def covariation(X: PathEnsemble, Y=None, eps: float | None = None, upto=None) -> np.ndarray:
    """C_eps(X, Y, t) = h/eps * sum_{i<K} (X_{t_i+eps}-X_{t_i})(Y_{t_i+eps}-Y_{t_i})."""
    if eps is None:
        raise DomainError("eps is required")
    g, k, K = _setup(X, eps, upto)
    x = _pad(X.paths, k)
    dx = x[:, k : K + k] - x[:, :K]
    if Y is None:
        dy = dx
    else:
        y = _pad(_values(Y), k)
        dy = y[:, k : K + k] - y[:, :K]
    return (dx * dy).sum(axis=1) * (g.h / eps)


def expected_covariation(measure, eps: float, upto=None) -> float:
    """E C_eps(X, X, t) computed exactly from the cell masses."""
    g = measure.grid
    k = eps_cells(eps, g.h)
    K = g.n if upto is None else g.index(upto)
    c = np.zeros((g.n + 1, g.n + 1))
    c[1:, 1:] = np.cumsum(np.cumsum(measure.mass, axis=0), axis=1)
    i = np.arange(K)
    j = np.minimum(i + k, g.n)
    # variance of X_{t_j} - X_{t_i} from the cumulative masses
    d2 = c[j, j] - 2 * c[i, j] + c[i, i]
    return float(d2.sum() * g.h / eps)
