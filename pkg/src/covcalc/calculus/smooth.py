"""Smooth bounded functions of several variables with closed-form derivatives.

Every function maps an (M, k) array of arguments to (M,) values and exposes
``grad`` (M, k), ``hess`` (M, k, k) and, where available, ``third``
(M, k, k, k).
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial

from ..errors import DomainError

# scale of the bounded stand-in for the identity
IDENTITY_SCALE = 1e4


class SmoothFunction:
    dim: int

    def value(self, y):
        raise NotImplementedError

    def grad(self, y):
        raise NotImplementedError

    def hess(self, y):
        raise NotImplementedError

    def third(self, y):
        raise NotImplementedError(f"{type(self).__name__} has no third derivative")


def _args(y, dim):
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[1] != dim:
        raise DomainError(f"function of {dim} variables called with {y.shape[1]}")
    return y


# ---------------------------------------------------------------- 1-d profiles

class Profile:
    """g and its first three derivatives."""

    def __init__(self, name, derivs):
        self.name = name
        self._d = derivs

    def __call__(self, z, order=0):
        return self._d[order](z)


def _poly_gauss(coefs):
    # derivative of P(z) exp(-z^2/2) is (P' - z P) exp(-z^2/2)
    P = [Polynomial(coefs)]
    for _ in range(3):
        p = P[-1]
        P.append(p.deriv() - Polynomial([0, 1]) * p)
    return [lambda z, p=p: p(z) * np.exp(-0.5 * z * z) for p in P]


def _tanh_derivs(L=1.0):
    def d0(z):
        return L * np.tanh(z / L)

    def d1(z):
        return 1.0 / np.cosh(z / L) ** 2

    def d2(z):
        th = np.tanh(z / L)
        return -2.0 / L * th * (1 - th * th)

    def d3(z):
        th = np.tanh(z / L)
        s2 = 1 - th * th
        return -2.0 / L ** 2 * s2 * (1 - 3 * th * th)

    return [d0, d1, d2, d3]


PROFILES = {
    "sin": Profile("sin", [np.sin, np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z)]),
    "cos": Profile("cos", [np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z), np.sin]),
    "tanh": Profile("tanh", _tanh_derivs()),
    "identity": Profile("identity", _tanh_derivs(IDENTITY_SCALE)),
}


def poly_gauss_profile(coefs) -> Profile:
    """(c0 + c1 z + ...) exp(-z^2/2)."""
    return Profile("polygauss", _poly_gauss(coefs))


def get_profile(name) -> Profile:
    if isinstance(name, Profile):
        return name
    if name not in PROFILES:
        raise DomainError(f"unknown profile {name!r}")
    return PROFILES[name]


# ---------------------------------------------------------------- combinators

class Ridge(SmoothFunction):
    """g(a . y + b)."""

    def __init__(self, profile, a, b=0.0):
        self.g = get_profile(profile)
        self.a = np.asarray(a, dtype=float).reshape(-1)
        self.b = float(b)
        self.dim = len(self.a)

    def _z(self, y):
        return _args(y, self.dim) @ self.a + self.b

    def value(self, y):
        return self.g(self._z(y), 0)

    def grad(self, y):
        return self.g(self._z(y), 1)[:, None] * self.a

    def hess(self, y):
        return self.g(self._z(y), 2)[:, None, None] * np.outer(self.a, self.a)

    def third(self, y):
        a3 = np.einsum("i,j,k->ijk", self.a, self.a, self.a)
        return self.g(self._z(y), 3)[:, None, None, None] * a3


class Constant(SmoothFunction):
    def __init__(self, c, dim=1):
        self.c = float(c)
        self.dim = dim

    def value(self, y):
        return np.full(_args(y, self.dim).shape[0], self.c)

    def grad(self, y):
        return np.zeros(_args(y, self.dim).shape)

    def hess(self, y):
        M = _args(y, self.dim).shape[0]
        return np.zeros((M, self.dim, self.dim))

    def third(self, y):
        M = _args(y, self.dim).shape[0]
        return np.zeros((M, self.dim, self.dim, self.dim))


class Sum(SmoothFunction):
    """f1(y) + f2(y) on the same variables."""

    def __init__(self, f1, f2):
        if f1.dim != f2.dim:
            raise DomainError("summands must have the same number of variables")
        self.f1, self.f2, self.dim = f1, f2, f1.dim

    def value(self, y):
        return self.f1.value(y) + self.f2.value(y)

    def grad(self, y):
        return self.f1.grad(y) + self.f2.grad(y)

    def hess(self, y):
        return self.f1.hess(y) + self.f2.hess(y)

    def third(self, y):
        return self.f1.third(y) + self.f2.third(y)


class Product(SmoothFunction):
    """f1(y[:k1]) * f2(y[k1:]) on concatenated variables."""

    def __init__(self, f1, f2):
        self.f1, self.f2 = f1, f2
        self.k1 = f1.dim
        self.dim = f1.dim + f2.dim

    def _split(self, y):
        y = _args(y, self.dim)
        return y[:, : self.k1], y[:, self.k1 :]

    def value(self, y):
        a, b = self._split(y)
        return self.f1.value(a) * self.f2.value(b)

    def grad(self, y):
        a, b = self._split(y)
        v1, v2 = self.f1.value(a), self.f2.value(b)
        return np.concatenate([self.f1.grad(a) * v2[:, None], self.f2.grad(b) * v1[:, None]], axis=1)

    def hess(self, y):
        a, b = self._split(y)
        v1, v2 = self.f1.value(a), self.f2.value(b)
        g1, g2 = self.f1.grad(a), self.f2.grad(b)
        k1 = self.k1
        out = np.empty((len(v1), self.dim, self.dim))
        out[:, :k1, :k1] = self.f1.hess(a) * v2[:, None, None]
        out[:, k1:, k1:] = self.f2.hess(b) * v1[:, None, None]
        cross = g1[:, :, None] * g2[:, None, :]
        out[:, :k1, k1:] = cross
        out[:, k1:, :k1] = np.transpose(cross, (0, 2, 1))
        return out


class Partial(SmoothFunction):
    """The partial derivative d f / d y_j as a function in its own right."""

    def __init__(self, f, j):
        if not 0 <= j < f.dim:
            raise DomainError(f"partial index {j} out of range")
        self.f, self.j, self.dim = f, j, f.dim

    def value(self, y):
        return self.f.grad(y)[:, self.j]

    def grad(self, y):
        return self.f.hess(y)[:, self.j, :]

    def hess(self, y):
        return self.f.third(y)[:, self.j, :, :]


def random_function(rng: np.random.Generator, dim: int) -> SmoothFunction:
    """Random element of the library: a ridge or a sum of two ridges."""
    def ridge():
        kind = rng.choice(["sin", "cos", "tanh", "polygauss"])
        a = rng.normal(size=dim) / np.sqrt(dim)
        b = rng.normal() * 0.5
        if kind == "polygauss":
            return Ridge(poly_gauss_profile(rng.normal(size=3)), a, b)
        return Ridge(kind, a, b)

    f = ridge()
    return Sum(f, ridge()) if rng.random() < 0.5 else f


# ---------------------------------------------------------------- 1-d functions for Ito checks

class ScalarFunction:
    """f with f' and f''; `bounded_second` tells whether f'' is bounded."""

    def __init__(self, name, f, f1, f2, bounded_second=True):
        self.name = name
        self.f, self.f1, self.f2 = f, f1, f2
        self.bounded_second = bounded_second


SCALAR_FUNCTIONS = {
    "square": ScalarFunction("square", lambda x: 0.5 * x * x, lambda x: x, np.ones_like),
    "cos": ScalarFunction("cos", np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "sin": ScalarFunction("sin", np.sin, np.cos, lambda x: -np.sin(x)),
    "gauss": ScalarFunction("gauss", lambda x: np.exp(-0.5 * x * x),
                            lambda x: -x * np.exp(-0.5 * x * x),
                            lambda x: (x * x - 1) * np.exp(-0.5 * x * x)),
    "quartic": ScalarFunction("quartic", lambda x: x ** 4 / 12, lambda x: x ** 3 / 3,
                              lambda x: x * x, bounded_second=False),
}


def scalar_function(name) -> ScalarFunction:
    if isinstance(name, ScalarFunction):
        return name
    if name not in SCALAR_FUNCTIONS:
        raise DomainError(f"unknown function {name!r}, choose from {sorted(SCALAR_FUNCTIONS)}")
    return SCALAR_FUNCTIONS[name]


def poly_scalar(coefs_fprime) -> ScalarFunction:
    """f with f' = c0 + c1 x + ...; f(0) = 0."""
    p1 = Polynomial(coefs_fprime)
    p0, p2 = p1.integ(), p1.deriv()
    return ScalarFunction("poly", p0, p1, lambda x: p2(x) + 0 * x,
                          bounded_second=p2.degree() < 1 or not np.any(p2.coef[1:]))
