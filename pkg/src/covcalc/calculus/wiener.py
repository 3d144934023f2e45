"""Wiener integrals of step functions and the inner products built from the measure."""
from __future__ import annotations

import numpy as np

from ..covmeasure import DiscreteMeasure, marginal
from ..errors import DomainError
from ..simulate import PathEnsemble
from .steps import StepFunction


def _check(m: DiscreteMeasure, *fs: StepFunction):
    for f in fs:
        if f.grid != m.grid:
            raise DomainError("step function and measure live on different grids")


def h_inner(m: DiscreteMeasure, phi: StepFunction, psi: StepFunction) -> float:
    """<phi, psi>_H = sum_ij phi_i psi_j mass_ij."""
    _check(m, phi, psi)
    return float(phi.values @ m.mass @ psi.values)


def h_norm(m: DiscreteMeasure, phi: StepFunction) -> float:
    return float(np.sqrt(max(h_inner(m, phi, phi), 0.0)))


def h_abs_norm(m: DiscreteMeasure, phi: StepFunction) -> float:
    """(sum_ij |phi_i||phi_j||mass_ij|)^(1/2)."""
    _check(m, phi)
    a = np.abs(phi.values)
    return float(np.sqrt(a @ np.abs(m.mass) @ a))


def l2_nu_norm(m: DiscreteMeasure, phi: StepFunction) -> float:
    """Norm in L^2 of the marginal nu of |mu|."""
    _check(m, phi)
    return float(np.sqrt(np.sum(phi.values ** 2 * marginal(m))))


def l2_lebesgue_norm(phi: StepFunction) -> float:
    return float(np.sqrt(np.sum(phi.values ** 2) * phi.grid.h))


def norm_chain(m: DiscreteMeasure, phi: StepFunction):
    """(||phi||_H, ||phi||_|H|, ||phi||_L2(nu)); nondecreasing for every phi."""
    return h_norm(m, phi), h_abs_norm(m, phi), l2_nu_norm(m, phi)


def abs_norm_ratio_scan(m: DiscreteMeasure, rng: np.random.Generator, count: int = 100,
                        pieces: int = 6) -> float:
    """max over random phi of ||phi||^2_|H| / ||phi||^2_L2(Leb)."""
    best = 0.0
    for _ in range(count):
        phi = StepFunction.random(m.grid, rng, pieces)
        best = max(best, h_abs_norm(m, phi) ** 2 / l2_lebesgue_norm(phi) ** 2)
    return best


def _upto_index(grid, upto) -> int:
    return grid.n if upto is None else grid.index(upto)


def wiener_integral(paths: PathEnsemble, phi: StepFunction, upto=None) -> np.ndarray:
    """Per path sum_i phi_i (X_{t_{i+1} ^ upto} - X_{t_i ^ upto})."""
    if phi.grid != paths.grid:
        raise DomainError("step function and paths live on different grids")
    k = _upto_index(paths.grid, upto)
    inc = np.diff(paths.paths[:, : k + 1], axis=1)
    return inc @ phi.values[:k]


def variance_split_check(m: DiscreteMeasure, phi: StepFunction):
    """(<phi,phi>_H, diagonal part + twice the strictly lower part)."""
    _check(m, phi)
    v = phi.values
    lhs = float(v @ m.mass @ v)
    rhs = float(np.sum(v ** 2 * np.diag(m.mass)) + 2 * v @ np.tril(m.mass, -1) @ v)
    return lhs, rhs
