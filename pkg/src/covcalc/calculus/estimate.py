"""Monte Carlo estimates with standard errors."""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, fields

import numpy as np

from ..errors import DomainError

# sigma multiple used by every Monte Carlo acceptance check
MC_SIGMAS = 4.0
# absolute tolerance for identities that hold exactly on the grid
EXACT_TOL = 1e-10


@dataclass
class Tolerances:
    """Process-wide tolerance settings read by every check."""
    mc_sigmas: float = MC_SIGMAS
    exact: float = EXACT_TOL


TOL = Tolerances()


@contextmanager
def override_tolerances(**kw):
    names = {f.name for f in fields(Tolerances)}
    bad = set(kw) - names
    if bad:
        raise DomainError(f"unknown tolerance(s) {sorted(bad)}")
    old = {k: getattr(TOL, k) for k in kw}
    for k, v in kw.items():
        if not float(v) > 0:
            raise DomainError(f"tolerance {k} must be positive")
        setattr(TOL, k, float(v))
    try:
        yield TOL
    finally:
        for k, v in old.items():
            setattr(TOL, k, v)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    M: int

    @classmethod
    def from_samples(cls, x) -> "MonteCarloEstimate":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size < 2:
            raise DomainError("need at least two samples")
        # numpy reduces contiguous arrays pairwise, in a fixed order
        return cls(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size)), int(x.size))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "M": self.M}


def combined_se(a: MonteCarloEstimate, b: MonteCarloEstimate) -> float:
    return math.hypot(a.std_error, b.std_error)


def agree(a: MonteCarloEstimate, b, sigmas: float | None = None) -> bool:
    """|a - b| within `sigmas` combined standard errors (b may be an exact number)."""
    sigmas = TOL.mc_sigmas if sigmas is None else sigmas
    if isinstance(b, MonteCarloEstimate):
        return abs(a.mean - b.mean) <= sigmas * combined_se(a, b)
    return abs(a.mean - float(b)) <= sigmas * a.std_error


def variance_estimate(x) -> MonteCarloEstimate:
    """Sample variance (zero-mean known) with the standard error of x^2's mean."""
    return MonteCarloEstimate.from_samples(np.asarray(x, dtype=float) ** 2)
