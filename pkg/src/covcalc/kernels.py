"""Covariance kernels of Gaussian processes with a covariance measure.

Each kernel is an immutable :class:`KernelSpec`.  The functions below evaluate
R(s, t), the off-diagonal density of the measure dR, the diagonal (energy)
part and the variance curve gamma(t) = R(t, t).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, UnsupportedError

# |2HK - 1| below this counts as the critical bifractional case for closed forms
CRITICAL_TOL = 1e-3


class Family(str, Enum):
    FBM = "fbm"
    BIFBM = "bifbm"
    GAUSS_MARTINGALE = "martingale"
    MIXED_FBM = "mixedfbm"
    STATIONARY_INC = "statinc"
    BM = "bm"


def gpow(x, p):
    """x**p for x >= 0 with the convention 0**p = 0 (also for p <= 0)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(p * np.log(np.where(x > 0, x, 1.0)))
    return np.where(x > 0, out, 0.0)


# ---------------------------------------------------------------- lambda library

LAMBDAS: dict[str, Callable] = {
    "identity": lambda t: np.asarray(t, dtype=float),
    "square": lambda t: np.asarray(t, dtype=float) ** 2,
    "sqrt": lambda t: np.sqrt(np.asarray(t, dtype=float)),
    "expm1": lambda t: np.expm1(np.asarray(t, dtype=float)),
    "zero": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
}


# ---------------------------------------------------------------- Q library

@dataclass(frozen=True)
class QFunction:
    """Even function Q with Q(0)=0 and, optionally, the decomposition of Q''.

    ``atoms`` lists (location, weight) of the atomic part of Q''; ``ac`` is the
    density of its absolutely continuous part (None when unknown).
    """
    name: str
    func: Callable = field(compare=False, repr=False)
    atoms: Optional[tuple] = None
    ac: Optional[Callable] = field(default=None, compare=False, repr=False)
    H: Optional[float] = None

    def __call__(self, t):
        return self.func(np.abs(np.asarray(t, dtype=float)))


def q_bm() -> QFunction:
    return QFunction("bm", lambda a: a, atoms=((0.0, 2.0),),
                     ac=lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def q_fbm(H: float) -> QFunction:
    if H > 0.5:
        ac = lambda t: 2 * H * (2 * H - 1) * gpow(np.abs(t), 2 * H - 2)
        return QFunction("fbm", lambda a: gpow(a, 2 * H), atoms=(), ac=ac, H=H)
    if H == 0.5:
        return QFunction("fbm", lambda a: a, atoms=((0.0, 2.0),),
                         ac=lambda t: np.zeros_like(np.asarray(t, dtype=float)), H=H)
    # Q'' is not a signed measure for H < 1/2
    return QFunction("fbm", lambda a: gpow(a, 2 * H), H=H)


def q_mixed(H: float) -> QFunction:
    ac = lambda t: 2 * H * (2 * H - 1) * gpow(np.abs(t), 2 * H - 2)
    return QFunction("mixed", lambda a: a + gpow(a, 2 * H), atoms=((0.0, 2.0),), ac=ac, H=H)


def q_paper_piecewise(H: float) -> QFunction:
    """Q(t) = |t| on |t| <= 1/2 and 2^{2H-1}|t|^{2H} beyond."""
    c = 2.0 ** (2 * H - 1)

    def func(a):
        return np.where(a <= 0.5, a, c * gpow(a, 2 * H))

    def ac(t):
        a = np.abs(np.asarray(t, dtype=float))
        return np.where(a > 0.5, c * 2 * H * (2 * H - 1) * gpow(a, 2 * H - 2), 0.0)

    w = 2 * H - 1
    return QFunction("paper_piecewise", func, atoms=((0.0, 2.0), (0.5, w), (-0.5, w)), ac=ac, H=H)


Q_LIBRARY = {
    "bm": lambda H: q_bm(),
    "fbm": q_fbm,
    "mixed": q_mixed,
    "paper_piecewise": q_paper_piecewise,
}


# ---------------------------------------------------------------- KernelSpec

@dataclass(frozen=True)
class KernelSpec:
    family: Family
    T: float = 1.0
    H: Optional[float] = None
    K: Optional[float] = None
    lam: Optional[Callable] = field(default=None, compare=False, repr=False)
    lam_name: Optional[str] = None
    Q: Optional[QFunction] = None

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise DomainError(f"horizon T must be positive, got {self.T}")
        fam = self.family
        if fam in (Family.FBM, Family.BIFBM, Family.MIXED_FBM):
            if self.H is None or not 0 < self.H < 1:
                raise DomainError(f"{fam.value}: need 0 < H < 1, got H={self.H}")
        if fam is Family.BIFBM and (self.K is None or not 0 < self.K <= 1):
            raise DomainError(f"bifbm: need 0 < K <= 1, got K={self.K}")
        if fam is Family.MIXED_FBM and not self.H > 0.5:
            raise DomainError(f"mixedfbm: need 1/2 < H < 1, got H={self.H}")
        if fam is Family.GAUSS_MARTINGALE:
            if self.lam is None:
                raise DomainError("martingale: lambda is required")
            if abs(float(self.lam(0.0))) > 1e-14:
                raise DomainError("martingale: lambda(0) must be 0")
        if fam is Family.STATIONARY_INC and self.Q is None:
            raise DomainError("statinc: Q is required")

    @property
    def id(self) -> str:
        return canonical_string(self)

    def with_horizon(self, T: float) -> "KernelSpec":
        return KernelSpec(self.family, T, self.H, self.K, self.lam, self.lam_name, self.Q)

    @property
    def is_stationary_increment(self) -> bool:
        return self.family in (Family.FBM, Family.MIXED_FBM, Family.STATIONARY_INC, Family.BM)

    def q_function(self) -> Optional[QFunction]:
        """Q with R = (Q(s)+Q(t)-Q(s-t))/2 for stationary-increment families."""
        if self.family is Family.BM:
            return q_bm()
        if self.family is Family.FBM:
            return q_fbm(self.H)
        if self.family is Family.MIXED_FBM:
            return q_mixed(self.H)
        if self.family is Family.STATIONARY_INC:
            return self.Q
        return None


def fbm(H: float, T: float = 1.0) -> KernelSpec:
    return KernelSpec(Family.FBM, T, H=float(H))


def bifbm(H: float, K: float, T: float = 1.0) -> KernelSpec:
    return KernelSpec(Family.BIFBM, T, H=float(H), K=float(K))


def bm(T: float = 1.0) -> KernelSpec:
    return KernelSpec(Family.BM, T)


def mixed_fbm(H: float, T: float = 1.0) -> KernelSpec:
    return KernelSpec(Family.MIXED_FBM, T, H=float(H))


def martingale(lam="identity", T: float = 1.0) -> KernelSpec:
    """Gaussian martingale with covariance lam(min(s, t)); lam is a name or a callable."""
    if isinstance(lam, str):
        key = lam.lower()
        if key not in LAMBDAS:
            raise DomainError(f"unknown lambda '{lam}', choose from {sorted(LAMBDAS)}")
        return KernelSpec(Family.GAUSS_MARTINGALE, T, lam=LAMBDAS[key], lam_name=key)
    return KernelSpec(Family.GAUSS_MARTINGALE, T, lam=lam, lam_name=None)


def stationary(Q, H: Optional[float] = None, T: float = 1.0) -> KernelSpec:
    """Stationary-increment kernel from a QFunction or a library name."""
    if isinstance(Q, str):
        key = Q.lower()
        if key not in Q_LIBRARY:
            raise DomainError(f"unknown Q '{Q}', choose from {sorted(Q_LIBRARY)}")
        if key != "bm" and (H is None or not 0 < H < 1):
            raise DomainError(f"statinc Q={key} needs 0 < H < 1")
        if key in ("mixed", "paper_piecewise") and not H > 0.5:
            raise DomainError(f"statinc Q={key} needs H > 1/2")
        Q = Q_LIBRARY[key](None if H is None else float(H))
    return KernelSpec(Family.STATIONARY_INC, T, H=Q.H, Q=Q)


# ---------------------------------------------------------------- parsing

_KEYS = {
    Family.FBM: {"h"},
    Family.BIFBM: {"h", "k"},
    Family.GAUSS_MARTINGALE: {"lambda"},
    Family.MIXED_FBM: {"h"},
    Family.STATIONARY_INC: {"q", "h"},
    Family.BM: set(),
}


def _number(key: str, text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"parameter {key}: cannot parse number '{text}'") from None


def parse_kernel(text: str, T: float = 1.0) -> KernelSpec:
    """Parse strings like 'fbm:H=0.7' or 'bifbm:H=0.75,K=2/3' (case-insensitive)."""
    s = text.strip().lower()
    name, _, rest = s.partition(":")
    try:
        fam = Family(name.strip())
    except ValueError:
        raise DomainError(f"unknown kernel family '{name}'") from None
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq:
            raise DomainError(f"malformed kernel parameter '{item}'")
        if key not in _KEYS[fam]:
            raise DomainError(f"unknown key '{key}' for kernel family {fam.value}")
        if key in params:
            raise DomainError(f"duplicate key '{key}'")
        params[key] = val.strip()
    missing = _KEYS[fam] - set(params) - ({"h"} if fam is Family.STATIONARY_INC else set())
    if missing:
        raise DomainError(f"kernel {fam.value}: missing parameter(s) {sorted(missing)}")
    if fam is Family.FBM:
        return fbm(_number("H", params["h"]), T)
    if fam is Family.BIFBM:
        return bifbm(_number("H", params["h"]), _number("K", params["k"]), T)
    if fam is Family.MIXED_FBM:
        return mixed_fbm(_number("H", params["h"]), T)
    if fam is Family.GAUSS_MARTINGALE:
        return martingale(params["lambda"], T)
    if fam is Family.STATIONARY_INC:
        H = _number("H", params["h"]) if "h" in params else None
        return stationary(params["q"], H, T)
    return bm(T)


def canonical_string(k: KernelSpec) -> str:
    fam = k.family
    if fam is Family.FBM or fam is Family.MIXED_FBM:
        return f"{fam.value}:H={k.H!r}"
    if fam is Family.BIFBM:
        return f"bifbm:H={k.H!r},K={k.K!r}"
    if fam is Family.GAUSS_MARTINGALE:
        return f"martingale:lambda={k.lam_name or 'custom'}"
    if fam is Family.STATIONARY_INC:
        if k.Q.H is None:
            return f"statinc:Q={k.Q.name}"
        return f"statinc:Q={k.Q.name},H={k.Q.H!r}"
    return "bm"


# ---------------------------------------------------------------- evaluation

def _check_times(kernel: KernelSpec, *ts):
    tol = 1e-12 * kernel.T
    out = []
    for t in ts:
        a = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(a)) or np.any(a < -tol) or np.any(a > kernel.T + tol):
            raise DomainError(f"time outside [0, {kernel.T}]")
        out.append(np.clip(a, 0.0, kernel.T))
    return out


def _is_critical(k: KernelSpec) -> bool:
    return abs(2 * k.H * k.K - 1) <= CRITICAL_TOL


def bifbm_parts(kernel: KernelSpec, s, t):
    """Split of the bifractional covariance into (R1, R2)."""
    H, K = kernel.H, kernel.K
    s, t = _check_times(kernel, s, t)
    a, b = gpow(s, 2 * H), gpow(t, 2 * H)
    c = 2.0 ** (-K)
    r1 = c * (gpow(a + b, K) - gpow(s, 2 * H * K) - gpow(t, 2 * H * K))
    r2 = c * (gpow(s, 2 * H * K) + gpow(t, 2 * H * K) - gpow(np.abs(t - s), 2 * H * K))
    return r1, r2


def eval_covariance(kernel: KernelSpec, s, t):
    """R(s, t); vectorized over broadcastable s, t."""
    s, t = _check_times(kernel, s, t)
    fam = kernel.family
    if fam is Family.BM:
        out = np.minimum(s, t)
    elif fam is Family.FBM:
        H = kernel.H
        out = 0.5 * (gpow(s, 2 * H) + gpow(t, 2 * H) - gpow(np.abs(t - s), 2 * H))
    elif fam is Family.BIFBM:
        H, K = kernel.H, kernel.K
        out = 2.0 ** (-K) * (gpow(gpow(s, 2 * H) + gpow(t, 2 * H), K)
                             - gpow(np.abs(t - s), 2 * H * K))
    elif fam is Family.GAUSS_MARTINGALE:
        out = np.asarray(kernel.lam(np.minimum(s, t)), dtype=float)
    else:
        Q = kernel.q_function()
        out = 0.5 * (Q(s) + Q(t) - Q(t - s))
    # X_0 = 0 exactly; the power forms only vanish there up to rounding
    out = np.where((s == 0) | (t == 0), 0.0, np.asarray(out, dtype=float))
    return float(out) if out.ndim == 0 else out


def variance_curve(kernel: KernelSpec, t):
    return eval_covariance(kernel, t, t)


def offdiag_density(kernel: KernelSpec, s, t):
    """Density of dR off the diagonal, or None when no such closed form exists."""
    s, t = _check_times(kernel, s, t)
    if np.any(s == t):
        raise DomainError("off-diagonal density is undefined on the diagonal s = t")
    if np.any(s <= 0) or np.any(t <= 0):
        raise DomainError("off-diagonal density needs s, t in (0, T]")
    fam = kernel.family
    d = np.abs(t - s)
    if fam in (Family.BM, Family.GAUSS_MARTINGALE):
        out = np.zeros(np.broadcast(s, t).shape)
    elif fam is Family.FBM:
        H = kernel.H
        if H < 0.5:
            return None
        out = H * (2 * H - 1) * gpow(d, 2 * H - 2)
    elif fam is Family.BIFBM:
        H, K = kernel.H, kernel.K
        if 2 * H * K < 1 and not _is_critical(kernel):
            return None
        a, b = gpow(s, 2 * H), gpow(t, 2 * H)
        out = 4 * H * H * K * (K - 1) * 2.0 ** (-K) * gpow(a + b, K - 2) * gpow(s * t, 2 * H - 1)
        if not _is_critical(kernel):
            e = 2 * H * K
            out = out + 2.0 ** (-K) * e * (e - 1) * gpow(d, e - 2)
    else:
        Q = kernel.q_function()
        if Q.atoms is None or Q.ac is None or any(loc != 0 for loc, _ in Q.atoms):
            return None
        out = 0.5 * Q.ac(d)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def energy_closed_form(kernel: KernelSpec, t):
    """Diagonal mass mu(D_t) in closed form, or None when unknown."""
    (t,) = _check_times(kernel, t)
    fam = kernel.family
    if fam is Family.BM:
        out = t
    elif fam is Family.FBM:
        if kernel.H > 0.5:
            out = np.zeros_like(t)
        elif kernel.H == 0.5:
            out = t
        else:
            return None
    elif fam is Family.BIFBM:
        if _is_critical(kernel):
            out = 2.0 ** (1 - kernel.K) * t
        elif 2 * kernel.H * kernel.K > 1:
            out = np.zeros_like(t)
        else:
            return None
    elif fam is Family.GAUSS_MARTINGALE:
        out = np.asarray(kernel.lam(t), dtype=float)
    else:
        Q = kernel.q_function()
        if Q.atoms is None:
            return None
        w0 = sum(w for loc, w in Q.atoms if loc == 0)
        out = 0.5 * w0 * t
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def q_decomposition(kernel: KernelSpec):
    """(atoms, ac_density) of Q'' for stationary-increment kernels."""
    Q = kernel.q_function()
    if Q is None or Q.atoms is None:
        raise UnsupportedError(f"no known decomposition of Q'' for {canonical_string(kernel)}")
    return list(Q.atoms), Q.ac


def quasi_helix_bounds(kernel: KernelSpec, s, t):
    """Lower and upper bounds 2^{-K}|t-s|^{2HK}, 2^{1-K}|t-s|^{2HK} of d^2(s,t)."""
    if kernel.family is not Family.BIFBM:
        raise UnsupportedError("quasi-helix bounds are stated for the bifractional kernel")
    e = 2 * kernel.H * kernel.K
    d = gpow(np.abs(np.asarray(t, float) - np.asarray(s, float)), e)
    return 2.0 ** (-kernel.K) * d, 2.0 ** (1 - kernel.K) * d


def canonical_distance_sq(kernel: KernelSpec, s, t):
    return (eval_covariance(kernel, t, t) + eval_covariance(kernel, s, s)
            - 2 * eval_covariance(kernel, s, t))
