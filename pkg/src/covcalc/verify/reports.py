"""Verification reports: quadratic variation, Ito residuals, gamma split, quasi-helix."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import covmeasure as cm
from .. import kernels as kr
from .. import simulate as sm
from ..calculus import TOL, MonteCarloEstimate, covariation, expected_covariation
from ..calculus.malliavin import skorohod_via_trace
from ..calculus.smooth import scalar_function
from ..errors import DomainError


@dataclass
class Check:
    name: str
    value: float
    reference: float | None
    tolerance: float | None
    passed: bool
    tag: str
    hard: bool = True

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "reference": self.reference,
                "tolerance": self.tolerance, "pass": bool(self.passed), "tag": self.tag,
                "hard": self.hard}

    def line(self) -> str:
        status = "PASS" if self.passed else ("FAIL" if self.hard else "WARN")
        ref = "-" if self.reference is None else f"{self.reference:.6g}"
        tol = "-" if self.tolerance is None else f"{self.tolerance:.3g}"
        return f"{status} {self.name}: value={self.value:.6g} reference={ref} tolerance={tol} [{self.tag}]"


# ---------------------------------------------------------------- quadratic variation

def default_eps(grid: cm.Grid):
    """2^-4 T .. 2^-8 T, keeping multiples of h."""
    out = [grid.T * 2.0 ** -j for j in range(4, 9)]
    return [e for e in out if e >= grid.h * (1 - 1e-12)]


@dataclass
class QVReport:
    kernel: str
    t: float
    rows: list = field(default_factory=list)
    reference: float = 0.0
    reference_kind: str = "closed form"
    checks: list = field(default_factory=list)


def qv_report(kernel: kr.KernelSpec, grid: cm.Grid, M: int, seed: int, eps_list=None,
              t: float | None = None, method: str = "dense", threads=None) -> QVReport:
    """Means of C_eps(X, X, t) over an eps scan against the diagonal mass mu(D_t).

    Paths are drawn on the grid continued past T by the largest eps so that
    X_{s+eps} is a genuine value of the process for every s <= t.
    """
    t = grid.T if t is None else t
    k_t = grid.index(t)
    eps_list = sorted(default_eps(grid) if eps_list is None else eps_list, reverse=True)
    k_max = max(round(e / grid.h) for e in eps_list)
    ext = grid.extended(k_max)
    kext = kernel.with_horizon(ext.T)
    ens = sm.simulate(kext, ext, M, seed, method=method, threads=threads)
    mext = cm.build_measure(kext, ext)
    ref = kr.energy_closed_form(kernel, t)
    kind = "closed form"
    if ref is None:
        ref = float(cm.energy_curve(cm.build_measure(kernel, grid))[k_t])
        kind = "grid energy"
    rep = QVReport(kernel.id, t, reference=float(ref), reference_kind=kind)
    for e in eps_list:
        est = MonteCarloEstimate.from_samples(covariation(ens, eps=e, upto=t))
        rep.rows.append({"eps": e, "mean": est.mean, "std_error": est.std_error,
                         "expected": expected_covariation(mext, e, upto=t), "reference": float(ref)})
    last = rep.rows[-1]
    for r in rep.rows:
        tol = TOL.mc_sigmas * r["std_error"]
        rep.checks.append(Check(f"qv_sampling eps={r['eps']:.6g}", r["mean"], r["expected"], tol,
                                abs(r["mean"] - r["expected"]) <= tol,
                                "E C_eps computed from the cell masses"))
    tol = TOL.mc_sigmas * last["std_error"]
    rep.checks.append(Check(f"qv_limit t={t:g} eps={last['eps']:.6g}", last["mean"], float(ref), tol,
                            abs(last["mean"] - ref) <= tol,
                            "[X,X]_t = mu(D_t), " + kind))
    gaps = [abs(r["expected"] - ref) for r in rep.rows]
    rep.checks.append(Check("qv_bias_trend", gaps[-1], 0.0, None,
                            bool(np.all(np.diff(gaps) <= 1e-12)),
                            "|E C_eps - mu(D_t)| nonincreasing as eps decreases", hard=False))
    return rep


# ---------------------------------------------------------------- Ito formula

@dataclass
class ItoReport:
    kernel: str
    f: str
    probes: list
    residual_mean: list
    residual_l2: list
    n: int
    M: int
    eps_policy: str = "forward integral at eps = h"


def default_probes(T: float):
    return [T / 4, T / 2, 3 * T / 4, T]


def ito_residual(kernel: kr.KernelSpec, f, grid: cm.Grid, M: int, seed: int, probes=None,
                 method: str = "dense", threads=None, paths=None) -> ItoReport:
    """f(X_t) - f(0) - delta(f'(X) 1_[0,t]) - 1/2 sum_i f''(X_{t_i}) (gamma(t_{i+1}) - gamma(t_i))."""
    fn = scalar_function(f)
    if not fn.bounded_second:
        raise DomainError(f"function {fn.name!r} has an unbounded second derivative")
    probes = default_probes(grid.T) if probes is None else list(probes)
    ens = paths if paths is not None else sm.simulate(kernel, grid, M, seed, method=method, threads=threads)
    m = cm.build_measure(kernel, grid)
    X = ens.paths
    dgamma = np.diff(kr.variance_curve(kernel, grid.points))
    f2 = fn.f2(X)
    means, l2s = [], []
    for t in probes:
        k = grid.index(t)
        delta = skorohod_via_trace(fn.f1, fn.f2, ens, m, upto=t)
        corr = 0.5 * f2[:, :k] @ dgamma[:k]
        r = fn.f(X[:, k]) - fn.f(0.0) - delta - corr
        means.append(float(np.mean(r)))
        l2s.append(float(np.sqrt(np.mean(r * r))))
    return ItoReport(kernel.id, fn.name, probes, means, l2s, grid.n, ens.M)


def ito_scan(kernel: kr.KernelSpec, f, T: float, M: int, seed: int, ns=(64, 256, 1024), probes=None,
             method: str = "dense", threads=None):
    return [ito_residual(kernel, f, cm.Grid(n, T), M, seed, probes, method, threads) for n in ns]


def ito_checks(reports, brownian_like: bool = False, threshold: float = 0.02, ratio_band=(1.4, 2.6)):
    """Decrease across the scan; for Brownian-like kernels also the size and halving criteria."""
    checks = []
    first, last = reports[0], reports[-1]
    for j, t in enumerate(last.probes):
        seq = [r.residual_l2[j] for r in reports]
        checks.append(Check(f"ito_trend {last.f} t={t:g}", seq[-1], seq[0], None,
                            bool(np.all(np.diff(seq) < 0)),
                            "Ito formula with 1/2 f'' d gamma correction, residual decreasing in n"))
        if brownian_like:
            checks.append(Check(f"ito_size {last.f} t={t:g} n={last.n}", seq[-1], threshold, threshold,
                                seq[-1] < threshold, "Ito formula residual L2 bound"))
            if len(reports) >= 2:
                ratio = reports[-2].residual_l2[j] / seq[-1]
                checks.append(Check(f"ito_halving {last.f} t={t:g}", ratio, 2.0, 0.6,
                                    ratio_band[0] <= ratio <= ratio_band[1],
                                    "residual L2 ~ h^(1/2): ratio over a 4x refinement"))
    return checks


# ---------------------------------------------------------------- gamma split

def gamma_decomposition_report(kernel: kr.KernelSpec, grid: cm.Grid):
    """Rows (t_k, gamma, E_n, 2 triangle, gap) and the max absolute gap."""
    m = cm.build_measure(kernel, grid)
    gamma = kr.variance_curve(kernel, grid.points)
    e = cm.energy_curve(m)
    tri = cm.triangle_curve(m)
    gap = gamma - e - 2 * tri
    rows = [{"t": float(t), "gamma": float(a), "energy": float(b), "twice_triangle": float(2 * c),
             "gap": float(d)} for t, a, b, c, d in zip(grid.points, gamma, e, tri, gap)]
    mx = float(np.max(np.abs(gap)))
    checks = [Check("gamma_split max gap", mx, 0.0, TOL.exact, mx <= TOL.exact,
                    "gamma(t) = E(t) + 2 mu(Delta_t)")]
    return rows, mx, checks


# ---------------------------------------------------------------- quasi-helix

def quasi_helix_report(kernel: kr.KernelSpec, grid: cm.Grid, rel_tol: float = 1e-12):
    """Checks 2^-K |t-s|^{2HK} <= d^2(s,t) <= 2^{1-K} |t-s|^{2HK} for all grid pairs s < t."""
    p = grid.points
    S, U = np.meshgrid(p, p, indexing="ij")
    iu = np.triu_indices(len(p), 1)
    s, t = S[iu], U[iu]
    d2 = kr.canonical_distance_sq(kernel, s, t)
    lo, hi = kr.quasi_helix_bounds(kernel, s, t)
    bad = (d2 < lo * (1 - rel_tol)) | (d2 > hi * (1 + rel_tol))
    summary = {"pairs": int(len(s)), "violations": int(bad.sum()),
               "min_ratio_lower": float(np.min(d2 / lo)), "max_ratio_upper": float(np.max(d2 / hi))}
    if bad.any():
        i = int(np.argmax(bad))
        summary["offending_pair"] = (float(s[i]), float(t[i]))
    check = Check("quasi_helix violations", float(summary["violations"]), 0.0, 0.0,
                  summary["violations"] == 0, "quasi-helix bounds on d^2(s,t)")
    return summary, [check]


def isometry_table(paths, kernel, orders=(1, 2, 3), probes=None):
    """MC E[I_n(s) I_m(t)] against n! R(s,t)^n (n = m) or 0 (n != m)."""
    from .chaos import multiple_integral_indicator

    T = paths.grid.T
    probes = probes or [T / 3, 2 * T / 3, T]
    probes = [paths.grid.points[paths.grid.index(round(p / paths.grid.h) * paths.grid.h)] for p in probes]
    I = {(n, s): multiple_integral_indicator(n, s, paths, kernel) for n in orders for s in probes}
    rows = []
    for n in orders:
        for mm in orders:
            for s in probes:
                for t in probes:
                    est = MonteCarloEstimate.from_samples(I[(n, s)] * I[(mm, t)])
                    ref = math.factorial(n) * float(kr.eval_covariance(kernel, s, t)) ** n if n == mm else 0.0
                    rows.append({"n": n, "m": mm, "s": s, "t": t, "mean": est.mean,
                                 "std_error": est.std_error, "reference": ref})
    return rows
