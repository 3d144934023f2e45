"""Named verification suites used by the command line."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import covmeasure as cm
from .. import kernels as kr
from .. import simulate as sm
from ..calculus import TOL, MonteCarloEstimate, combined_se
from ..errors import DomainError
from . import chaos
from .reports import (Check, gamma_decomposition_report, isometry_table, ito_checks, ito_scan,
                      qv_report, quasi_helix_report)

SUITES = ("qv", "ito", "gamma", "chaos", "quasihelix")


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)  # file name -> (header, rows)
    notes: list = field(default_factory=list)


def brownian_like(kernel: kr.KernelSpec) -> bool:
    """Kernels whose Ito correction reduces to the Brownian one, gamma(t) = t."""
    if kernel.family is kr.Family.BM:
        return True
    if kernel.family is kr.Family.GAUSS_MARTINGALE:
        return kernel.lam_name == "identity"
    if kernel.family is kr.Family.BIFBM:
        return abs(2 * kernel.H * kernel.K - 1) <= kr.CRITICAL_TOL
    return False


def suite_qv(kernel, n, T, M, seed, threads=None, method="dense", **_):
    rep = qv_report(kernel, cm.Grid(n, T), M, seed, method=method, threads=threads)
    rows = [[r["eps"], r["mean"], r["std_error"], r["expected"], r["reference"]] for r in rep.rows]
    return SuiteResult("qv", rep.checks,
                       {"qv_scan.csv": (["eps", "mean", "std_error", "expected", "reference"], rows)})


def suite_ito(kernel, n, T, M, seed, threads=None, scan=(64, 256, 1024), functions=("square", "cos"),
              method="dense", **_):
    res = SuiteResult("ito")
    rows = []
    for f in functions:
        reps = ito_scan(kernel, f, T, M, seed, ns=scan, method=method, threads=threads)
        res.checks += ito_checks(reps, brownian_like=brownian_like(kernel) and f == "square")
        for r in reps:
            for t, mu, l2 in zip(r.probes, r.residual_mean, r.residual_l2):
                rows.append([f, r.n, t, mu, l2])
    res.series["ito_residual.csv"] = (["f", "n", "t", "residual_mean", "residual_l2"], rows)
    return res


def suite_gamma(kernel, n, T, **_):
    rows, _, checks = gamma_decomposition_report(kernel, cm.Grid(n, T))
    keys = ["t", "gamma", "energy", "twice_triangle", "gap"]
    return SuiteResult("gamma", checks, {"gamma_split.csv": (keys, [[r[k] for k in keys] for r in rows])})


def suite_quasihelix(kernel, n, T, **_):
    if kernel.family is not kr.Family.BIFBM:
        raise DomainError("the quasihelix suite needs a bifbm kernel")
    summary, checks = quasi_helix_report(kernel, cm.Grid(n, T))
    res = SuiteResult("quasihelix", checks)
    res.notes.append(summary)
    return res


def suite_chaos(kernel, n, T, M, seed, threads=None, N=8, width=None, method="dense", **_):
    res = SuiteResult("chaos")
    grid = cm.Grid(n, T)
    ens = sm.simulate(kernel, grid, M, seed, method=method, threads=threads)
    rows = isometry_table(ens, kernel)
    worst = 0.0
    for r in rows:
        z = abs(r["mean"] - r["reference"]) / r["std_error"] if r["std_error"] > 0 else 0.0
        worst = max(worst, z)
    res.checks.append(Check("chaos_isometry max |z|", worst, 0.0, TOL.mc_sigmas, worst <= TOL.mc_sigmas,
                            "E I_n(s) I_m(t) = n! R(s,t)^n 1_{n=m}"))
    res.series["isometry.csv"] = (["n", "m", "s", "t", "mean", "std_error", "reference"],
                                  [[r[k] for k in ("n", "m", "s", "t", "mean", "std_error", "reference")]
                                   for r in rows])
    t, x = T, 0.0
    cfg = chaos.ChaosConfig(N, ((t, x),), width)
    sums = chaos.chaos_partial_sums(ens, cfg, kernel)[:, :, 0]
    is_bm = kernel.family is kr.Family.BM
    n0 = float(sums[0, 0])
    if is_bm:
        ref0 = math.sqrt(2 * t / math.pi)
        res.checks.append(Check("local_time zero-order term", n0, ref0, 1e-3, abs(n0 - ref0) <= 1e-3,
                                "int_0^t p_s(0) ds = sqrt(2t/pi)"))
    # different chaos orders are orthogonal, so the step norm adds the two term norms in quadrature
    tn = chaos.chaos_term_norms(kernel, grid, t, x, N)
    exact = [float(np.hypot(tn[k + 1], tn[k + 2])) for k in range(N - 1)]
    diffs = [float(np.sqrt(np.mean((sums[k + 2] - sums[k]) ** 2))) for k in range(N - 1)]
    ok = bool(np.all(np.diff(exact) <= 1e-12 * max(exact[0], 1.0))) if len(exact) > 1 else True
    res.checks.append(Check("local_time partial-sum stability", exact[-1] if exact else 0.0,
                            exact[0] if exact else 0.0, None, ok,
                            "||L_{N+2} - L_N||_2 nonincreasing in N (exact grid norms)", hard=is_bm))
    w = width or chaos.default_width(kernel, t, n, T)
    L = MonteCarloEstimate.from_samples(sums[-1])
    occ = MonteCarloEstimate.from_samples(chaos.occupation_oracle(ens, t, x, w))
    tol = TOL.mc_sigmas * combined_se(L, occ)
    res.checks.append(Check(f"local_time vs occupation (t={t:g}, x={x:g}, N={N}, width={w:.4g})",
                            L.mean, occ.mean, tol, abs(L.mean - occ.mean) <= tol,
                            "chaos expansion of the local time", hard=is_bm))
    scan = []
    for f in (8, 4, 2, 1, 0.5):
        o = MonteCarloEstimate.from_samples(chaos.occupation_oracle(ens, t, x, f * w))
        scan.append([f * w, o.mean, o.std_error])
    res.series["occupation_width_scan.csv"] = (["width", "mean", "std_error"], scan)
    res.series["local_time_partial_sums.csv"] = (
        ["N", "mean", "l2_step_mc", "l2_step_exact"],
        [[k, float(np.mean(sums[k])), diffs[k] if k < len(diffs) else float("nan"),
          exact[k] if k < len(exact) else float("nan")] for k in range(N + 1)])
    return res


RUNNERS = {"qv": suite_qv, "ito": suite_ito, "gamma": suite_gamma, "chaos": suite_chaos,
           "quasihelix": suite_quasihelix}


def run_suite(name, kernel, **params) -> list:
    """Results of one suite, or of every applicable suite for name 'all'."""
    if name == "all":
        names = [s for s in SUITES if s != "quasihelix" or kernel.family is kr.Family.BIFBM]
        return [RUNNERS[s](kernel, **params) for s in names]
    if name not in RUNNERS:
        raise DomainError(f"unknown suite {name!r}")
    return [RUNNERS[name](kernel, **params)]
