"""Command line entry point: measure, simulate, integrate, verify, report."""
from __future__ import annotations

import argparse
import ast
import json
import math
import os
import sys

import numpy as np

from . import covmeasure as cm
from . import kernels as kr
from . import simulate as sm
from .calculus import (MonteCarloEstimate, StepFunction, backward_integral, forward_integral,
                       override_tolerances, poly_scalar, skorohod_via_trace, symmetric_integral,
                       wiener_integral)
from .config import ConfigError, RunConfig, load_config_file, parse_config
from .errors import CovcalcError, DomainError, EstimationError, KernelNotPSDError, UnsupportedError
from .verify import run_suite

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


# ---------------------------------------------------------------- helpers

def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_text(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(text)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_series(directory, name, header, rows):
    lines = [",".join(header)] + [",".join(_fmt(v) for v in r) for r in rows]
    _write_text(os.path.join(directory, name), "\n".join(lines) + "\n")


def write_measure_csv(m: cm.DiscreteMeasure, path):
    i, j = np.nonzero(m.mass)
    lines = ["i,j,mass"] + [f"{a},{b},{format(float(m.mass[a, b]), '.17g')}" for a, b in zip(i, j)]
    _write_text(path, "\n".join(lines) + "\n")


def parse_integrand(text: str, grid: cm.Grid):
    """('step', StepFunction) or ('fprime', ScalarFunction)."""
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "step":
            pieces = ast.literal_eval(body.strip())
            if isinstance(pieces, tuple) and len(pieces) == 3 and not isinstance(pieces[0], tuple):
                pieces = [pieces]
            pieces = [(float(a), float(b), float(v)) for a, b, v in pieces]
            return "step", StepFunction.from_pieces(grid, pieces)
        if kind == "indicator":
            a, b = (float(v) for v in body.split(","))
            return "step", StepFunction.indicator(grid, a, b)
        if kind == "fprime":
            sub, _, coefs = body.partition(":")
            if sub.strip().lower() != "poly":
                raise ValueError(f"unknown fprime form '{sub}'")
            return "fprime", poly_scalar([float(c) for c in coefs.split(",")])
    except (ValueError, SyntaxError, TypeError) as e:
        raise ConfigError(f"cannot parse integrand '{text}': {e}") from None
    raise ConfigError(f"unknown integrand kind '{kind}' (use step:, indicator: or fprime:poly:)")


# ---------------------------------------------------------------- commands

def cmd_measure(cfg: RunConfig) -> int:
    kernel = cfg.kernel_spec()
    m = cm.build_measure(kernel, cm.Grid(cfg.n, cfg.T))
    e = cm.energy_curve(m)
    closed = kr.energy_closed_form(kernel, cfg.T)
    print(f"kernel={kernel.id} n={cfg.n} T={cfg.T:g}")
    print(f"total mass={m.total():.12g} R(T,T)={kr.variance_curve(kernel, cfg.T):.12g}")
    print(f"planar variation={cm.planar_variation(m):.12g}")
    print(f"grid energy E_n(T)={e[-1]:.12g} closed form={'-' if closed is None else f'{closed:.12g}'}")
    if cfg.out:
        write_measure_csv(m, cfg.out)
    if cfg.plotdata:
        write_series(cfg.plotdata, "energy_curve.csv", ["t", "energy", "gamma"],
                     [[t, a, b] for t, a, b in zip(m.grid.points, e, kr.variance_curve(kernel, m.grid.points))])
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    kernel = cfg.kernel_spec()
    ens = sm.simulate(kernel, cm.Grid(cfg.n, cfg.T), cfg.M, cfg.seed, cfg.method, cfg.threads)
    var = MonteCarloEstimate.from_samples(ens.paths[:, -1] ** 2)
    print(f"kernel={kernel.id} n={cfg.n} T={cfg.T:g} M={cfg.M} seed={cfg.seed} "
          f"method={ens.metadata['method']} jitter={ens.metadata['jitter']:.3g}")
    print(f"sample Var(X_T)={var.mean:.6g} +- {var.std_error:.3g}, gamma(T)={kr.variance_curve(kernel, cfg.T):.6g}")
    if cfg.out:
        if cfg.out.endswith(".bin"):
            sm.write_binary(ens, cfg.out)
        else:
            sm.write_csv(ens, cfg.out)
    return EXIT_OK


def cmd_integrate(cfg: RunConfig) -> int:
    kernel = cfg.kernel_spec()
    grid = cm.Grid(cfg.n, cfg.T)
    if cfg.integrand is None:
        raise ConfigError("integrate needs --integrand")
    kind, obj = parse_integrand(cfg.integrand, grid)
    upto = cfg.T if cfg.upto is None else cfg.upto
    try:
        grid.index(upto)
    except DomainError as e:
        raise ConfigError(str(e)) from None
    eps = grid.h if cfg.eps is None else cfg.eps
    ens = sm.simulate(kernel, grid, cfg.M, cfg.seed, cfg.method, cfg.threads)
    mode = cfg.mode
    if mode == "wiener":
        if kind != "step":
            raise ConfigError("wiener mode needs a deterministic step or indicator integrand")
        vals = wiener_integral(ens, obj, upto)
    elif mode == "skorohod-trace":
        if kind != "fprime":
            raise ConfigError("skorohod-trace mode needs an fprime:poly: integrand")
        vals = skorohod_via_trace(obj.f1, obj.f2, ens, cm.build_measure(kernel, grid), upto)
    else:
        Y = obj if kind == "step" else obj.f1(ens.paths)
        fn = {"forward": forward_integral, "backward": backward_integral,
              "symmetric": symmetric_integral}[mode]
        vals = fn(Y, ens, eps, upto)
    est = MonteCarloEstimate.from_samples(vals)
    out = est.to_dict()
    out["metadata"] = {"kernel": kernel.id, "mode": mode, "integrand": cfg.integrand, "n": cfg.n,
                       "T": cfg.T, "seed": cfg.seed, "upto": upto,
                       "eps": eps if mode in ("forward", "backward", "symmetric") else None,
                       "method": ens.metadata["method"], "jitter": ens.metadata["jitter"]}
    text = dump_json(out)
    sys.stdout.write(text)
    if cfg.json:
        _write_text(cfg.json, text)
    return EXIT_OK


def _params(cfg: RunConfig) -> dict:
    return {"n": cfg.n, "T": cfg.T, "M": cfg.M, "seed": cfg.seed, "scan": cfg.scan, "N": cfg.N,
            "width": cfg.width, "method": cfg.method}


def _run_suites(cfg: RunConfig, suite: str):
    kernel = cfg.kernel_spec()
    return kernel, run_suite(suite, kernel, n=cfg.n, T=cfg.T, M=cfg.M, seed=cfg.seed,
                             threads=cfg.threads, scan=tuple(cfg.scan), N=cfg.N, width=cfg.width,
                             method=cfg.method)


def _report_doc(cfg, kernel, suite, results):
    checks = []
    for r in results:
        for c in r.checks:
            d = c.to_dict()
            if suite == "all":
                d["name"] = f"{r.suite}/{d['name']}"
            checks.append(d)
    doc = {"suite": suite, "kernel": kernel.id, "params": _params(cfg), "checks": checks}
    notes = [n for r in results for n in r.notes]
    if notes:
        doc["notes"] = notes
    return doc


def _exit_for(results) -> int:
    ok = all(c.passed for r in results for c in r.checks if c.hard)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_verify(cfg: RunConfig) -> int:
    kernel, results = _run_suites(cfg, cfg.suite)
    for r in results:
        for c in r.checks:
            print(f"{r.suite}: {c.line()}")
    doc = _report_doc(cfg, kernel, cfg.suite, results)
    if cfg.json:
        _write_text(cfg.json, dump_json(doc))
    if cfg.plotdata:
        for r in results:
            for name, (header, rows) in r.series.items():
                write_series(cfg.plotdata, name, header, rows)
    return _exit_for(results)


def cmd_report(cfg: RunConfig) -> int:
    """Every applicable suite plus the measure summary, written into --outdir."""
    outdir = cfg.outdir or "covcalc-report"
    kernel, results = _run_suites(cfg, "all")
    for r in results:
        for c in r.checks:
            print(f"{r.suite}: {c.line()}")
    doc = _report_doc(cfg, kernel, "all", results)
    m = cm.build_measure(kernel, cm.Grid(cfg.n, cfg.T))
    e = cm.energy_curve(m)
    doc["measure"] = {"total_mass": m.total(), "planar_variation": cm.planar_variation(m),
                      "energy_T": float(e[-1]), "energy_closed_form": kr.energy_closed_form(kernel, cfg.T)}
    _write_text(os.path.join(outdir, "report.json"), dump_json(doc))
    write_series(outdir, "energy_curve.csv", ["t", "energy", "gamma"],
                 [[t, a, b] for t, a, b in zip(m.grid.points, e, kr.variance_curve(kernel, m.grid.points))])
    for r in results:
        for name, (header, rows) in r.series.items():
            write_series(outdir, f"{r.suite}_{name}", header, rows)
    print(f"report written to {outdir}")
    return _exit_for(results)


COMMANDS = {"measure": cmd_measure, "simulate": cmd_simulate, "integrate": cmd_integrate,
            "verify": cmd_verify, "report": cmd_report}


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _scan(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid scan list '{text}'") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covcalc", description="Covariance-measure calculus workbench.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file; flags override its values")
        s.add_argument("--kernel")
        s.add_argument("--n", type=int)
        s.add_argument("--T", type=float)
        s.add_argument("--paths", dest="M", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--method", help="factorization: dense, circulant or auto")
        s.add_argument("--out")
        s.add_argument("--json")
        s.add_argument("--plotdata")
        if name == "integrate":
            s.add_argument("--mode")
            s.add_argument("--integrand")
            s.add_argument("--upto", type=float)
            s.add_argument("--eps", type=float)
        if name in ("verify", "report"):
            s.add_argument("--suite")
            s.add_argument("--scan", type=_scan, help="comma-separated cell counts for the Ito scan")
            s.add_argument("--N", type=int, help="chaos truncation order")
            s.add_argument("--width", type=float, help="occupation oracle width")
            s.add_argument("--outdir")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise ConfigError("missing command; choose from " + ", ".join(COMMANDS))
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        if flags.get("threads") is None and os.environ.get("COVCALC_THREADS"):
            try:
                flags["threads"] = int(os.environ["COVCALC_THREADS"])
            except ValueError:
                raise ConfigError("COVCALC_THREADS must be an integer") from None
        file_values = load_config_file(args.config) if args.config else {}
        cfg = parse_config(file_values, flags)
        with override_tolerances(**cfg.tolerances):
            return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, UnsupportedError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (KernelNotPSDError, EstimationError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except CovcalcError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
