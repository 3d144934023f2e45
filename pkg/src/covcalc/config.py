"""Run configuration: defaults, JSON config files and validation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from . import kernels as kr
from .covmeasure import MAX_CELLS
from .errors import CovcalcError

MODES = ("wiener", "forward", "backward", "symmetric", "skorohod-trace")
SUITE_NAMES = ("qv", "ito", "gamma", "chaos", "quasihelix", "all")
METHODS = ("dense", "circulant", "auto")


class ConfigError(CovcalcError):
    """Invalid configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    kernel: str = "bm"
    n: int = 256
    T: float = 1.0
    M: int = 10000
    seed: int = 42
    suite: str = "all"
    mode: str = "wiener"
    integrand: str | None = None
    upto: float | None = None
    eps: float | None = None
    method: str = "dense"
    out: str | None = None
    json: str | None = None
    plotdata: str | None = None
    outdir: str | None = None
    threads: int | None = None
    scan: list = field(default_factory=lambda: [64, 256, 1024])
    N: int = 8
    width: float | None = None
    tolerances: dict = field(default_factory=dict)

    def kernel_spec(self) -> kr.KernelSpec:
        return kr.parse_kernel(self.kernel, self.T)

    def to_dict(self) -> dict:
        return asdict(self)


FIELD_TYPES = {
    "kernel": str, "n": int, "T": float, "M": int, "seed": int, "suite": str, "mode": str,
    "integrand": str, "upto": float, "eps": float, "method": str, "out": str, "json": str,
    "plotdata": str, "outdir": str, "threads": int, "scan": list, "N": int, "width": float,
    "tolerances": dict,
}
assert set(FIELD_TYPES) == {f.name for f in fields(RunConfig)}


def _coerce(key, value):
    kind = FIELD_TYPES[key]
    if value is None:
        return None
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"config key '{key}': expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key '{key}': expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"config key '{key}': expected {kind.__name__}, got {value!r}")
    return value


def load_config_file(path) -> dict:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def parse_config(file_values: dict | None = None, flag_values: dict | None = None) -> RunConfig:
    """Defaults, then file values, then flags; everything validated before use."""
    merged = {}
    for source in (file_values or {}), (flag_values or {}):
        for key, value in source.items():
            if key not in FIELD_TYPES:
                raise ConfigError(f"unknown config key '{key}'")
            if value is not None:
                merged[key] = _coerce(key, value)
    cfg = RunConfig(**merged)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        cfg.kernel_spec()
    except CovcalcError as e:
        raise ConfigError(f"kernel '{cfg.kernel}': {e}") from None
    if not 1 <= cfg.n <= MAX_CELLS:
        raise ConfigError(f"n must be in [1, {MAX_CELLS}], got {cfg.n}")
    if not cfg.T > 0:
        raise ConfigError("T must be positive")
    if cfg.M < 2:
        raise ConfigError("M must be at least 2")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.suite not in SUITE_NAMES:
        raise ConfigError(f"suite must be one of {SUITE_NAMES}, got '{cfg.suite}'")
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got '{cfg.mode}'")
    if cfg.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got '{cfg.method}'")
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    if not cfg.scan or any(not isinstance(v, int) or not 1 <= v <= MAX_CELLS for v in cfg.scan):
        raise ConfigError("scan must be a nonempty list of cell counts")
    if cfg.N < 0:
        raise ConfigError("N must be nonnegative")
    if cfg.width is not None and not cfg.width > 0:
        raise ConfigError("width must be positive")
    for k, v in cfg.tolerances.items():
        if k not in ("mc_sigmas", "exact"):
            raise ConfigError(f"unknown tolerance key '{k}'")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"tolerance '{k}' must be a positive number")
