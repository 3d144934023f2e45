"""Exact Gaussian path sampling on a uniform grid.

Increments on the grid cells have covariance equal to the cell-mass matrix of
the covariance measure, so paths are cumulative sums of A z with A A^T = G.
Normals come from one counter-based Philox stream per block of paths; block
b is keyed by (seed, stream, b) only, which makes path m a function of
(seed, m) whatever the ensemble size or worker count.
"""
from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import covmeasure as cm
from . import kernels as kr
from .errors import DomainError, KernelNotPSDError

BLOCK = 256
MAGIC = b"CVC1"
HEADER = struct.Struct("<4s4xQQQ")


@dataclass
class PathEnsemble:
    grid: cm.Grid
    paths: np.ndarray = field(repr=False)
    seed: int
    kernel: kr.KernelSpec | None = None
    metadata: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return self.paths.shape[0]

    def at(self, t: float) -> np.ndarray:
        return self.paths[:, self.grid.index(t)]

    def increments(self) -> np.ndarray:
        return np.diff(self.paths, axis=1)

    def restrict(self, n: int) -> "PathEnsemble":
        """First n cells of the grid (same spacing)."""
        g = cm.Grid(n, n * self.grid.h)
        return PathEnsemble(g, self.paths[:, : n + 1], self.seed, self.kernel,
                            dict(self.metadata), {k: v[:, : n + 1] for k, v in self.components.items()})


@dataclass
class GramFactor:
    """Linear map A from standard normals to grid increments, A A^T = G + jitter I."""
    grid: cm.Grid
    kernel: kr.KernelSpec | None
    method: str
    L: np.ndarray | None = field(default=None, repr=False)
    sqrt_eig: np.ndarray | None = field(default=None, repr=False)
    jitter: float = 0.0
    lambda_min: float | None = None

    @property
    def draws(self) -> int:
        """Standard normals consumed per path."""
        if self.method == "circulant":
            return 2 * len(self.sqrt_eig)
        return self.grid.n

    def increments(self, z: np.ndarray) -> np.ndarray:
        n = self.grid.n
        if self.method == "diagonal":
            return z * self.L
        if self.method == "cholesky":
            return z @ self.L.T
        N = len(self.sqrt_eig)
        xi = z[:, :N] + 1j * z[:, N:]
        return np.fft.fft(self.sqrt_eig * xi, axis=1).real[:, :n]

    def matrix(self) -> np.ndarray:
        """Dense n x draws matrix of the map (for checks)."""
        return self.increments(np.eye(self.draws)).T


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = os.environ.get("COVCALC_THREADS", "1")
    try:
        threads = int(threads)
    except (TypeError, ValueError):
        raise DomainError(f"invalid thread count {threads!r}") from None
    if threads < 1:
        raise DomainError("thread count must be at least 1")
    return threads


def _circulant(kernel: kr.KernelSpec, grid: cm.Grid):
    Q = kernel.q_function()
    n, h = grid.n, grid.h
    k = np.arange(n + 1, dtype=float)
    # autocovariance of the stationary increment sequence
    c = 0.5 * (Q((k + 1) * h) + Q(np.abs(k - 1) * h) - 2 * Q(k * h))
    r = np.concatenate([c, c[-2:0:-1]])
    lam = np.fft.fft(r).real
    if lam.min() < -1e-12 * lam.max():
        return None
    return np.sqrt(np.maximum(lam, 0.0) / len(r))


def gram_factor(kernel: kr.KernelSpec, grid: cm.Grid, method: str = "dense",
                measure: cm.DiscreteMeasure | None = None) -> GramFactor:
    """Factor of the increment Gram matrix.

    method: "dense" (diagonal square root or Cholesky), "circulant" (FFT
    embedding for stationary increments, falling back to dense when the
    embedding has negative eigenvalues) or "auto" (circulant for n > 1024).
    """
    if method not in ("dense", "circulant", "auto"):
        raise DomainError(f"unknown factor method {method!r}")
    use_circ = method == "circulant" or (method == "auto" and grid.n > 1024)
    if use_circ and kernel.is_stationary_increment:
        if grid.T > kernel.T * (1 + 1e-12):
            raise DomainError("grid extends beyond the kernel horizon")
        s = _circulant(kernel, grid)
        if s is not None:
            return GramFactor(grid, kernel, "circulant", sqrt_eig=s)
    G = (measure or cm.build_measure(kernel, grid)).mass
    n = grid.n
    off = G - np.diag(np.diag(G))
    if not np.any(off):
        d = np.diag(G)
        if np.any(d < 0):
            raise KernelNotPSDError("negative diagonal in increment Gram matrix", d)
        return GramFactor(grid, kernel, "diagonal", L=np.sqrt(d))
    try:
        return GramFactor(grid, kernel, "cholesky", L=np.linalg.cholesky(G))
    except np.linalg.LinAlgError:
        pass
    ev = np.linalg.eigvalsh(G)
    lam_min = float(ev[0])
    cap = 1e-10 * float(np.trace(G)) / n
    # a PSD matrix can still fail Cholesky through rounding; keep a tiny floor then
    jitter = min(max(-2 * lam_min, 1e-14 * float(np.trace(G)) / n), cap)
    try:
        L = np.linalg.cholesky(G + jitter * np.eye(n))
    except np.linalg.LinAlgError:
        raise KernelNotPSDError(
            f"Cholesky failed after jitter {jitter:.3e}; eigenvalues min {ev[0]:.3e}, "
            f"max {ev[-1]:.3e}, negative count {(ev < 0).sum()}", ev) from None
    return GramFactor(grid, kernel, "cholesky", L=L, jitter=jitter, lambda_min=lam_min)


def _block_normals(seed: int, stream: int, block: int, draws: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss)).standard_normal((BLOCK, draws))


def sample_paths(factor: GramFactor, M: int, seed: int, stream: int = 0,
                 threads=None) -> PathEnsemble:
    if M < 1:
        raise DomainError("need at least one path")
    if not 0 <= int(seed) < 2 ** 64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    n = factor.grid.n
    nblocks = -(-M // BLOCK)
    out = np.zeros((M, n + 1))

    def work(b):
        z = _block_normals(seed, stream, b, factor.draws)
        lo, hi = b * BLOCK, min((b + 1) * BLOCK, M)
        # always transform a full block: BLAS rounding depends on the row count
        inc = factor.increments(z)[: hi - lo]
        out[lo:hi, 1:] = np.cumsum(inc, axis=1)

    workers = resolve_threads(threads)
    if workers == 1 or nblocks == 1:
        for b in range(nblocks):
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(work, range(nblocks)))
    meta = {"method": factor.method, "jitter": factor.jitter, "stream": stream}
    return PathEnsemble(factor.grid, out, int(seed), factor.kernel, meta)


def simulate(kernel: kr.KernelSpec, grid: cm.Grid, M: int, seed: int,
             method: str = "dense", threads=None) -> PathEnsemble:
    if kernel.family is kr.Family.GAUSS_MARTINGALE:
        return martingale_paths(kernel.lam, grid, M, seed, threads=threads, kernel=kernel)
    return sample_paths(gram_factor(kernel, grid, method), M, seed, threads=threads)


def martingale_paths(lam, grid: cm.Grid, M: int, seed: int, threads=None,
                     kernel: kr.KernelSpec | None = None) -> PathEnsemble:
    """Time-changed Brownian motion W_{lam(t)} on the grid."""
    kernel = kernel or kr.martingale(lam, T=grid.T)
    vals = np.asarray(lam(grid.points), dtype=float)
    d = np.diff(vals)
    if np.any(d < -1e-12 * max(1.0, np.abs(vals).max())):
        i = int(np.argmin(d))
        raise DomainError(f"lambda decreases on the grid near t={grid.points[i]:.6g}")
    f = GramFactor(grid, kernel, "diagonal", L=np.sqrt(np.maximum(d, 0.0)))
    return sample_paths(f, M, seed, threads=threads)


def mixed_fbm_paths(H: float, grid: cm.Grid, M: int, seed: int, method: str = "dense",
                    threads=None) -> PathEnsemble:
    """X = W + B^H with independent Brownian and fractional components."""
    kernel = kr.mixed_fbm(H, T=grid.T)
    w = sample_paths(gram_factor(kr.bm(grid.T), grid), M, seed, stream=1, threads=threads)
    b = sample_paths(gram_factor(kr.fbm(H, grid.T), grid, method), M, seed, stream=2,
                     threads=threads)
    meta = {"method": "mixed", "jitter": b.metadata["jitter"], "stream": (1, 2)}
    return PathEnsemble(grid, w.paths + b.paths, int(seed), kernel, meta,
                        {"W": w.paths, "BH": b.paths})


# ---------------------------------------------------------------- file formats

def write_binary(ens: PathEnsemble, path) -> None:
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, ens.grid.n, ens.M, ens.seed))
        f.write(np.ascontiguousarray(ens.paths, dtype="<f8").tobytes())


def read_binary(path, T: float = 1.0) -> PathEnsemble:
    with open(path, "rb") as f:
        magic, n, M, seed = HEADER.unpack(f.read(HEADER.size))
        if magic != MAGIC:
            raise DomainError(f"{path}: not a path file (magic {magic!r})")
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != M * (n + 1):
        raise DomainError(f"{path}: expected {M * (n + 1)} values, found {data.size}")
    return PathEnsemble(cm.Grid(n, T), data.reshape(M, n + 1).astype(float), seed)


def write_csv(ens: PathEnsemble, path) -> None:
    n = ens.grid.n
    with open(path, "w", newline="\n") as f:
        f.write("path," + ",".join(f"x_{i}" for i in range(n + 1)) + "\n")
        for m, row in enumerate(ens.paths):
            f.write(f"{m}," + ",".join(format(v, ".17g") for v in row) + "\n")


def sample_moments(ens: PathEnsemble, ts):
    """Sample means and covariances of (X_t) at the given grid times."""
    X = np.stack([ens.at(t) for t in ts], axis=1)
    return X.mean(axis=0), (X.T @ X) / ens.M


def gaussianity_probe(x: np.ndarray) -> dict:
    """Jarque-Bera diagnostic of a standardized sample."""
    from scipy import stats

    z = (x - x.mean()) / x.std()
    res = stats.jarque_bera(z)
    return {"skew": float(stats.skew(z)), "excess_kurtosis": float(stats.kurtosis(z)),
            "jb": float(res.statistic), "p_value": float(res.pvalue)}
