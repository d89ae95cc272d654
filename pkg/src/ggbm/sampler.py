"""Exact sampling of d-dimensional generalized grey Brownian motion.

A ggBm path is drawn by subordination: one random scale ``tau`` with the
M-Wright density (Laplace transform ``E_beta(-s)``) multiplies ``d``
independent fractional Brownian motions with covariance
``(t**alpha + s**alpha - |t - s|**alpha) / 2``. Every finite-dimensional
marginal then has characteristic function ``E_beta(-|k|^2 t^alpha / 2)``
and its multi-time analogues.

Randomness is counter-based: path ``i`` under master seed ``m`` draws from
``Philox(SeedSequence(m, spawn_key=(i,)))`` and nothing else, so results
do not depend on batch layout or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import stats

from .fracops import cov_matrix

__all__ = [
    "N_CHOL_MAX",
    "SamplerError",
    "ModelParams",
    "TimeGrid",
    "SeedSpec",
    "GgbmPath",
    "PathBatch",
    "stable_oneside",
    "mwright_tau",
    "sample_stable_oneside",
    "sample_mwright_tau",
    "sample_fbm_cholesky",
    "sample_fbm_circulant",
    "sample_ggbm",
    "sample_paths",
    "empirical_char_fn",
    "CFEstimate",
    "moment_check",
    "MomentReport",
    "cf_two_sample",
    "TwoSampleResult",
    "self_similarity_check",
    "stationarity_check",
    "InvarianceReport",
]

#: Largest grid size accepted by the Cholesky sampler.
N_CHOL_MAX = 4096

Method = Literal["circulant", "cholesky"]


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """The triple (beta, alpha, d) indexing the ggBm family."""

    beta: float
    alpha: float
    d: int = 1

    def __post_init__(self):
        errors = []
        if not 0.0 < self.beta <= 1.0:
            errors.append(f"beta must lie in (0, 1], got {self.beta!r}")
        if not 0.0 < self.alpha < 2.0:
            errors.append(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if int(self.d) != self.d or self.d < 1:
            errors.append(f"d must be a positive integer, got {self.d!r}")
        if errors:
            raise ValueError("; ".join(errors))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "d", int(self.d))

    @property
    def subcritical(self) -> bool:
        """alpha * d < 2, the regime where the self-intersection bound is finite."""
        return self.alpha * self.d < 2.0

    @property
    def hurst(self) -> float:
        return self.alpha / 2.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_{n-1} = t_max."""

    t_max: float
    n: int

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_step(cls, dt: float, n_steps: int) -> TimeGrid:
        return cls(dt * n_steps, n_steps + 1)

    @property
    def dt(self) -> float:
        return self.t_max / (self.n - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n)

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; off-grid times are rejected."""
        pos = t / self.dt
        i = int(round(pos))
        if not 0 <= i < self.n or abs(pos - i) > 1e-9:
            raise ValueError(f"time {t!r} is not a point of {self}")
        return i


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, offset: int) -> SeedSpec:
        return SeedSpec(self.master_seed, self.stream_index + offset)


@dataclass(frozen=True, eq=False)
class GgbmPath:
    params: ModelParams
    grid: TimeGrid
    values: np.ndarray  # (d, n)
    tau: float
    seed: SeedSpec

    def at(self, t: float) -> np.ndarray:
        return self.values[:, self.grid.index_of(t)]


@dataclass(eq=False)
class PathBatch:
    """Many paths sharing params and grid; ``values`` has shape (n_paths, d, n)."""

    params: ModelParams
    grid: TimeGrid
    values: np.ndarray
    taus: np.ndarray
    master_seed: int
    first_stream: int = 0

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> GgbmPath:
        return GgbmPath(
            self.params,
            self.grid,
            self.values[i],
            float(self.taus[i]),
            SeedSpec(self.master_seed, self.first_stream + i),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


# ---------------------------------------------------------------------------
# subordinator


def _kanter_a(beta: float, phi: np.ndarray) -> np.ndarray:
    # a(phi) = (sin(b phi)/sin phi)**(1/(1-b)) * sin((1-b) phi) / sin(b phi)
    sb = np.sin(beta * phi)
    return (sb / np.sin(phi)) ** (1.0 / (1.0 - beta)) * np.sin((1.0 - beta) * phi) / sb


def _uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    # rng.random is in [0, 1); 0 would put the angle at a removable endpoint
    return np.where(u == 0.0, 0.5, u)


def stable_oneside(beta: float, rng: np.random.Generator, size=None):
    """One-sided stable variates with Laplace transform exp(-s**beta).

    Kanter's representation S = (a(pi U) / E)**((1 - beta)/beta) with U
    uniform and E standard exponential; beta = 1 is the point mass at 1.
    """
    if beta == 1.0:
        return 1.0 if size is None else np.ones(size)
    u = _uniform_open(rng, size)
    e = rng.standard_exponential(size)
    return (_kanter_a(beta, np.pi * u) / e) ** ((1.0 - beta) / beta)


def mwright_tau(beta: float, rng: np.random.Generator, size=None):
    """Variates with density M_beta, i.e. S**(-beta) for S from ``stable_oneside``.

    Uses the same draws as ``stable_oneside`` but forms (E / a(pi U))**(1 - beta)
    directly, which avoids overflow of S for small beta.
    """
    if beta == 1.0:
        return 1.0 if size is None else np.ones(size)
    u = _uniform_open(rng, size)
    e = rng.standard_exponential(size)
    return (e / _kanter_a(beta, np.pi * u)) ** (1.0 - beta)


def sample_stable_oneside(beta: float, seed: SeedSpec) -> float:
    return float(stable_oneside(beta, seed.generator()))


def sample_mwright_tau(beta: float, seed: SeedSpec) -> float:
    return float(mwright_tau(beta, seed.generator()))


# ---------------------------------------------------------------------------
# fractional Brownian motion


@lru_cache(maxsize=32)
def _cholesky_factor(alpha: float, grid: TimeGrid) -> np.ndarray:
    if grid.n > N_CHOL_MAX:
        raise SamplerError(f"Cholesky sampler supports n <= {N_CHOL_MAX}, got {grid.n}")
    cov = cov_matrix(alpha, grid.times[1:])
    step = 1e-12 * np.trace(cov) / cov.shape[0]
    jitter = 0.0
    for attempt in range(4):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            jitter += step
    raise SamplerError(f"covariance not positive definite after jitter {jitter - step:.3g}")


@lru_cache(maxsize=32)
def _circulant_sqrt_eigs(alpha: float, grid: TimeGrid) -> np.ndarray:
    m = grid.n - 1
    k = np.arange(m + 1, dtype=float)
    # autocovariance of increments over a step dt
    gamma = 0.5 * grid.dt**alpha * (
        np.abs(k + 1) ** alpha - 2 * k**alpha + np.abs(k - 1) ** alpha
    )
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-9 * lam.max():
        raise SamplerError(
            f"circulant embedding has a negative eigenvalue {lam.min():.3g} "
            f"(alpha={alpha}, n={grid.n})"
        )
    return np.sqrt(np.clip(lam, 0.0, None) / row.size)


def _fbm_cholesky(alpha: float, grid: TimeGrid, z: np.ndarray) -> np.ndarray:
    """Rows of ``z`` (..., n-1) standard normals -> fBm paths (..., n)."""
    chol = _cholesky_factor(alpha, grid)
    out = np.zeros(z.shape[:-1] + (grid.n,))
    out[..., 1:] = z @ chol.T
    return out


def _fbm_circulant(alpha: float, grid: TimeGrid, z: np.ndarray) -> np.ndarray:
    """``z`` (..., 2, 2(n-1)) standard normals -> fBm paths (..., n)."""
    sq = _circulant_sqrt_eigs(alpha, grid)
    m = grid.n - 1
    w = np.fft.fft(sq * (z[..., 0, :] + 1j * z[..., 1, :]), axis=-1)
    out = np.zeros(z.shape[:-2] + (grid.n,))
    np.cumsum(w.real[..., :m], axis=-1, out=out[..., 1:])
    return out


def _normals_shape(method: Method, grid: TimeGrid, d: int) -> tuple[int, ...]:
    if method == "cholesky":
        return (d, grid.n - 1)
    if method == "circulant":
        return (d, 2, 2 * (grid.n - 1))
    raise ValueError(f"unknown fBm method {method!r}")


def _fbm(method: Method, alpha: float, grid: TimeGrid, z: np.ndarray) -> np.ndarray:
    if method == "cholesky":
        return _fbm_cholesky(alpha, grid, z)
    return _fbm_circulant(alpha, grid, z)


def sample_fbm_cholesky(alpha: float, grid: TimeGrid, seed: SeedSpec) -> np.ndarray:
    """One fBm path on ``grid`` with covariance cov_kernel, by Cholesky."""
    z = seed.generator().standard_normal(grid.n - 1)
    return _fbm_cholesky(alpha, grid, z)


def sample_fbm_circulant(alpha: float, grid: TimeGrid, seed: SeedSpec) -> np.ndarray:
    """Same law as ``sample_fbm_cholesky`` via circulant embedding of the
    increments (Davies-Harte), O(n log n)."""
    z = seed.generator().standard_normal((2, 2 * (grid.n - 1)))
    return _fbm_circulant(alpha, grid, z)


# ---------------------------------------------------------------------------
# ggBm


def _draw_path(params: ModelParams, grid: TimeGrid, seed: SeedSpec, method: Method):
    rng = seed.generator()
    tau = float(mwright_tau(params.beta, rng))
    z = rng.standard_normal(_normals_shape(method, grid, params.d))
    return tau, z


def sample_ggbm(
    params: ModelParams, grid: TimeGrid, seed: SeedSpec, method: Method = "circulant"
) -> GgbmPath:
    """One path B(t_i) = sqrt(tau) (X_1(t_i), ..., X_d(t_i))."""
    tau, z = _draw_path(params, grid, seed, method)
    values = math.sqrt(tau) * _fbm(method, params.alpha, grid, z)
    return GgbmPath(params, grid, values, tau, seed)


def sample_paths(
    params: ModelParams,
    grid: TimeGrid,
    n_paths: int,
    master_seed: int,
    method: Method = "circulant",
    first_stream: int = 0,
    threads: int = 1,
    chunk: int = 2048,
) -> PathBatch:
    """``n_paths`` independent paths; path i uses stream ``first_stream + i``.

    The output is identical for every ``threads`` and ``chunk`` setting.
    """
    shape = _normals_shape(method, grid, params.d)
    values = np.empty((n_paths, params.d, grid.n))
    taus = np.empty(n_paths)

    def work(lo: int) -> None:
        hi = min(lo + chunk, n_paths)
        z = np.empty((hi - lo,) + shape)
        for i in range(lo, hi):
            tau, z[i - lo] = _draw_path(params, grid, SeedSpec(master_seed, first_stream + i), method)
            taus[i] = tau
        values[lo:hi] = np.sqrt(taus[lo:hi])[:, None, None] * _fbm(method, params.alpha, grid, z)

    starts = range(0, n_paths, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return PathBatch(params, grid, values, taus, master_seed, first_stream)


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class CFEstimate:
    """Sample mean of exp(i (k, B(t))) with per-component standard errors."""

    mean: complex
    stderr_re: float
    stderr_im: float
    n: int

    @property
    def stderr(self) -> float:
        return math.hypot(self.stderr_re, self.stderr_im)

    def zscore(self, target: complex) -> float:
        """Largest of the real/imaginary deviations in standard errors."""
        def z(dev: float, se: float) -> float:
            if se == 0.0:
                return 0.0 if dev == 0.0 else math.inf
            return abs(dev) / se

        dev = self.mean - target
        return max(z(dev.real, self.stderr_re), z(dev.imag, self.stderr_im))


def _cf_from_phase(phase: np.ndarray) -> CFEstimate:
    n = phase.size
    c, s = np.cos(phase), np.sin(phase)
    return CFEstimate(
        complex(c.mean(), s.mean()),
        float(c.std(ddof=1) / math.sqrt(n)),
        float(s.std(ddof=1) / math.sqrt(n)),
        n,
    )


def empirical_char_fn(paths, k, t: float) -> CFEstimate:
    """Mean and standard error of exp(i (k, B(t))) over ``paths``.

    ``paths`` is a PathBatch or a sequence of GgbmPath on a common grid;
    ``t`` must be a grid point.
    """
    if isinstance(paths, PathBatch):
        grid, values = paths.grid, paths.values
    else:
        paths = list(paths)
        if not paths:
            raise ValueError("need at least two paths")
        grid = paths[0].grid
        values = np.stack([p.values for p in paths])
    if values.shape[0] < 2:
        raise ValueError("need at least two paths")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (values.shape[1],):
        raise ValueError(f"k must have length d={values.shape[1]}")
    i = grid.index_of(t)
    return _cf_from_phase(values[:, :, i] @ k)


@dataclass(frozen=True)
class MomentReport:
    beta: float
    phi_norm_sq: float
    n: int
    n_samples: int
    even_moment: float
    even_stderr: float
    even_target: float
    even_z: float
    odd_moment: float
    odd_stderr: float
    odd_z: float

    def passed(self, z_max: float = 4.0) -> bool:
        return self.even_z <= z_max and self.odd_z <= z_max


def grey_noise_moment(beta: float, phi_norm_sq: float, n: int) -> float:
    """(2n)! / (2**n Gamma(beta n + 1)) |phi|**(2n)."""
    return math.factorial(2 * n) / (2**n * math.gamma(beta * n + 1)) * phi_norm_sq**n


def moment_check(
    beta: float, phi_norm_sq: float, n: int, n_samples: int, seed: SeedSpec
) -> MomentReport:
    """Monte Carlo check of the grey-noise moments of <w, phi> = sqrt(tau) G.

    Compares the 2n-th moment with its closed form and the (2n+1)-th with 0.
    """
    if not 1 <= n <= 4:
        raise ValueError("moment order n must lie in [1, 4]")
    rng = seed.generator()
    tau = mwright_tau(beta, rng, n_samples)
    x = np.sqrt(tau * phi_norm_sq) * rng.standard_normal(n_samples)
    ev = x ** (2 * n)
    od = x ** (2 * n + 1)
    root = math.sqrt(n_samples)
    ev_m, ev_se = float(ev.mean()), float(ev.std(ddof=1) / root)
    od_m, od_se = float(od.mean()), float(od.std(ddof=1) / root)
    target = grey_noise_moment(beta, phi_norm_sq, n)
    return MomentReport(
        beta, phi_norm_sq, n, n_samples,
        ev_m, ev_se, target, abs(ev_m - target) / ev_se,
        od_m, od_se, abs(od_m) / od_se,
    )


@dataclass(frozen=True)
class TwoSampleResult:
    statistic: float  # largest |z| over probes and components
    threshold: float
    max_abs_diff: float  # largest |CF_x - CF_y|
    diff_stderr: float  # its standard error
    n_probes: int

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold


def cf_two_sample(x: np.ndarray, y: np.ndarray, probes: np.ndarray, level: float = 0.01) -> TwoSampleResult:
    """Two-sample test comparing empirical characteristic functions.

    For every probe frequency the real and imaginary CF differences are
    standardized; the null is rejected when any |z| exceeds the
    Bonferroni-corrected two-sided normal quantile at ``level``.
    """
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    y = np.asarray(y, dtype=float).reshape(len(y), -1)
    probes = np.atleast_2d(probes)
    zmax = 0.0
    dmax = 0.0
    dse = 0.0
    for w in probes:
        a = _cf_from_phase(x @ w)
        b = _cf_from_phase(y @ w)
        dre = a.mean.real - b.mean.real
        dim = a.mean.imag - b.mean.imag
        sre = math.hypot(a.stderr_re, b.stderr_re)
        sim = math.hypot(a.stderr_im, b.stderr_im)
        zmax = max(zmax, abs(dre) / sre, abs(dim) / sim)
        d = math.hypot(dre, dim)
        if d >= dmax:
            dmax, dse = d, math.hypot(sre, sim)
    thr = float(stats.norm.isf(level / (4 * len(probes))))
    return TwoSampleResult(zmax, thr, dmax, dse, len(probes))


def default_probes(cov: np.ndarray, n_probes: int, seed: SeedSpec, scales=(0.5, 1.0, 2.0)) -> np.ndarray:
    """Random probe frequencies scaled so each projection has O(1) spread."""
    rng = seed.generator()
    out = []
    for j in range(n_probes):
        v = rng.standard_normal(cov.shape[0])
        v /= math.sqrt(float(v @ cov @ v))
        out.append(scales[j % len(scales)] * v)
    return np.array(out)


@dataclass(frozen=True)
class InvarianceReport:
    kind: str  # "self-similarity" or "stationarity"
    params: ModelParams
    shift: float  # a or h
    times: tuple
    n_samples: int
    test: TwoSampleResult = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.test.passed


def _grid_for(times: Iterable[float], step: float) -> TimeGrid:
    t_max = max(times)
    n_steps = int(round(t_max / step))
    return TimeGrid.from_step(step, n_steps)


def self_similarity_check(
    params: ModelParams,
    a: float,
    n_samples: int,
    seed: SeedSpec,
    times: Sequence[float] = (0.5, 1.0),
    step: float = 0.05,
    n_probes: int = 12,
    level: float = 0.01,
) -> InvarianceReport:
    """Compare the laws of (B(a t_1), ..., B(a t_k)) and a**(alpha/2) (B(t_1), ...).

    The two samples come from disjoint seed streams. ``a`` is accepted in
    [0.25, 4]; every t_j and a t_j must fall on the grid of spacing ``step``.
    """
    if not 0.25 <= a <= 4.0:
        raise ValueError("a must lie in [0.25, 4]")
    times = tuple(float(t) for t in times)
    scaled = tuple(a * t for t in times)
    grid = _grid_for(times + scaled, step)
    idx = [grid.index_of(t) for t in times]
    idx_a = [grid.index_of(t) for t in scaled]
    first = sample_paths(params, grid, n_samples, seed.master_seed, "cholesky", seed.stream_index)
    second = sample_paths(params, grid, n_samples, seed.master_seed, "cholesky", seed.stream_index + n_samples)
    x = first.values[:, :, idx_a]
    y = a ** (params.alpha / 2) * second.values[:, :, idx]
    cov = np.kron(np.eye(params.d), cov_matrix(params.alpha, np.array(scaled)))
    probes = default_probes(cov, n_probes, seed.child(2 * n_samples))
    return InvarianceReport(
        "self-similarity", params, a, times, n_samples, cf_two_sample(x, y, probes, level)
    )


def stationarity_check(
    params: ModelParams,
    h: float,
    n_samples: int,
    seed: SeedSpec,
    times: Sequence[float] = (0.5, 1.0),
    step: float = 0.05,
    n_probes: int = 12,
    level: float = 0.01,
) -> InvarianceReport:
    """Compare the laws of (B(t_j + h) - B(h))_j and (B(t_j))_j."""
    times = tuple(float(t) for t in times)
    grid = _grid_for(times + tuple(t + h for t in times) + (h,), step)
    idx = [grid.index_of(t) for t in times]
    idx_h = [grid.index_of(t + h) for t in times]
    i_h = grid.index_of(h)
    first = sample_paths(params, grid, n_samples, seed.master_seed, "cholesky", seed.stream_index)
    second = sample_paths(params, grid, n_samples, seed.master_seed, "cholesky", seed.stream_index + n_samples)
    x = first.values[:, :, idx_h] - first.values[:, :, i_h : i_h + 1]
    y = second.values[:, :, idx]
    cov = np.kron(np.eye(params.d), cov_matrix(params.alpha, np.array(times)))
    probes = default_probes(cov, n_probes, seed.child(2 * n_samples))
    return InvarianceReport(
        "stationarity", params, h, times, n_samples, cf_two_sample(x, y, probes, level)
    )
