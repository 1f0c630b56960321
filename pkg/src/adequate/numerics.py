"""Distribution functions, empirical-distribution metrics and a seeded
Monte Carlo quantile engine.

Everything stochastic in this package flows through :func:`substream`,
which derives an independent counter-based random stream from a seed and
a label path.  Simulated null distributions are stored as sorted samples
so that quantiles and p-values can both be read off the same table, and
are cached on disk keyed by (statistic id, sample size, replications,
seed).
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from .errors import ConfigurationError, DomainError, ParameterError

__all__ = [
    "DistFn",
    "EmpiricalDist",
    "SimSpec",
    "standard_normal",
    "student_t",
    "beta_dist",
    "poisson_dist",
    "cdf",
    "quantile",
    "kuiper_distance",
    "kolmogorov_distance",
    "kolmogorov_quantile",
    "substream",
    "simulate_quantiles",
    "null_table",
    "empirical_quantile",
    "upper_pvalue",
    "two_sided_pvalue",
    "cache_dir",
    "register_statistic",
]

CACHE_ENV_VAR = "ADEQUATE_CACHE_DIR"
CACHE_FORMAT_VERSION = 1


# ------------------------------------------------------------------ #
# Distribution functions
# ------------------------------------------------------------------ #

_KINDS = ("standard-normal", "student-t", "beta", "poisson")


@dataclass(frozen=True)
class DistFn:
    """One of the four distribution families used by the package.

    Construct through :func:`standard_normal`, :func:`student_t`,
    :func:`beta_dist` or :func:`poisson_dist`, which validate the
    parameters.
    """

    kind: str
    df: int | None = None
    a: float | None = None
    b: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")


def standard_normal() -> DistFn:
    return DistFn("standard-normal")


def student_t(df: int) -> DistFn:
    if not (isinstance(df, (int, np.integer)) and df > 0):
        raise ParameterError(f"degrees of freedom must be a positive integer, got {df!r}")
    return DistFn("student-t", df=int(df))


def beta_dist(a: float, b: float) -> DistFn:
    if not (a > 0 and b > 0):
        raise ParameterError(f"beta parameters must be positive, got a={a}, b={b}")
    return DistFn("beta", a=float(a), b=float(b))


def poisson_dist(lam: float) -> DistFn:
    if not lam > 0:
        raise ParameterError(f"poisson rate must be positive, got {lam}")
    return DistFn("poisson", lam=float(lam))


def cdf(d: DistFn, x: float):
    """P(X <= x) under ``d``.

    Accepts scalars or arrays.  The beta case requires 0 <= x <= 1;
    all cases require finite x.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("cdf argument must be finite")
    if d.kind == "standard-normal":
        out = special.ndtr(x)
    elif d.kind == "student-t":
        out = special.stdtr(d.df, x)
    elif d.kind == "beta":
        if np.any(x < 0) or np.any(x > 1):
            raise DomainError("beta cdf argument must lie in [0, 1]")
        out = special.betainc(d.a, d.b, x)
    else:  # poisson
        out = np.where(x < 0, 0.0, special.pdtr(np.floor(x), d.lam))
    return float(out) if out.ndim == 0 else out


def quantile(d: DistFn, p: float):
    """Inverse of :func:`cdf`; requires 0 < p < 1.

    For the discrete poisson case this is the smallest integer k with
    ``cdf(k) >= p``; the continuous kinds invert to ~1e-9.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p >= 1):
        raise DomainError("quantile level must lie strictly inside (0, 1)")
    if d.kind == "standard-normal":
        out = special.ndtri(p)
    elif d.kind == "student-t":
        out = special.stdtrit(d.df, p)
    elif d.kind == "beta":
        out = special.betaincinv(d.a, d.b, p)
    else:
        # smallest k with pdtr(k, lam) >= p; pdtrik gives a real-valued
        # inverse which we round and then correct by at most one step
        k = np.ceil(special.pdtrik(p, d.lam))
        k = np.where(special.pdtr(np.maximum(k - 1, 0), d.lam) >= p, k - 1, k)
        out = np.maximum(k, 0.0)
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------------ #
# Empirical distributions and distribution-free distances
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class EmpiricalDist:
    """A sorted sample of n >= 1 observations."""

    values: np.ndarray
    n: int

    @classmethod
    def from_sample(cls, values) -> "EmpiricalDist":
        arr = np.sort(np.asarray(values, dtype=float))
        if arr.size == 0:
            raise DomainError("empirical distribution needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise DomainError("observations must be finite")
        return cls(values=arr, n=arr.size)


def _sup_deviations(sorted_cdf_vals: np.ndarray) -> tuple[float, float]:
    # D+ = max_i (i/n - F(y_(i))), D- = max_i (F(y_(i)) - (i-1)/n)
    n = sorted_cdf_vals.shape[-1]
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    dplus = np.max(hi - sorted_cdf_vals, axis=-1)
    dminus = np.max(sorted_cdf_vals - lo, axis=-1)
    return dplus, dminus


def _reference_cdf_values(e: EmpiricalDist, reference: DistFn) -> np.ndarray:
    if reference.kind == "poisson":
        raise DomainError("empirical distances require a continuous reference")
    return np.asarray(cdf(reference, e.values))


def kuiper_distance(e: EmpiricalDist, reference: DistFn) -> float:
    """D+ + D- between the empirical cdf of ``e`` and the reference cdf."""
    dplus, dminus = _sup_deviations(_reference_cdf_values(e, reference))
    return float(dplus + dminus)


def kolmogorov_distance(e: EmpiricalDist, reference: DistFn) -> float:
    """max(D+, D-) between the empirical cdf of ``e`` and the reference cdf."""
    dplus, dminus = _sup_deviations(_reference_cdf_values(e, reference))
    return float(max(dplus, dminus))


# ------------------------------------------------------------------ #
# Counter-based random substreams
# ------------------------------------------------------------------ #


def substream(seed: int, *path) -> np.random.Generator:
    """Independent generator for the stream labelled by ``(seed, *path)``.

    The label is hashed into a 128-bit Philox key, so identically
    labelled streams are bit-identical on every platform and any
    partition of work across processes reproduces the serial result.
    """
    msg = ":".join(str(part) for part in (seed, *path)).encode()
    digest = hashlib.blake2b(msg, digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))


def replicate_samples(seed: int, purpose: str, n: int, start: int, count: int,
                      sampler: str = "normal") -> np.ndarray:
    """(count, n) matrix whose row i is replicate ``start + i`` of the stream.

    Each replicate owns its own substream, so any chunking of the
    replicate range yields the same rows.
    """
    out = np.empty((count, n))
    if sampler == "normal":
        for i in range(count):
            out[i] = substream(seed, purpose, n, start + i).standard_normal(n)
    elif sampler == "uniform":
        for i in range(count):
            out[i] = substream(seed, purpose, n, start + i).random(n)
    else:
        raise ConfigurationError(f"unknown sampler {sampler!r}")
    return out


# ------------------------------------------------------------------ #
# Statistic registry and simulation engine
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one reproducible simulation run."""

    n: int
    replications: int
    seed: int
    statistic: str

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("sample size must be >= 1")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")


@dataclass(frozen=True)
class _StatisticGroup:
    name: str
    sampler: str                    # "normal" | "uniform"
    columns: tuple[str, ...]
    batch: Callable[[np.ndarray], np.ndarray]   # (R, n) -> (R, k)


_GROUPS: dict[str, _StatisticGroup] = {}
_STATISTIC_INDEX: dict[str, tuple[str, int]] = {}


def register_statistic(group: _StatisticGroup) -> None:
    """Register a statistic group; member names become simulable ids."""
    _GROUPS[group.name] = group
    for i, col in enumerate(group.columns):
        _STATISTIC_INDEX[col] = (group.name, i)


def _gauss_batch(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[1]
    t1 = math.sqrt(n) * np.abs(samples.mean(axis=1))
    t2 = np.einsum("ij,ij->i", samples, samples)
    t3 = np.abs(samples).max(axis=1)
    phi = special.ndtr(np.sort(samples, axis=1))
    dplus, dminus = _sup_deviations(phi)
    t4 = dplus + dminus
    return np.stack([t1, t2, t3, t4], axis=1)


def _ko_uniform_batch(samples: np.ndarray) -> np.ndarray:
    dplus, dminus = _sup_deviations(np.sort(samples, axis=1))
    return np.maximum(dplus, dminus)[:, None]


register_statistic(_StatisticGroup(
    name="gauss4",
    sampler="normal",
    columns=("gauss_t1", "gauss_t2", "gauss_t3", "gauss_t4"),
    batch=_gauss_batch,
))
register_statistic(_StatisticGroup(
    name="ko_uniform",
    sampler="uniform",
    columns=("ko_uniform",),
    batch=_ko_uniform_batch,
))


def cache_dir() -> Path:
    """Directory for simulated null tables (override via ADEQUATE_CACHE_DIR)."""
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        path = Path(env)
    else:
        path = Path.home() / ".cache" / "adequate"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cache_path(group: str, n: int, replications: int, seed: int) -> Path:
    return cache_dir() / f"{group}_n{n}_r{replications}_s{seed}.npz"


_CHUNK_ROWS = 20_000
_MEMORY_CACHE: dict[tuple, np.ndarray] = {}


def _simulate_group(group: _StatisticGroup, n: int, replications: int, seed: int) -> np.ndarray:
    parts = []
    for start in range(0, replications, _CHUNK_ROWS):
        count = min(_CHUNK_ROWS, replications - start)
        samples = replicate_samples(seed, group.name, n, start, count, group.sampler)
        parts.append(group.batch(samples))
    values = np.concatenate(parts, axis=0)
    values.sort(axis=0)          # sorted per column
    return values


def group_table(group_name: str, n: int, replications: int, seed: int,
                use_disk_cache: bool = True) -> np.ndarray:
    """Sorted (replications, k) null sample of the statistic group.

    Generated deterministically from the seed, and cached both in memory
    and on disk.
    """
    if group_name not in _GROUPS:
        raise ConfigurationError(f"statistic group {group_name!r} is not registered")
    key = (group_name, n, replications, seed)
    if key in _MEMORY_CACHE:
        return _MEMORY_CACHE[key]
    group = _GROUPS[group_name]
    path = _cache_path(group_name, n, replications, seed)
    if use_disk_cache and path.exists():
        with np.load(path) as archive:
            if int(archive["version"]) == CACHE_FORMAT_VERSION:
                values = archive["values"]
                _MEMORY_CACHE[key] = values
                return values
    values = _simulate_group(group, n, replications, seed)
    if use_disk_cache:
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, version=CACHE_FORMAT_VERSION, group=group_name, n=n,
                 replications=replications, seed=seed,
                 columns=np.array(group.columns), values=values)
        os.replace(tmp, path)
    _MEMORY_CACHE[key] = values
    return values


def null_table(statistic: str, n: int, replications: int, seed: int) -> np.ndarray:
    """Sorted null sample of one registered statistic."""
    if statistic not in _STATISTIC_INDEX:
        raise ConfigurationError(f"statistic {statistic!r} is not registered")
    group_name, col = _STATISTIC_INDEX[statistic]
    return group_table(group_name, n, replications, seed)[:, col]


def simulate_quantiles(spec: SimSpec, probs) -> np.ndarray:
    """Empirical quantiles of a registered statistic under its null.

    Deterministic per spec: the same ``SimSpec`` always yields
    bit-identical output.
    """
    if spec.replications < 1000:
        raise ParameterError("quantile simulation needs at least 1000 replications")
    table = null_table(spec.statistic, spec.n, spec.replications, spec.seed)
    return np.array([empirical_quantile(table, p) for p in np.atleast_1d(probs)])


def empirical_quantile(sorted_values: np.ndarray, p: float) -> float:
    """Order statistic at 1-based index ceil(p * R) of a sorted sample."""
    r = len(sorted_values)
    idx = int(math.ceil(p * r)) - 1
    return float(sorted_values[min(max(idx, 0), r - 1)])


def upper_pvalue(sorted_values: np.ndarray, t) -> np.ndarray | float:
    """1 - F(t-) under the tabulated null; ties count toward the larger p."""
    r = len(sorted_values)
    p = 1.0 - np.searchsorted(sorted_values, t, side="left") / r
    return float(p) if np.ndim(t) == 0 else p


def two_sided_pvalue(sorted_values: np.ndarray, t) -> np.ndarray | float:
    """2 * min(F, 1 - F) under the tabulated null; ties favour membership."""
    r = len(sorted_values)
    f_hi = np.searchsorted(sorted_values, t, side="right") / r
    f_lo = np.searchsorted(sorted_values, t, side="left") / r
    p = np.minimum(1.0, 2.0 * np.minimum(f_hi, 1.0 - f_lo))
    return float(p) if np.ndim(t) == 0 else p


def kolmogorov_quantile(alpha_tilde: float, n: int, *, replications: int = 20_000,
                        seed: int = 1729) -> float:
    """Quantile of the Kolmogorov distance of n uniforms to the uniform cdf.

    The distance is distribution-free, so the same value applies to any
    continuous reference.  Simulated (the sample sizes of interest are
    far too small for the asymptotic series) and cached on disk.
    """
    if not 0 < alpha_tilde < 1:
        raise DomainError("quantile level must lie strictly inside (0, 1)")
    table = null_table("ko_uniform", n, replications, seed)
    return empirical_quantile(table, alpha_tilde)
