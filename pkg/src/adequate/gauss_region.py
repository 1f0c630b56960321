"""Four-statistic adequacy regions for the normal family.

A candidate pair (mu, sigma) is judged by four features of the
standardized data y = (x - mu)/sigma:

    t1 = sqrt(n) |mean(y)|        location
    t2 = sum(y_i^2)               spread, two-sided
    t3 = max |y_i|                outliers
    t4 = Kuiper distance of y     distribution shape

Each feature is compared against its simulated null distribution for
standard-normal samples of the same size.  A pair is adequate at level
alpha when the smallest of its four p-values stays above 1 - alpha_tilde,
where alpha_tilde is the per-feature level calibrated so that the region
has content alpha.  On top of the membership test this module provides
grid scans, projections, emptiness diagnostics, the max-min region
p-value with its simulated null, subsample-size diagnostics, and
region-based tests of location bounds.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from . import numerics
from .errors import ConfigurationError, DataError, DomainError
from .numerics import (
    SimSpec,
    empirical_quantile,
    group_table,
    replicate_samples,
    substream,
    two_sided_pvalue,
    upper_pvalue,
)

DEFAULT_SEED = 1729
DEFAULT_TABLE_REPLICATIONS = 100_000
DEFAULT_CALIBRATION_REPLICATIONS = 10_000

ALPHA_FLOOR = 0.001
ALPHA_CEILING = 0.999999
_MEMBER_TIE_TOL = 1e-12


# ------------------------------------------------------------------ #
# Configuration and result containers
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class SimConfig:
    """Seeds and replication counts for all simulated tables."""

    seed: int = DEFAULT_SEED
    table_replications: int = DEFAULT_TABLE_REPLICATIONS
    calibration_replications: int = DEFAULT_CALIBRATION_REPLICATIONS


@dataclass(frozen=True)
class LocationScale:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"scale must be positive, got {self.sigma}")


@dataclass(frozen=True)
class GaussFeatures:
    t1: float
    t2: float
    t3: float
    t4: float


@dataclass(frozen=True)
class QuantileSet:
    q1: float
    q21: float
    q22: float
    q3: float
    q4: float
    alpha_tilde: float
    n: int


@dataclass(frozen=True)
class Calibration:
    """Per-feature level calibrated so the joint region has content alpha."""

    alpha: float
    alpha_tilde: float
    alpha_effective: float
    alpha_start: float
    alpha_star: float
    n: int
    replications: int
    seed: int


@dataclass(frozen=True)
class MembershipResult:
    p1: float
    p2: float
    p3: float
    p4: float
    p_min: float
    member: bool


@dataclass(frozen=True)
class RegionGrid:
    """Member points of one grid scan, with their per-feature p-values."""

    mu_axis: np.ndarray
    sigma_axis: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    pvalues: np.ndarray          # (count, 4)
    p_min: np.ndarray
    alpha: float
    alpha_tilde: float
    n: int

    @property
    def point_count(self) -> int:
        return int(self.mu.size)

    @property
    def empty(self) -> bool:
        return self.mu.size == 0


@dataclass(frozen=True)
class TInterval:
    lo: float
    hi: float
    degenerate: bool = False


@dataclass(frozen=True)
class PStarResult:
    """Smallest alpha at which the region is nonempty, as p* = 1 - alpha*."""

    p_star: float
    alpha_star: float
    p_max: float
    mu_at: float
    sigma_at: float
    at_floor: bool = False        # nonempty already at the smallest alpha scanned
    empty_at_ceiling: bool = False  # empty even at alpha = 0.999999


@dataclass(frozen=True)
class MuBoundTest:
    mu0: float
    direction: str
    p_star: float
    alpha_star: float
    sigma_at: float
    p_line: float
    at_floor: bool = False
    empty_at_ceiling: bool = False


@dataclass(frozen=True)
class RegionPValue:
    region_p: float
    p_of_p: float
    mu_at: float
    sigma_at: float
    null_replications: int


@dataclass(frozen=True)
class SweepRow:
    value: float
    region_p: float
    p_star: float
    point_count: int
    p_of_p: float | None = None


@dataclass(frozen=True)
class EmptinessReport:
    runs: int
    empty_fraction: float
    noncover_fraction: float


@dataclass(frozen=True)
class GridConfig:
    """Grid geometry for region scans.

    By default the mu axis covers mean +- 6 sd/sqrt(n) extended by
    ``mu_pad_steps`` grid steps on each side, and the sigma axis covers
    [sd/2.5, 2.5 sd].  Explicit ranges override the data-driven ones.
    """

    mu_points: int = 201
    sigma_points: int = 201
    mu_halfwidth: float = 6.0
    mu_pad_steps: int = 3
    sigma_lo_factor: float = 2.5
    sigma_hi_factor: float = 2.5
    mu_range: tuple[float, float] | None = None
    sigma_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class RefineConfig:
    """Two-stage grid search used for max-min p-value diagnostics."""

    coarse_mu: int = 81
    coarse_sigma: int = 81
    zoom_points: int = 25
    zoom_span: float = 2.0

    @property
    def tag(self) -> str:
        return f"c{self.coarse_mu}x{self.coarse_sigma}z{self.zoom_points}w{self.zoom_span:g}"


# ------------------------------------------------------------------ #
# Samples and features
# ------------------------------------------------------------------ #


def _as_sample(x, min_n: int = 1) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size < min_n:
        raise DataError(f"sample needs at least {min_n} observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DataError("sample contains non-finite values")
    return arr


@dataclass(frozen=True)
class _SampleSummary:
    sorted_values: np.ndarray
    n: int
    mean: float
    css: float                   # sum of squared deviations from the mean
    lo: float
    hi: float

    @classmethod
    def of(cls, x: np.ndarray) -> "_SampleSummary":
        xs = np.sort(x)
        m = float(xs.mean())
        return cls(sorted_values=xs, n=xs.size, mean=m,
                   css=float(np.sum((xs - m) ** 2)), lo=float(xs[0]), hi=float(xs[-1]))

    @property
    def sd(self) -> float:
        return math.sqrt(self.css / (self.n - 1))


def gauss_features(x, theta: LocationScale) -> GaussFeatures:
    """The four adequacy features of x standardized by (mu, sigma)."""
    arr = _as_sample(x)
    if not theta.sigma > 0:
        raise DomainError("scale must be positive")
    y = (arr - theta.mu) / theta.sigma
    n = y.size
    emp = numerics.EmpiricalDist.from_sample(y)
    t4 = numerics.kuiper_distance(emp, numerics.standard_normal())
    return GaussFeatures(
        t1=float(math.sqrt(n) * abs(y.mean())),
        t2=float(np.sum(y * y)),
        t3=float(np.max(np.abs(y))),
        t4=t4,
    )


# ------------------------------------------------------------------ #
# Null tables and calibration
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class NullTables:
    """Sorted null samples of the four features for one sample size."""

    n: int
    replications: int
    seed: int
    values: np.ndarray           # (replications, 4), sorted per column

    @property
    def t1(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def t2(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def t3(self) -> np.ndarray:
        return self.values[:, 2]

    @property
    def t4(self) -> np.ndarray:
        return self.values[:, 3]

    def pvalues(self, t1, t2, t3, t4):
        """Per-feature p-values; upper-tailed except the two-sided t2."""
        return (upper_pvalue(self.t1, t1), two_sided_pvalue(self.t2, t2),
                upper_pvalue(self.t3, t3), upper_pvalue(self.t4, t4))

    def p_min(self, t1, t2, t3, t4):
        p1, p2, p3, p4 = self.pvalues(t1, t2, t3, t4)
        return np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))

    def quantile_set(self, alpha_tilde: float) -> QuantileSet:
        lo = (1.0 - alpha_tilde) / 2.0
        return QuantileSet(
            q1=empirical_quantile(self.t1, alpha_tilde),
            q21=empirical_quantile(self.t2, lo),
            q22=empirical_quantile(self.t2, 1.0 - lo),
            q3=empirical_quantile(self.t3, alpha_tilde),
            q4=empirical_quantile(self.t4, alpha_tilde),
            alpha_tilde=alpha_tilde,
            n=self.n,
        )


def null_tables(n: int, config: SimConfig = SimConfig()) -> NullTables:
    values = group_table("gauss4", n, config.table_replications, config.seed)
    return NullTables(n=n, replications=config.table_replications,
                      seed=config.seed, values=values)


@dataclass(frozen=True)
class CoverageCurve:
    """Joint coverage of the four-feature band as a function of alpha_tilde.

    Built from fresh null replicates evaluated against the marginal
    tables: coverage(at) = P(p_min >= 1 - at) for a true-model sample.
    """

    n: int
    replications: int
    seed: int
    pmin_sorted: np.ndarray

    def coverage(self, alpha_tilde: float) -> float:
        thr = 1.0 - alpha_tilde
        idx = np.searchsorted(self.pmin_sorted, thr, side="left")
        return 1.0 - idx / self.pmin_sorted.size

    def alpha_tilde_for(self, alpha: float) -> float:
        """One-step refinement of the Bonferroni starting level (3+alpha)/4.

        Clamped strictly below one: for alpha close enough to one the
        simulated coverage under-reads (finite tables round the deepest
        per-feature p-values down to zero) and the raw formula would
        otherwise exceed one.
        """
        start = (3.0 + alpha) / 4.0
        a_star = self.coverage(start)
        return min((3.0 + 2.0 * alpha - a_star) / 4.0, 1.0 - 1e-9)

    def invert(self, alpha: float) -> float:
        """alpha_tilde whose simulated joint coverage equals alpha."""
        thr = empirical_quantile(self.pmin_sorted, 1.0 - alpha)
        return 1.0 - thr


def coverage_curve(n: int, config: SimConfig = SimConfig()) -> CoverageCurve:
    tables = null_tables(n, config)
    reps = config.calibration_replications
    name = f"gauss4_cov_n{n}_r{reps}_s{config.seed}_t{tables.replications}"

    def build() -> np.ndarray:
        chunks = []
        for start in range(0, reps, 20_000):
            count = min(20_000, reps - start)
            samples = replicate_samples(config.seed, "gauss4cov", n, start, count)
            feats = numerics._gauss_batch(samples)
            chunks.append(tables.p_min(feats[:, 0], feats[:, 1], feats[:, 2], feats[:, 3]))
        return np.sort(np.concatenate(chunks))

    pmin = _cached(name, build)
    return CoverageCurve(n=n, replications=reps, seed=config.seed, pmin_sorted=pmin)


def _cached(name: str, builder) -> np.ndarray:
    key = ("derived", name)
    if key in numerics._MEMORY_CACHE:
        return numerics._MEMORY_CACHE[key]
    path = numerics.cache_dir() / f"{name}.npz"
    if path.exists():
        with np.load(path) as archive:
            if int(archive["version"]) == numerics.CACHE_FORMAT_VERSION:
                values = archive["values"]
                numerics._MEMORY_CACHE[key] = values
                return values
    values = builder()
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, version=numerics.CACHE_FORMAT_VERSION, values=values)
    os.replace(tmp, path)
    numerics._MEMORY_CACHE[key] = values
    return values


def calibrate(n: int, alpha: float, config: SimConfig = SimConfig(), *,
              mode: str = "once") -> Calibration:
    """Calibrate the per-feature level for a target region content alpha.

    Starts from (3+alpha)/4, simulates the joint coverage alpha_star at
    that level and refines once to (3 + 2 alpha - alpha_star)/4.  With
    ``mode="fixed_point"`` the refinement is iterated until the
    simulated coverage is within 0.005 of alpha.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    curve = coverage_curve(n, config)
    start = (3.0 + alpha) / 4.0
    a_star = curve.coverage(start)
    at = min((3.0 + 2.0 * alpha - a_star) / 4.0, 1.0 - 1e-9)
    if mode == "fixed_point":
        for _ in range(8):
            if abs(curve.coverage(at) - alpha) < 0.005:
                break
            at = curve.invert(alpha)
    elif mode != "once":
        raise ConfigurationError(f"unknown calibration mode {mode!r}")
    return Calibration(alpha=alpha, alpha_tilde=at, alpha_effective=curve.coverage(at),
                       alpha_start=start, alpha_star=a_star, n=n,
                       replications=config.calibration_replications, seed=config.seed)


# ------------------------------------------------------------------ #
# Membership
# ------------------------------------------------------------------ #


def member_pvalues(x, theta: LocationScale, tables: NullTables,
                   alpha_tilde: float) -> MembershipResult:
    """Four p-values of one candidate pair and its membership verdict."""
    if tables is None:
        raise ConfigurationError("null tables for this sample size are required")
    feats = gauss_features(x, theta)
    p1, p2, p3, p4 = tables.pvalues(feats.t1, feats.t2, feats.t3, feats.t4)
    p_min = min(p1, p2, p3, p4)
    return MembershipResult(p1=p1, p2=p2, p3=p3, p4=p4, p_min=p_min,
                            member=bool(p_min >= 1.0 - alpha_tilde - _MEMBER_TIE_TOL))


# ------------------------------------------------------------------ #
# Grid machinery
# ------------------------------------------------------------------ #


def grid_axes(summary: _SampleSummary, grid: GridConfig) -> tuple[np.ndarray, np.ndarray]:
    if grid.mu_range is not None:
        mu = np.linspace(grid.mu_range[0], grid.mu_range[1], grid.mu_points)
    else:
        half = grid.mu_halfwidth * summary.sd / math.sqrt(summary.n)
        step = 2.0 * half / (grid.mu_points - 1)
        lo = summary.mean - half - grid.mu_pad_steps * step
        mu = lo + step * np.arange(grid.mu_points + 2 * grid.mu_pad_steps)
    if grid.sigma_range is not None:
        sigma = np.linspace(grid.sigma_range[0], grid.sigma_range[1], grid.sigma_points)
    else:
        sigma = np.linspace(summary.sd / grid.sigma_lo_factor,
                            summary.sd * grid.sigma_hi_factor, grid.sigma_points)
    return mu, sigma


def _cheap_features(summary: _SampleSummary, mu: np.ndarray, sigma: np.ndarray):
    # t1, t2, t3 need only the sample summary, not the sorted values
    d = summary.mean - mu
    t1 = math.sqrt(summary.n) * np.abs(d) / sigma
    t2 = (summary.css + summary.n * d * d) / (sigma * sigma)
    t3 = np.maximum(summary.hi - mu, mu - summary.lo) / sigma
    return t1, t2, t3


_T4_CHUNK = 200_000  # cap on points*n per ndtr call


def _t4_values(summary: _SampleSummary, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    n = summary.n
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    out = np.empty(mu.shape)
    step = max(1, _T4_CHUNK // n)
    flat_mu = mu.ravel()
    flat_sigma = sigma.ravel()
    flat_out = out.reshape(-1)
    for start in range(0, flat_mu.size, step):
        sl = slice(start, start + step)
        z = (summary.sorted_values[None, :] - flat_mu[sl, None]) / flat_sigma[sl, None]
        phi = special.ndtr(z)
        flat_out[sl] = (hi - phi).max(axis=1) + (phi - lo).max(axis=1)
    return out


def _pmin_grid(summary: _SampleSummary, tables: NullTables,
               mu: np.ndarray, sigma: np.ndarray):
    """p-values of every (mu, sigma) pair; arrays broadcast elementwise."""
    t1, t2, t3 = _cheap_features(summary, mu, sigma)
    t4 = _t4_values(summary, mu, sigma)
    p1, p2, p3, p4 = tables.pvalues(t1, t2, t3, t4)
    p_min = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    return p_min, (p1, p2, p3, p4)


def region_scan(x, alpha: float, config: SimConfig = SimConfig(), *,
                grid: GridConfig = GridConfig(),
                alpha_tilde: float | None = None) -> RegionGrid:
    """All member pairs of the adequacy region on a (mu, sigma) grid.

    An empty result is a legitimate outcome, not an error.  When
    ``alpha_tilde`` is given it overrides the calibrated per-feature
    level (useful for studying a fixed band level).
    """
    arr = _as_sample(x, min_n=5)
    summary = _SampleSummary.of(arr)
    tables = null_tables(summary.n, config)
    if alpha_tilde is None:
        alpha_tilde = calibrate(summary.n, alpha, config).alpha_tilde
    mu_axis, sigma_axis = grid_axes(summary, grid)
    mu, sigma = np.meshgrid(mu_axis, sigma_axis, indexing="ij")
    p_min, (p1, p2, p3, p4) = _pmin_grid(summary, tables, mu, sigma)
    mask = p_min >= 1.0 - alpha_tilde - _MEMBER_TIE_TOL
    pv = np.stack([p1[mask], p2[mask], p3[mask], p4[mask]], axis=1)
    return RegionGrid(mu_axis=mu_axis, sigma_axis=sigma_axis,
                      mu=mu[mask], sigma=sigma[mask], pvalues=pv, p_min=p_min[mask],
                      alpha=alpha, alpha_tilde=alpha_tilde, n=summary.n)


def mu_projection(region: RegionGrid) -> tuple[float, float] | None:
    """[min mu, max mu] over the member points; None for an empty region."""
    if region.empty:
        return None
    return float(region.mu.min()), float(region.mu.max())


def sigma_projection(region: RegionGrid) -> tuple[float, float] | None:
    if region.empty:
        return None
    return float(region.sigma.min()), float(region.sigma.max())


def _region_has_member(summary: _SampleSummary, tables: NullTables, alpha_tilde: float,
                       mu_axis: np.ndarray, sigma_axis: np.ndarray) -> bool:
    """Emptiness check with a cheap-feature prefilter and early exit."""
    thr = 1.0 - alpha_tilde - _MEMBER_TIE_TOL
    mu, sigma = np.meshgrid(mu_axis, sigma_axis, indexing="ij")
    mu, sigma = mu.ravel(), sigma.ravel()
    t1, t2, t3 = _cheap_features(summary, mu, sigma)
    p1 = upper_pvalue(tables.t1, t1)
    p2 = two_sided_pvalue(tables.t2, t2)
    p3 = upper_pvalue(tables.t3, t3)
    cheap = np.minimum(np.minimum(p1, p2), p3)
    candidates = np.flatnonzero(cheap >= thr)
    if candidates.size == 0:
        return False
    order = np.argsort(cheap[candidates])[::-1]
    candidates = candidates[order]
    for start in range(0, candidates.size, 512):
        idx = candidates[start:start + 512]
        t4 = _t4_values(summary, mu[idx], sigma[idx])
        p4 = upper_pvalue(tables.t4, t4)
        if np.any(np.minimum(cheap[idx], p4) >= thr):
            return True
    return False


# ------------------------------------------------------------------ #
# Max-min p-value search (two-stage grid refinement)
# ------------------------------------------------------------------ #


def _max_pmin(summary: _SampleSummary, tables: NullTables, refine: RefineConfig,
              grid: GridConfig = GridConfig()):
    coarse = replace(grid, mu_points=refine.coarse_mu, sigma_points=refine.coarse_sigma,
                     mu_pad_steps=0)
    mu_axis, sigma_axis = grid_axes(summary, coarse)
    mu, sigma = np.meshgrid(mu_axis, sigma_axis, indexing="ij")
    p_min, _ = _pmin_grid(summary, tables, mu, sigma)
    k = int(np.argmax(p_min))
    best = (float(p_min.ravel()[k]), float(mu.ravel()[k]), float(sigma.ravel()[k]))

    mu_step = mu_axis[1] - mu_axis[0]
    sigma_step = sigma_axis[1] - sigma_axis[0]
    zmu = np.linspace(best[1] - refine.zoom_span * mu_step,
                      best[1] + refine.zoom_span * mu_step, refine.zoom_points)
    zsig = np.linspace(max(best[2] - refine.zoom_span * sigma_step, sigma_step * 1e-3),
                       best[2] + refine.zoom_span * sigma_step, refine.zoom_points)
    mu, sigma = np.meshgrid(zmu, zsig, indexing="ij")
    p_min, _ = _pmin_grid(summary, tables, mu, sigma)
    k = int(np.argmax(p_min))
    zoom_best = (float(p_min.ravel()[k]), float(mu.ravel()[k]), float(sigma.ravel()[k]))
    return max(best, zoom_best)


def _max_pmin_sigma_line(summary: _SampleSummary, tables: NullTables, mu0: float,
                         grid: GridConfig = GridConfig(), points: int = 201,
                         zoom_points: int = 41, rounds: int = 2):
    """Best attainable p_min along the sigma line at a fixed mu."""
    if grid.sigma_range is not None:
        lo, hi = grid.sigma_range
    else:
        lo = summary.sd / grid.sigma_lo_factor
        hi = summary.sd * grid.sigma_hi_factor
    sigma = np.linspace(lo, hi, points)
    best_p, best_s = -1.0, sigma[0]
    for _ in range(rounds + 1):
        mu = np.full_like(sigma, mu0)
        p_min, _ = _pmin_grid(summary, tables, mu, sigma)
        k = int(np.argmax(p_min))
        if p_min[k] > best_p:
            best_p, best_s = float(p_min[k]), float(sigma[k])
        step = sigma[1] - sigma[0]
        sigma = np.linspace(max(best_s - 2 * step, step * 1e-3), best_s + 2 * step,
                            zoom_points)
    return best_p, best_s


# ------------------------------------------------------------------ #
# Emptiness p*, bound tests
# ------------------------------------------------------------------ #


def _smallest_alpha(p_max: float, curve: CoverageCurve):
    """Smallest alpha whose calibrated band just admits a point with p_max.

    Nonempty at alpha iff alpha_tilde(alpha) >= 1 - p_max; alpha_tilde
    is nondecreasing, so bisect.  Run in 1 - alpha space so that
    extreme levels near 1 keep relative precision.
    """
    def nonempty(alpha: float) -> bool:
        return curve.alpha_tilde_for(alpha) >= 1.0 - p_max - _MEMBER_TIE_TOL

    if nonempty(ALPHA_FLOOR):
        return ALPHA_FLOOR, True, False
    if not nonempty(ALPHA_CEILING):
        return ALPHA_CEILING, False, True
    lo, hi = ALPHA_FLOOR, ALPHA_CEILING     # empty at lo, nonempty at hi
    for _ in range(60):
        mid = 1.0 - math.sqrt((1.0 - lo) * (1.0 - hi))
        if nonempty(mid):
            hi = mid
        else:
            lo = mid
    return hi, False, False


def min_alpha_nonempty(x, config: SimConfig = SimConfig(), *,
                       grid: GridConfig = GridConfig(),
                       refine: RefineConfig = RefineConfig()) -> PStarResult:
    """p* = 1 - alpha* where alpha* is the smallest level with a nonempty region."""
    arr = _as_sample(x, min_n=5)
    summary = _SampleSummary.of(arr)
    tables = null_tables(summary.n, config)
    curve = coverage_curve(summary.n, config)
    p_max, mu_at, sigma_at = _max_pmin(summary, tables, refine, grid)
    alpha_star, at_floor, empty_at_ceiling = _smallest_alpha(p_max, curve)
    p_star = 1e-6 if empty_at_ceiling else 1.0 - alpha_star
    return PStarResult(p_star=p_star, alpha_star=alpha_star, p_max=p_max,
                       mu_at=mu_at, sigma_at=sigma_at, at_floor=at_floor,
                       empty_at_ceiling=empty_at_ceiling)


def test_mu_bound(x, mu0: float, direction: str = "ge",
                  config: SimConfig = SimConfig(), *,
                  grid: GridConfig = GridConfig()) -> MuBoundTest:
    """Region-based p-value for a location bound.

    p* = 1 - alpha* with alpha* the smallest level at which the region
    contains some (mu0, sigma).  The direction records which one-sided
    hypothesis is being examined; the containment scan itself is the
    same for both.
    """
    if direction not in ("ge", "le"):
        raise DomainError("direction must be 'ge' or 'le'")
    arr = _as_sample(x, min_n=5)
    summary = _SampleSummary.of(arr)
    tables = null_tables(summary.n, config)
    curve = coverage_curve(summary.n, config)
    p_line, sigma_at = _max_pmin_sigma_line(summary, tables, mu0, grid)
    alpha_star, at_floor, empty_at_ceiling = _smallest_alpha(p_line, curve)
    p_star = 1e-6 if empty_at_ceiling else 1.0 - alpha_star
    return MuBoundTest(mu0=mu0, direction=direction, p_star=p_star,
                       alpha_star=alpha_star, sigma_at=sigma_at, p_line=p_line,
                       at_floor=at_floor, empty_at_ceiling=empty_at_ceiling)


def t_test_pvalue(x, mu0: float) -> float:
    """One-sided t-test p-value pt(sqrt(n)(mean - mu0)/sd, n - 1)."""
    arr = _as_sample(x, min_n=2)
    sd = float(np.std(arr, ddof=1))
    if sd == 0:
        raise DomainError("t-test requires positive sample variance")
    t = math.sqrt(arr.size) * (float(arr.mean()) - mu0) / sd
    return float(special.stdtr(arr.size - 1, t))


def t_confidence_interval(x, alpha: float) -> TInterval:
    """Equal-tailed t interval mean +- t-quantile * sd / sqrt(n)."""
    arr = _as_sample(x, min_n=2)
    mean = float(arr.mean())
    sd = float(np.std(arr, ddof=1))
    if sd == 0:
        return TInterval(lo=mean, hi=mean, degenerate=True)
    q = float(special.stdtrit(arr.size - 1, (1.0 + alpha) / 2.0))
    half = q * sd / math.sqrt(arr.size)
    return TInterval(lo=mean - half, hi=mean + half)


# ------------------------------------------------------------------ #
# Region p-value (max-min) and its simulated null
# ------------------------------------------------------------------ #


def _region_p_null_builder(n: int, replications: int, config: SimConfig,
                           refine: RefineConfig, grid: GridConfig):
    tables = null_tables(n, config)

    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    sq = math.sqrt(n)

    def pmin_batch(sorted_rows, xbar, css, mu, sigma):
        # sorted_rows (B, n); mu, sigma (B, G) -> (B, G)
        d = xbar[:, None] - mu
        t1 = sq * np.abs(d) / sigma
        t2 = (css[:, None] + n * d * d) / (sigma * sigma)
        t3 = np.maximum(sorted_rows[:, -1][:, None] - mu,
                        mu - sorted_rows[:, 0][:, None]) / sigma
        z = (sorted_rows[:, None, :] - mu[..., None]) / sigma[..., None]
        phi = special.ndtr(z)
        t4 = (hi - phi).max(axis=-1) + (phi - lo).max(axis=-1)
        return tables.p_min(t1, t2, t3, t4)

    def build() -> np.ndarray:
        out = np.empty(replications)
        gmu = refine.coarse_mu
        gsig = refine.coarse_sigma
        # keep the (chunk, grid, n) standardization block near 64 MB
        chunk = int(np.clip(8_000_000 // (n * gmu * gsig), 1, 256))
        for start in range(0, replications, chunk):
            count = min(chunk, replications - start)
            samples = replicate_samples(config.seed, "gauss_region_p", n, start, count)
            rows = np.sort(samples, axis=1)
            xbar = rows.mean(axis=1)
            css = np.sum((rows - xbar[:, None]) ** 2, axis=1)
            sd = np.sqrt(css / (n - 1))
            half = grid.mu_halfwidth * sd / sq
            mu_axes = xbar[:, None] + np.linspace(-1, 1, gmu)[None, :] * half[:, None]
            sig_axes = (sd[:, None] * np.linspace(1.0 / grid.sigma_lo_factor,
                                                  grid.sigma_hi_factor, gsig)[None, :])
            mu = np.repeat(mu_axes, gsig, axis=1)
            sigma = np.tile(sig_axes, (1, gmu))
            p = pmin_batch(rows, xbar, css, mu, sigma)
            k = np.argmax(p, axis=1)
            best_p = p[np.arange(count), k]
            best_mu = mu[np.arange(count), k]
            best_sig = sigma[np.arange(count), k]
            # zoom around the per-replicate argmax
            mu_step = (mu_axes[:, 1] - mu_axes[:, 0])
            sig_step = (sig_axes[:, 1] - sig_axes[:, 0])
            zp = refine.zoom_points
            lin = np.linspace(-refine.zoom_span, refine.zoom_span, zp)
            zmu = best_mu[:, None] + lin[None, :] * mu_step[:, None]
            zsig = best_sig[:, None] + lin[None, :] * sig_step[:, None]
            zsig = np.maximum(zsig, 1e-3 * sig_step[:, None])
            mu = np.repeat(zmu, zp, axis=1)
            sigma = np.tile(zsig, (1, zp))
            p = pmin_batch(rows, xbar, css, mu, sigma)
            out[start:start + count] = np.maximum(best_p, p.max(axis=1))
        out.sort()
        return out

    return build


def region_p_null(n: int, config: SimConfig = SimConfig(), *,
                  replications: int = 10_000,
                  refine: RefineConfig = RefineConfig(),
                  grid: GridConfig = GridConfig()) -> np.ndarray:
    """Sorted null distribution of the max-min region p-value (cached)."""
    name = (f"gauss_region_p_{refine.tag}_n{n}_r{replications}"
            f"_s{config.seed}_t{config.table_replications}")
    return _cached(name, _region_p_null_builder(n, replications, config, refine, grid))


def region_p_value(x, config: SimConfig = SimConfig(), *,
                   null_replications: int = 10_000,
                   refine: RefineConfig = RefineConfig(),
                   grid: GridConfig = GridConfig()) -> RegionPValue:
    """Max over candidate pairs of the min p-value, with its null position.

    The observed maximum is located with the same two-stage grid search
    used for the simulated null, and p_of_p is the lower-tail position
    of the observed value in that null.
    """
    arr = _as_sample(x, min_n=5)
    summary = _SampleSummary.of(arr)
    tables = null_tables(summary.n, config)
    p_max, mu_at, sigma_at = _max_pmin(summary, tables, refine, grid)
    null = region_p_null(summary.n, config, replications=null_replications,
                         refine=refine, grid=grid)
    p_of_p = float(np.searchsorted(null, p_max, side="right") / null.size)
    return RegionPValue(region_p=p_max, p_of_p=p_of_p, mu_at=mu_at,
                        sigma_at=sigma_at, null_replications=null_replications)


# ------------------------------------------------------------------ #
# Subsample diagnostic and outlier sweep
# ------------------------------------------------------------------ #


def subsample_fit_size(x, alpha: float, config: SimConfig = SimConfig(), *,
                       m_range: tuple[int, int] | None = None,
                       subsamples: int = 100,
                       grid: GridConfig = GridConfig()) -> int:
    """Largest subsample size whose region is nonempty in half the draws.

    Subsamples are drawn without replacement; the search over m is
    binary, relying on emptiness becoming more likely as m grows.
    """
    arr = _as_sample(x, min_n=5)
    n = arr.size
    lo, hi = m_range if m_range is not None else (5, n)
    if not (5 <= lo <= hi <= n):
        raise DomainError(f"m range must lie within [5, {n}]")

    fractions: dict[int, float] = {}

    def nonempty_fraction(m: int) -> float:
        if m not in fractions:
            tables = null_tables(m, config)
            alpha_tilde = calibrate(m, alpha, config).alpha_tilde
            good = 0
            for b in range(subsamples):
                gen = substream(config.seed, "subsample", n, m, b)
                idx = gen.choice(n, size=m, replace=False)
                summary = _SampleSummary.of(arr[idx])
                mu_axis, sigma_axis = grid_axes(summary, grid)
                good += _region_has_member(summary, tables, alpha_tilde,
                                           mu_axis, sigma_axis)
            fractions[m] = good / subsamples
        return fractions[m]

    if nonempty_fraction(hi) >= 0.5:
        return hi
    if nonempty_fraction(lo) < 0.5:
        return lo
    while hi - lo > 1:              # fraction(lo) >= 0.5 > fraction(hi)
        mid = (lo + hi) // 2
        if nonempty_fraction(mid) >= 0.5:
            lo = mid
        else:
            hi = mid
    return lo


def outlier_sweep(x, index: int, step: float, count: int,
                  config: SimConfig = SimConfig(), *,
                  alpha: float = 0.9,
                  mode: str = "replace",
                  include_p_of_p: bool = False,
                  null_replications: int = 10_000,
                  grid: GridConfig = GridConfig(),
                  refine: RefineConfig = RefineConfig()) -> list[SweepRow]:
    """Region quality versus a progressively shifted observation.

    ``mode="replace"`` sets observation ``index`` to its original value
    plus k*step for k = 0..count-1 (so the first row is the baseline);
    ``mode="drop"`` removes the observation and yields a single row.
    """
    arr = _as_sample(x, min_n=5)
    if not 0 <= index < arr.size:
        raise DomainError(f"index {index} outside sample of size {arr.size}")
    if mode not in ("replace", "drop"):
        raise DomainError("mode must be 'replace' or 'drop'")

    variants: list[tuple[float, np.ndarray]]
    if mode == "drop":
        variants = [(math.nan, np.delete(arr, index))]
    else:
        base = arr[index]
        variants = []
        for k in range(count):
            modified = arr.copy()
            modified[index] = base + k * step
            variants.append((float(modified[index]), modified))

    rows = []
    for value, data in variants:
        scan = region_scan(data, alpha, config, grid=grid)
        diag = min_alpha_nonempty(data, config, grid=grid, refine=refine)
        p_of_p = None
        if include_p_of_p:
            null = region_p_null(data.size, config, replications=null_replications,
                                 refine=refine, grid=grid)
            p_of_p = float(np.searchsorted(null, diag.p_max, side="right") / null.size)
        rows.append(SweepRow(value=value, region_p=diag.p_max, p_star=diag.p_star,
                             point_count=scan.point_count, p_of_p=p_of_p))
    return rows


# ------------------------------------------------------------------ #
# Simulation studies used by the validation suite and CLI
# ------------------------------------------------------------------ #


def simulate_emptiness(n: int, alpha_tilde: float, runs: int,
                       config: SimConfig = SimConfig(), *,
                       grid: GridConfig = GridConfig()) -> EmptinessReport:
    """Fraction of true-model samples with an empty region at a fixed band level.

    Also reports how often the generating pair itself fails membership,
    which is far more common than full emptiness.
    """
    tables = null_tables(n, config)
    thr = 1.0 - alpha_tilde - _MEMBER_TIE_TOL
    empty = 0
    noncover = 0
    for r in range(runs):
        sample = substream(config.seed, "emptiness", n, r).standard_normal(n)
        feats = numerics._gauss_batch(sample[None, :])[0]
        if tables.p_min(*feats) < thr:
            noncover += 1
        summary = _SampleSummary.of(sample)
        mu_axis, sigma_axis = grid_axes(summary, grid)
        if not _region_has_member(summary, tables, alpha_tilde, mu_axis, sigma_axis):
            empty += 1
    return EmptinessReport(runs=runs, empty_fraction=empty / runs,
                           noncover_fraction=noncover / runs)


def simulate_true_coverage(n: int, alpha_tilde: float, runs: int,
                           config: SimConfig = SimConfig(), *,
                           purpose: str = "covcheck") -> float:
    """Fraction of true-model samples whose generating pair is a member."""
    tables = null_tables(n, config)
    thr = 1.0 - alpha_tilde - _MEMBER_TIE_TOL
    covered = 0
    for start in range(0, runs, 20_000):
        count = min(20_000, runs - start)
        samples = replicate_samples(config.seed, purpose, n, start, count)
        feats = numerics._gauss_batch(samples)
        p = tables.p_min(feats[:, 0], feats[:, 1], feats[:, 2], feats[:, 3])
        covered += int(np.sum(p >= thr))
    return covered / runs
