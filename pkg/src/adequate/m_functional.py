"""Location-scale M-functionals and their adequacy regions.

The functional (t_l, t_s) of a distribution solves the pair of moment
equations  E psi((X - t_l)/t_s) = 0  and  E chi((X - t_l)/t_s) = 0
with a bounded odd psi and a bounded even chi.  Because both summand
families are bounded, the standardized moment sums are close to normal
already for small samples, which yields a simple grid criterion for the
set of adequate (location, scale) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special

from .errors import DataError, DomainError, SolverError
from .gauss_region import (
    ALPHA_CEILING,
    ALPHA_FLOOR,
    GridConfig,
    SimConfig,
    _as_sample,
)
from .numerics import EmpiricalDist, kolmogorov_quantile, substream

__all__ = [
    "MConfig",
    "MEstimate",
    "MRegion",
    "psi",
    "chi",
    "solve_m",
    "m_region",
    "tl_projection",
    "ts_projection",
    "test_tl_bound",
    "m_exact_quantiles",
    "m_sum_samples",
    "normal_population_functional",
]


@dataclass(frozen=True)
class MConfig:
    """Tuning constant and solver budget for the M-functional."""

    c: float = 5.0
    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError("tuning constant must be positive")


@dataclass(frozen=True)
class MEstimate:
    t_l: float
    t_s: float
    psi_residual: float
    chi_residual: float
    iterations: int


@dataclass(frozen=True)
class MRegion:
    """Adequate (location, scale) pairs on a grid, with standardized stats."""

    location_axis: np.ndarray
    scale_axis: np.ndarray
    t_l: np.ndarray
    t_s: np.ndarray
    psi_stat: np.ndarray         # sqrt(n) mean(psi) / sqrt(mean(psi^2))
    chi_stat: np.ndarray
    alpha: float
    alpha_tilde: float
    qdk: float                   # Kolmogorov budget at alpha_tilde (reported only)
    n: int
    estimate: MEstimate

    @property
    def point_count(self) -> int:
        return int(self.t_l.size)

    @property
    def empty(self) -> bool:
        return self.t_l.size == 0


def psi(u, c: float = 5.0):
    """Bounded odd score (exp(u/c) - 1)/(exp(u/c) + 1), i.e. tanh(u/(2c)).

    The tanh form is overflow-safe for any u.
    """
    if not c > 0:
        raise DomainError("tuning constant must be positive")
    return np.tanh(np.asarray(u, dtype=float) / (2.0 * c))


def chi(u):
    """Bounded even score (u^4 - 1)/(u^4 + 1); zero at |u| = 1."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        u2 = u * u
        u4 = u2 * u2
        out = (u4 - 1.0) / (u4 + 1.0)
    return np.where(np.isinf(u4), 1.0, out)


def _largest_atom_mass(x: np.ndarray) -> float:
    _, counts = np.unique(x, return_counts=True)
    return counts.max() / x.size


def _bisect_decreasing(f, lo: float, hi: float, iters: int = 80) -> float:
    # f(lo) >= 0 >= f(hi); plain bisection, unconditionally convergent
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_m(e, cfg: MConfig = MConfig()) -> MEstimate:
    """Solve the two moment equations for an empirical distribution.

    Alternates a monotone bisection for the location (psi equation at
    fixed scale) with one for the scale (chi equation at fixed
    location) until both residuals drop below ``cfg.tol``.  The largest
    atom of the sample must not carry more than half the mass (at
    exactly half, e.g. a two-point sample, the solution is still
    unique).
    """
    if isinstance(e, EmpiricalDist):
        x = e.values
    else:
        x = _as_sample(e, min_n=2)
    if _largest_atom_mass(x) > 0.5:
        raise DataError("M-functional needs the largest atom at mass <= 0.5")

    lo_x, hi_x = float(x.min()), float(x.max())
    spread = hi_x - lo_x
    if spread == 0:
        raise DataError("M-functional undefined for a constant sample")

    t_l = float(np.median(x))
    t_s = max(float(np.std(x)), 1e-3 * spread)

    def psi_mean(m, s):
        return float(np.mean(psi((x - m) / s, cfg.c)))

    def chi_mean(m, s):
        return float(np.mean(chi((x - m) / s)))

    for iteration in range(1, cfg.max_iter + 1):
        # psi_mean decreases in the location; the data range brackets the root
        t_l = _bisect_decreasing(lambda m: psi_mean(m, t_s), lo_x, hi_x)
        # chi_mean decreases in the scale: +1 limit at 0, -1 limit at infinity
        s_lo, s_hi = 1e-9 * spread, 8.0 * spread
        while chi_mean(t_l, s_hi) > 0:
            s_hi *= 4.0
        t_s = _bisect_decreasing(lambda s: chi_mean(t_l, s), s_lo, s_hi)
        r_psi = abs(psi_mean(t_l, t_s))
        r_chi = abs(chi_mean(t_l, t_s))
        if r_psi < cfg.tol and r_chi < cfg.tol:
            return MEstimate(t_l=t_l, t_s=t_s, psi_residual=r_psi,
                             chi_residual=r_chi, iterations=iteration)
    raise SolverError(
        f"no convergence in {cfg.max_iter} alternations",
        residuals=(r_psi, r_chi),
    )


# ------------------------------------------------------------------ #
# Adequacy region for the functional
# ------------------------------------------------------------------ #


def _stats_grid(x: np.ndarray, cfg: MConfig, loc: np.ndarray, scale: np.ndarray):
    """Standardized psi and chi statistics at each (location, scale) pair."""
    n = x.size
    sq = math.sqrt(n)
    flat_l = loc.ravel()
    flat_s = scale.ravel()
    z_psi = np.empty(flat_l.shape)
    z_chi = np.empty(flat_l.shape)
    step = max(1, 400_000 // n)
    for start in range(0, flat_l.size, step):
        sl = slice(start, start + step)
        u = (x[None, :] - flat_l[sl, None]) / flat_s[sl, None]
        pv = psi(u, cfg.c)
        cv = chi(u)
        v_psi = np.mean(pv * pv, axis=1)
        v_chi = np.mean(cv * cv, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            z_psi[sl] = sq * pv.mean(axis=1) / np.sqrt(v_psi)
            z_chi[sl] = sq * cv.mean(axis=1) / np.sqrt(v_chi)
    z_psi = np.nan_to_num(z_psi.reshape(loc.shape), nan=np.inf)
    z_chi = np.nan_to_num(z_chi.reshape(loc.shape), nan=np.inf)
    return z_psi, z_chi


def _m_grid_axes(estimate: MEstimate, n: int, grid: GridConfig):
    if grid.mu_range is not None:
        loc = np.linspace(grid.mu_range[0], grid.mu_range[1], grid.mu_points)
    else:
        half = grid.mu_halfwidth * estimate.t_s / math.sqrt(n)
        step = 2.0 * half / (grid.mu_points - 1)
        lo = estimate.t_l - half - grid.mu_pad_steps * step
        loc = lo + step * np.arange(grid.mu_points + 2 * grid.mu_pad_steps)
    if grid.sigma_range is not None:
        scale = np.linspace(grid.sigma_range[0], grid.sigma_range[1], grid.sigma_points)
    else:
        scale = np.linspace(estimate.t_s / grid.sigma_lo_factor,
                            estimate.t_s * grid.sigma_hi_factor, grid.sigma_points)
    return loc, scale


def m_alpha_tilde(alpha: float) -> float:
    """Per-feature level (2+alpha)/3: one third of 1-alpha per feature."""
    return (2.0 + alpha) / 3.0


def _band_quantile(alpha_tilde: float) -> float:
    # the moment sums enter through their absolute value, so the
    # alpha_tilde quantile of |N(0,1)| is the right normal constant
    return float(special.ndtri((1.0 + alpha_tilde) / 2.0))


def m_region(x, alpha: float, cfg: MConfig = MConfig(), *,
             grid: GridConfig = GridConfig(),
             config: SimConfig = SimConfig()) -> MRegion:
    """Grid of (location, scale) pairs whose moment sums stay in band.

    A pair is kept when both |sqrt(n) mean(psi)| <= z sqrt(mean psi^2)
    and the chi analogue hold, where z is the normal quantile matching
    an absolute sum at level alpha_tilde = (2+alpha)/3 (simulating the
    exact quantiles of the absolute sums confirms this constant; see
    ``m_exact_quantiles``).  The Kolmogorov share of the budget is
    carried by alpha_tilde and reported as ``qdk``; it is not enforced
    pointwise.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    arr = _as_sample(x, min_n=5)
    estimate = solve_m(arr, cfg)
    at = m_alpha_tilde(alpha)
    z = _band_quantile(at)
    loc_axis, scale_axis = _m_grid_axes(estimate, arr.size, grid)
    loc, scale = np.meshgrid(loc_axis, scale_axis, indexing="ij")
    z_psi, z_chi = _stats_grid(arr, cfg, loc, scale)
    mask = (np.abs(z_psi) <= z) & (np.abs(z_chi) <= z)
    qdk = kolmogorov_quantile(at, arr.size, seed=config.seed)
    return MRegion(location_axis=loc_axis, scale_axis=scale_axis,
                   t_l=loc[mask], t_s=scale[mask],
                   psi_stat=z_psi[mask], chi_stat=z_chi[mask],
                   alpha=alpha, alpha_tilde=at, qdk=qdk, n=arr.size,
                   estimate=estimate)


def tl_projection(region: MRegion) -> tuple[float, float] | None:
    if region.empty:
        return None
    return float(region.t_l.min()), float(region.t_l.max())


def ts_projection(region: MRegion) -> tuple[float, float] | None:
    if region.empty:
        return None
    return float(region.t_s.min()), float(region.t_s.max())


@dataclass(frozen=True)
class TlBoundTest:
    bound: float
    p_star: float
    alpha_star: float
    scale_at: float
    at_floor: bool = False
    empty_at_ceiling: bool = False


def test_tl_bound(x, bound: float, cfg: MConfig = MConfig(), *,
                  grid: GridConfig = GridConfig(),
                  scale_points: int = 401) -> TlBoundTest:
    """p* = 1 - alpha* for the location-bound hypothesis on the functional.

    alpha* is the smallest alpha whose region contains (bound, s) for
    some scale s.  Membership at the bound is monotone in alpha, so a
    bisection over alpha with a scale-line scan at each step suffices.
    """
    arr = _as_sample(x, min_n=5)
    estimate = solve_m(arr, cfg)
    if grid.sigma_range is not None:
        s_lo, s_hi = grid.sigma_range
    else:
        s_lo = estimate.t_s / grid.sigma_lo_factor
        s_hi = estimate.t_s * grid.sigma_hi_factor
    scale = np.linspace(s_lo, s_hi, scale_points)
    loc = np.full_like(scale, bound)
    z_psi, z_chi = _stats_grid(arr, cfg, loc, scale)
    z_max = np.maximum(np.abs(z_psi), np.abs(z_chi))
    # refine around the least-constrained scale
    for _ in range(2):
        k = int(np.argmin(z_max))
        step = scale[1] - scale[0]
        scale = np.linspace(max(scale[k] - 2 * step, 1e-12), scale[k] + 2 * step, 81)
        loc = np.full_like(scale, bound)
        z_psi, z_chi = _stats_grid(arr, cfg, loc, scale)
        z_max = np.maximum(np.abs(z_psi), np.abs(z_chi))
    k = int(np.argmin(z_max))
    z_best, scale_at = float(z_max[k]), float(scale[k])

    def member(alpha: float) -> bool:
        return z_best <= _band_quantile(m_alpha_tilde(alpha))

    if member(ALPHA_FLOOR):
        return TlBoundTest(bound=bound, p_star=1.0 - ALPHA_FLOOR,
                           alpha_star=ALPHA_FLOOR, scale_at=scale_at, at_floor=True)
    if not member(ALPHA_CEILING):
        return TlBoundTest(bound=bound, p_star=1e-6, alpha_star=ALPHA_CEILING,
                           scale_at=scale_at, empty_at_ceiling=True)
    lo, hi = ALPHA_FLOOR, ALPHA_CEILING
    for _ in range(60):
        mid = 1.0 - math.sqrt((1.0 - lo) * (1.0 - hi))
        if member(mid):
            hi = mid
        else:
            lo = mid
    return TlBoundTest(bound=bound, p_star=1.0 - hi, alpha_star=hi, scale_at=scale_at)


# ------------------------------------------------------------------ #
# Exact simulated quantiles (validation of the normal approximation)
# ------------------------------------------------------------------ #


def m_sum_samples(sampler, location: float, scale: float, n: int, *,
                  replications: int = 10_000, seed: int = 1729,
                  cfg: MConfig = MConfig(), purpose: str = "m_exact"):
    """Simulated |sum psi|/sqrt(n) and |sum chi|/sqrt(n) at the true functional.

    ``sampler(generator, size)`` draws one sample from the model; the
    caller supplies the model's own functional values.
    """
    psi_vals = np.empty(replications)
    chi_vals = np.empty(replications)
    sq = math.sqrt(n)
    for r in range(replications):
        sample = np.asarray(sampler(substream(seed, purpose, n, r), n), dtype=float)
        u = (sample - location) / scale
        psi_vals[r] = abs(np.sum(psi(u, cfg.c))) / sq
        chi_vals[r] = abs(np.sum(chi(u))) / sq
    return psi_vals, chi_vals


def m_exact_quantiles(sampler, location: float, scale: float, alpha_tilde: float,
                      n: int, *, replications: int = 10_000, seed: int = 1729,
                      cfg: MConfig = MConfig()) -> tuple[float, float]:
    """Simulated alpha_tilde quantiles of the two standardized moment sums."""
    if not 0 < alpha_tilde < 1:
        raise DomainError("alpha_tilde must lie strictly inside (0, 1)")
    psi_vals, chi_vals = m_sum_samples(sampler, location, scale, n,
                                       replications=replications, seed=seed, cfg=cfg)
    psi_vals.sort()
    chi_vals.sort()
    from .numerics import empirical_quantile

    return (empirical_quantile(psi_vals, alpha_tilde),
            empirical_quantile(chi_vals, alpha_tilde))


def normal_population_functional(cfg: MConfig = MConfig()) -> tuple[float, float]:
    """Population (t_l, t_s) of the standard normal, by quadrature.

    The location is zero by symmetry; the scale solves the chi moment
    equation under the normal density.
    """
    def chi_moment(s: float) -> float:
        val, _ = integrate.quad(
            lambda v: chi(v / s) * math.exp(-0.5 * v * v) / math.sqrt(2.0 * math.pi),
            -np.inf, np.inf)
        return val

    lo, hi = 1e-3, 8.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi_moment(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.0, 0.5 * (lo + hi)


def normal_approx_psi_quantile(alpha_tilde: float, scale: float,
                               cfg: MConfig = MConfig()) -> float:
    """Gaussian approximation to the absolute psi moment-sum quantile.

    The sum is centred, so its absolute value at level alpha_tilde maps
    to the (1+alpha_tilde)/2 normal quantile, scaled by the root second
    moment of psi (computed by quadrature under the standard normal).
    """
    v, _ = integrate.quad(
        lambda u: psi(u / scale, cfg.c) ** 2 * math.exp(-0.5 * u * u)
        / math.sqrt(2.0 * math.pi), -np.inf, np.inf)
    return _band_quantile(alpha_tilde) * math.sqrt(v)
