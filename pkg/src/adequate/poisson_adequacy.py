"""Chi-squared adequacy of individual Poisson models.

The family-level statistic plugs the sample mean into the cell
probabilities; the model-level variant fixes the rate and asks which
rates, if any, keep the statistic below a simulated critical value.
The two answer different questions: the family statistic never names
an adequate rate, the adequacy set does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DataError, DomainError
from .numerics import empirical_quantile, substream

__all__ = [
    "CountSample",
    "LambdaSet",
    "chisq_family_stat",
    "lambda_adequacy_set",
    "poisson_cell_probs",
    "default_truncation",
]


def poisson_cell_probs(lam: float, k: int) -> np.ndarray:
    """Cell probabilities (P(X=0), ..., P(X=k), P(X>k)) for rate lam."""
    if not lam > 0:
        raise DomainError("rate must be positive")
    j = np.arange(k + 1)
    probs = np.exp(j * math.log(lam) - lam - special.gammaln(j + 1))
    return np.append(probs, max(1.0 - probs.sum(), 0.0))


def default_truncation(counts: np.ndarray) -> int:
    """Largest cutoff k >= 1 whose overflow cell keeps expected count >= 1."""
    mean = counts.mean()
    n = counts.size
    k = 1
    while k < 200:
        tail = 1.0 - special.pdtr(k + 1, mean)
        if n * tail < 1.0:
            break
        k += 1
    return k


@dataclass(frozen=True)
class CountSample:
    """Nonnegative integer counts with a fixed cell truncation.

    ``frequencies`` holds the empirical cell frequencies for counts
    0..k plus one overflow cell; they sum to one.
    """

    counts: np.ndarray
    k: int
    frequencies: np.ndarray

    @classmethod
    def from_counts(cls, counts, k: int | None = None) -> "CountSample":
        arr = np.asarray(counts)
        if arr.size == 0:
            raise DataError("count sample is empty")
        if not np.issubdtype(arr.dtype, np.integer):
            as_int = np.asarray(arr, dtype=np.int64)
            if not np.array_equal(as_int, arr):
                raise DataError("counts must be integers")
            arr = as_int
        if np.any(arr < 0):
            raise DataError("counts must be nonnegative")
        if k is None:
            if arr.max() == 0:
                raise DomainError("all-zero counts give no usable cells")
            k = default_truncation(arr.astype(float))
        if k < 1:
            raise DomainError("truncation index must be >= 1")
        clipped = np.minimum(arr, k + 1)
        freq = np.bincount(clipped, minlength=k + 2) / arr.size
        return cls(counts=arr, k=int(k), frequencies=freq)

    @property
    def n(self) -> int:
        return int(self.counts.size)


def _chisq(frequencies: np.ndarray, probs: np.ndarray) -> float:
    return float(np.sum((frequencies - probs) ** 2 / probs))


def chisq_family_stat(s: CountSample) -> float:
    """Cell chi-squared with the sample mean plugged in as the rate."""
    mean = float(s.counts.mean())
    if mean <= 0:
        raise DomainError("family statistic needs a positive sample mean")
    return _chisq(s.frequencies, poisson_cell_probs(mean, s.k))


def chisq_model_stat(s: CountSample, lam: float) -> float:
    """Cell chi-squared against one fixed rate."""
    return _chisq(s.frequencies, poisson_cell_probs(lam, s.k))


@dataclass(frozen=True)
class LambdaSet:
    """Adequate rates on a grid, with the statistic profile behind them."""

    grid: np.ndarray
    statistics: np.ndarray
    critical_values: np.ndarray
    adequate: np.ndarray         # boolean mask over the grid
    level: float

    @property
    def values(self) -> np.ndarray:
        return self.grid[self.adequate]

    @property
    def empty(self) -> bool:
        return not bool(self.adequate.any())


def lambda_adequacy_set(s: CountSample, alpha: float, lam_grid,
                        *, replications: int = 1000, seed: int = 1729) -> LambdaSet:
    """Rates whose model-level statistic stays below its simulated critical value.

    Critical values come from parametric simulation at each grid rate
    (the chi-squared asymptotics are unreliable at these cell counts):
    a rate is adequate when its statistic is at most the alpha quantile
    of the statistic's null distribution for samples of the same size.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    grid = np.asarray(lam_grid, dtype=float)
    if np.any(grid <= 0):
        raise DomainError("rate grid must be positive")
    n = s.n
    cells = np.arange(s.k + 2)
    stats = np.empty(grid.size)
    crit = np.empty(grid.size)
    for i, lam in enumerate(grid):
        probs = poisson_cell_probs(lam, s.k)
        stats[i] = _chisq(s.frequencies, probs)
        draws = substream(seed, "poisson_crit", n, i).poisson(lam, size=(replications, n))
        clipped = np.minimum(draws, s.k + 1)
        freqs = (clipped[:, :, None] == cells).mean(axis=1)
        null = np.sort(np.sum((freqs - probs) ** 2 / probs, axis=1))
        crit[i] = empirical_quantile(null, alpha)
    return LambdaSet(grid=grid, statistics=stats, critical_values=crit,
                     adequate=stats <= crit, level=alpha)
