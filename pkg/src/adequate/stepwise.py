"""Forward variable selection gated against pure-noise covariates.

Each candidate inclusion is judged by the probability that the best of
the remaining covariates, if all were replaced by standard Gaussian
white noise, would reduce the residual sum of squares at least as much.
That probability has a closed form through the beta law of a single
noise covariate's residual reduction, so no error-variance estimate,
regularization parameter or cross-validation is needed.  Selection
stops at the first candidate whose noise-comparison p-value exceeds
alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DataError, DomainError
from .numerics import replicate_samples, substream

__all__ = [
    "RegressionData",
    "SelectionState",
    "StepResult",
    "SelectionResult",
    "BetaLawReport",
    "step_pvalue",
    "should_stop",
    "best_candidate",
    "run_selection",
    "validate_beta_law",
    "classification_errors",
]

_COLLINEAR_TOL = 1e-8


@dataclass(frozen=True)
class RegressionData:
    """Response vector, design matrix and column labels."""

    response: np.ndarray
    design: np.ndarray
    labels: tuple[str, ...]

    @classmethod
    def from_arrays(cls, response, design, labels=None) -> "RegressionData":
        y = np.asarray(response, dtype=float).ravel()
        X = np.asarray(design, dtype=float)
        if X.ndim != 2:
            raise DataError("design must be a 2-d matrix")
        if y.size != X.shape[0]:
            raise DataError(f"response length {y.size} != design rows {X.shape[0]}")
        if y.size < 3:
            raise DataError("need at least 3 observations")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("non-finite values in regression data")
        if labels is None:
            labels = tuple(f"x{j}" for j in range(X.shape[1]))
        elif len(labels) != X.shape[1]:
            raise DataError("label count does not match design columns")
        return cls(response=y, design=X, labels=tuple(str(l) for l in labels))

    @property
    def n(self) -> int:
        return int(self.response.size)

    @property
    def p(self) -> int:
        return int(self.design.shape[1])


@dataclass
class SelectionState:
    """Mutable state of one forward-selection pass.

    ``x_res`` keeps every candidate column residualized against the
    orthonormal basis of the selected span, so each step costs one
    rank-one update instead of a full refit.
    """

    selected: list[int]
    ss0: float
    basis: np.ndarray            # (n, p0) orthonormal columns
    residual: np.ndarray
    x_res: np.ndarray
    norms0: np.ndarray           # original column norms, for the collinearity test
    active: np.ndarray           # candidates still usable
    skipped: list[int] = field(default_factory=list)

    @property
    def p0(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class StepResult:
    index: int
    label: str
    ss_before: float
    ss_after: float
    p_value: float
    stopped: bool


@dataclass(frozen=True)
class SelectionResult:
    steps: list[StepResult]
    selected: list[int]
    labels: list[str]
    centered: bool
    n_effective: int
    skipped: list[int]


def step_pvalue(ss0: float, ss01: float, n: int, p0: int, p_total: int) -> float:
    """Probability that the best of p_total - p0 noise covariates beats ss01.

    Equals 1 - pbeta(1 - ss01/ss0, 1/2, (n-p0-1)/2)^(p_total-p0),
    evaluated in log space so that exponents in the thousands keep full
    accuracy.
    """
    _validate_step_args(ss0, ss01, n, p0, p_total)
    ratio = min(ss01 / ss0, 1.0)
    b = (n - p0 - 1) / 2.0
    k = p_total - p0
    # log pbeta(1 - ratio, 1/2, b) via the complement's symmetry
    comp = float(special.betainc(b, 0.5, ratio))
    if comp >= 1.0:
        return 1.0
    log_b = math.log1p(-comp)
    return float(-np.expm1(k * log_b))


def should_stop(ss0: float, ss01: float, n: int, p0: int, p_total: int,
                alpha: float) -> bool:
    """Stopping rule: the residual drop fails the alpha noise gate.

    Equivalent to ``step_pvalue(...) > alpha``; this form inverts the
    beta quantile once instead of evaluating the p-value.
    """
    _validate_step_args(ss0, ss01, n, p0, p_total)
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    k = p_total - p0
    level = math.exp(math.log1p(-alpha) / k)     # (1 - alpha)^(1/k)
    q = float(special.betaincinv(0.5, (n - p0 - 1) / 2.0, level))
    return ss01 > ss0 * (1.0 - q)


def _validate_step_args(ss0, ss01, n, p0, p_total):
    if not ss0 > 0:
        raise DomainError("current residual sum of squares must be positive")
    if ss01 < -1e-12 * ss0 or ss01 > ss0 * (1 + 1e-12):
        raise DomainError("new residual sum of squares must lie in [0, ss0]")
    if p0 > n - 2:
        raise DomainError(f"selected count {p0} exceeds n - 2 = {n - 2}")
    if p_total <= p0:
        raise DomainError("need at least one unselected covariate")


def _initial_state(y: np.ndarray, X: np.ndarray) -> SelectionState:
    n = y.size
    norms0 = np.sqrt(np.einsum("ij,ij->j", X, X))
    active = norms0 > 0
    return SelectionState(selected=[], ss0=float(y @ y),
                          basis=np.empty((n, 0)), residual=y.copy(),
                          x_res=X.copy(), norms0=norms0, active=active.copy(),
                          skipped=list(np.flatnonzero(~active)))


def best_candidate(state: SelectionState, data: RegressionData) -> tuple[int, float]:
    """Index and new residual sum of squares of the best single addition.

    Exact: the orthogonalized-column update gives the same minimizer as
    refitting every candidate.  Ties break to the lowest column index;
    candidates that have become collinear with the selected span are
    skipped and recorded on the state.
    """
    if not state.active.any():
        raise DomainError("no usable candidate columns remain")
    norms2 = np.einsum("ij,ij->j", state.x_res, state.x_res)
    collinear = state.active & (norms2 <= (_COLLINEAR_TOL * state.norms0) ** 2)
    if collinear.any():
        state.skipped.extend(np.flatnonzero(collinear).tolist())
        state.active &= ~collinear
        if not state.active.any():
            raise DomainError("all remaining candidates are collinear with the span")
    proj = state.x_res.T @ state.residual
    with np.errstate(divide="ignore", invalid="ignore"):
        drop = np.where(state.active, proj * proj / norms2, -np.inf)
    j = int(np.argmax(drop))
    ss01 = max(state.ss0 - float(drop[j]), 0.0)
    return j, ss01


def _accept(state: SelectionState, j: int) -> None:
    q = state.x_res[:, j].copy()
    # one reorthogonalization pass keeps the basis orthonormal in float
    if state.basis.shape[1]:
        q -= state.basis @ (state.basis.T @ q)
    q /= np.linalg.norm(q)
    state.basis = np.column_stack([state.basis, q])
    state.residual -= q * (q @ state.residual)
    state.ss0 = float(state.residual @ state.residual)
    state.x_res -= np.outer(q, q @ state.x_res)
    state.active[j] = False
    state.selected.append(j)


def run_selection(data: RegressionData, alpha: float, *,
                  center: bool = True, max_steps: int | None = None) -> SelectionResult:
    """Forward selection until the first noise-comparison p-value exceeds alpha.

    The first failing candidate is reported with ``stopped=True`` and
    excluded from the selected set.  Centering the response and the
    covariates (the default) absorbs the intercept and costs one degree
    of freedom, so the beta law is applied with n - 1 in place of n.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    y = data.response
    X = data.design
    if center:
        y = y - y.mean()
        X = X - X.mean(axis=0)
    n_eff = data.n - 1 if center else data.n
    state = _initial_state(y, X)
    steps: list[StepResult] = []
    budget = max_steps if max_steps is not None else n_eff - 2
    while state.p0 < min(n_eff - 2, budget) and state.active.any():
        try:
            j, ss01 = best_candidate(state, data)
        except DomainError:
            break
        p = step_pvalue(state.ss0, ss01, n_eff, state.p0, data.p)
        stop = p > alpha
        steps.append(StepResult(index=j, label=data.labels[j],
                                ss_before=state.ss0, ss_after=ss01,
                                p_value=p, stopped=stop))
        if stop:
            break
        _accept(state, j)
        if state.ss0 <= 1e-12 * float(data.response @ data.response):
            break
    return SelectionResult(steps=steps, selected=list(state.selected),
                           labels=[data.labels[j] for j in state.selected],
                           centered=center, n_effective=n_eff,
                           skipped=sorted(state.skipped))


def classification_errors(data: RegressionData, selected, *, center: bool = True) -> int:
    """Misclassifications of 0/1 labels by the fitted values thresholded at 0.5."""
    y = data.response
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise DataError("classification check needs 0/1 labels")
    cols = np.asarray(list(selected), dtype=int)
    X = data.design[:, cols]
    if center:
        X = np.column_stack([np.ones(data.n), X])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    return int(np.sum((fitted >= 0.5) != (y >= 0.5)))


# ------------------------------------------------------------------ #
# Monte Carlo validation of the noise-covariate beta law
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class BetaLawReport:
    n: int
    p0: int
    replications: int
    ks_distance: float
    ks_threshold: float
    mean_stat: float
    expected_mean: float
    mean_se: float
    passed: bool


def validate_beta_law(n: int, p0: int, *, replications: int = 2000,
                      seed: int = 1729) -> BetaLawReport:
    """Simulate one noise covariate's residual drop against its beta law.

    A fixed residual configuration (p0 selected columns, no intercept)
    is drawn once; fresh noise covariates are then added one at a time.
    Reports the Kolmogorov distance of 1 - SS/ss0 from
    Beta(1/2, (n-p0-1)/2) against the asymptotic 0.99 null quantile,
    plus the beta mean identity 1/(n-p0).
    """
    if p0 > n - 2:
        raise DomainError(f"selected count {p0} exceeds n - 2 = {n - 2}")
    gen = substream(seed, "betalaw_design", n, p0)
    X = gen.standard_normal((n, p0))
    y = gen.standard_normal(n)
    if p0 > 0:
        q, _ = np.linalg.qr(X)
        resid = y - q @ (q.T @ y)
    else:
        q = np.empty((n, 0))
        resid = y.copy()
    ss0 = float(resid @ resid)

    noise = replicate_samples(seed, "betalaw_noise", n, 0, replications)
    if p0 > 0:
        noise = noise - (noise @ q) @ q.T
    proj = noise @ resid
    norms2 = np.einsum("ij,ij->i", noise, noise)
    u = np.sort((proj * proj) / (norms2 * ss0))    # 1 - SS_j/ss0

    b = (n - p0 - 1) / 2.0
    fitted = special.betainc(0.5, b, u)
    hi = np.arange(1, replications + 1) / replications
    lo = np.arange(0, replications) / replications
    ks = float(max((hi - fitted).max(), (fitted - lo).max()))
    ks_threshold = 1.6276 / math.sqrt(replications)   # asymptotic 0.99 quantile
    mean_stat = float(u.mean())
    expected = 1.0 / (n - p0)
    mean_se = float(u.std(ddof=1) / math.sqrt(replications))
    passed = ks <= ks_threshold and abs(mean_stat - expected) <= 4 * mean_se
    return BetaLawReport(n=n, p0=p0, replications=replications,
                         ks_distance=ks, ks_threshold=ks_threshold,
                         mean_stat=mean_stat, expected_mean=expected,
                         mean_se=mean_se, passed=passed)
