"""Noise-gated forward selection: exact beta p-values, stop rule, paths."""

import math

import numpy as np
import pytest
from scipy import special

from adequate import stepwise as sw
from adequate.errors import DataError, DomainError


def naive_best_candidate(y, X, selected):
    """Full least-squares refit for every candidate column."""
    n = len(y)
    base = [X[:, j] for j in selected]
    best = (None, np.inf)
    for j in range(X.shape[1]):
        if j in selected:
            continue
        cols = np.column_stack(base + [X[:, j]]) if base or True else None
        beta, *_ = np.linalg.lstsq(np.column_stack(base + [X[:, j]]), y, rcond=None)
        ss = float(np.sum((y - np.column_stack(base + [X[:, j]]) @ beta) ** 2))
        if ss < best[1] - 1e-12:
            best = (j, ss)
    return best


class TestStepPvalue:
    def test_no_improvement_gives_one(self):
        assert sw.step_pvalue(10.0, 10.0, 30, 2, 100) == 1.0

    def test_perfect_fit_gives_zero(self):
        assert sw.step_pvalue(10.0, 0.0, 30, 2, 100) == 0.0

    def test_matches_direct_formula_at_moderate_exponent(self):
        ss0, ss01, n, p0, p_total = 5.0, 3.2, 25, 3, 10
        direct = 1.0 - special.betainc(0.5, (n - p0 - 1) / 2, 1 - ss01 / ss0) ** (p_total - p0)
        assert sw.step_pvalue(ss0, ss01, n, p0, p_total) == pytest.approx(direct, abs=1e-12)

    def test_log_space_survives_huge_exponents(self):
        # a strong improvement against thousands of candidates: the direct
        # power rounds the base to 1.0 and returns p = 0; the log form keeps
        # the k * log(pbeta) tail
        p = sw.step_pvalue(100.0, 20.0, 72, 3, 3571)
        b = (72 - 3 - 1) / 2
        comp = float(special.betainc(b, 0.5, 0.2))
        assert comp < 1e-16                      # base == 1.0 in double
        assert p == pytest.approx(3568 * comp, rel=1e-10)
        assert 0.0 < p < 1e-12

    def test_domain_validation(self):
        with pytest.raises(DomainError):
            sw.step_pvalue(0.0, 0.0, 30, 2, 100)
        with pytest.raises(DomainError):
            sw.step_pvalue(5.0, 6.0, 30, 2, 100)
        with pytest.raises(DomainError):
            sw.step_pvalue(5.0, 3.0, 10, 9, 100)
        with pytest.raises(DomainError):
            sw.step_pvalue(5.0, 3.0, 30, 5, 5)


class TestStopRule:
    def test_equivalent_to_pvalue_threshold(self):
        """The quantile form and the p-value form agree everywhere."""
        gen = np.random.default_rng(23)
        disagreements = 0
        for _ in range(10_000):
            n = int(gen.integers(5, 120))
            p0 = int(gen.integers(0, n - 2))
            p_total = p0 + int(gen.integers(1, 4000))
            alpha = float(gen.uniform(0.001, 0.999))
            ss0 = float(gen.uniform(0.1, 50.0))
            ss01 = ss0 * float(gen.uniform(0.0, 1.0))
            p = sw.step_pvalue(ss0, ss01, n, p0, p_total)
            stop = sw.should_stop(ss0, ss01, n, p0, p_total, alpha)
            if abs(p - alpha) > 1e-12 and stop != (p > alpha):
                disagreements += 1
        assert disagreements == 0

    def test_alpha_near_one_never_stops_on_real_improvement(self):
        # any inclusion whose p-value is below one survives an alpha -> 1 gate
        assert not sw.should_stop(10.0, 5.0, 30, 2, 100, 1 - 1e-9)
        assert not sw.should_stop(10.0, 8.0, 30, 2, 100, 1 - 1e-9)

    def test_alpha_near_zero_stops_unless_fit_is_perfect(self):
        assert sw.should_stop(10.0, 8.0, 30, 2, 100, 1e-9)
        # an essentially perfect fit has p ~ 0 and still passes the gate
        assert not sw.should_stop(10.0, 1e-12, 30, 2, 100, 1e-9)


class TestBestCandidate:
    def test_exact_column_match_wins(self):
        gen = np.random.default_rng(3)
        X = gen.standard_normal((20, 6))
        y = X[:, 4].copy()
        data = sw.RegressionData.from_arrays(y, X)
        state = sw._initial_state(y, X)
        j, ss01 = sw.best_candidate(state, data)
        assert j == 4
        assert ss01 == pytest.approx(0.0, abs=1e-18)

    def test_matches_naive_refits(self):
        gen = np.random.default_rng(9)
        for trial in range(5):
            X = gen.standard_normal((20, 10))
            y = gen.standard_normal(20)
            data = sw.RegressionData.from_arrays(y, X)
            state = sw._initial_state(y.copy(), X.copy())
            selected = []
            for _ in range(4):
                j, ss01 = sw.best_candidate(state, data)
                oj, oss = naive_best_candidate(y, X, selected)
                assert j == oj
                assert ss01 == pytest.approx(oss, abs=1e-9)
                sw._accept(state, j)
                selected.append(j)

    def test_larger_instances_against_refits(self):
        gen = np.random.default_rng(29)
        X = gen.standard_normal((50, 30))
        y = X[:, 7] - 2.0 * X[:, 19] + 0.3 * gen.standard_normal(50)
        data = sw.RegressionData.from_arrays(y, X)
        state = sw._initial_state(y.copy(), X.copy())
        selected = []
        for _ in range(6):
            j, ss01 = sw.best_candidate(state, data)
            oj, oss = naive_best_candidate(y, X, selected)
            assert j == oj
            assert ss01 == pytest.approx(oss, abs=1e-9)
            sw._accept(state, j)
            selected.append(j)

    def test_collinear_candidates_skipped(self):
        gen = np.random.default_rng(4)
        X = gen.standard_normal((25, 5))
        X[:, 3] = 2.0 * X[:, 1]               # exact duplicate direction
        y = X[:, 1] + 0.1 * gen.standard_normal(25)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.5, center=False)
        assert 3 in result.skipped or 3 not in result.selected
        assert len(set(result.selected)) == len(result.selected)


class TestRunSelection:
    def test_planted_signal_recovered(self):
        gen = np.random.default_rng(41)
        X = gen.standard_normal((100, 50))
        y = X[:, 3] + 0.5 * X[:, 7] + 0.05 * gen.standard_normal(100)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.05)
        assert set(result.selected[:2]) == {3, 7}
        assert all(s.p_value < 0.01 for s in result.steps[:2])

    def test_residuals_strictly_decrease(self):
        gen = np.random.default_rng(43)
        X = gen.standard_normal((40, 12))
        y = X[:, 0] + gen.standard_normal(40)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.7)
        accepted = [s for s in result.steps if not s.stopped]
        for s in accepted:
            assert s.ss_after < s.ss_before - 1e-12

    def test_stopping_step_reported_but_excluded(self):
        gen = np.random.default_rng(47)
        X = gen.standard_normal((40, 12))
        y = gen.standard_normal(40)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.02)
        if result.steps and result.steps[-1].stopped:
            assert result.steps[-1].index not in result.selected
        assert all(s.p_value <= 0.02 for s in result.steps[:-1])

    def test_pure_noise_selects_little(self):
        sizes = []
        for seed in (51, 52, 53):
            gen = np.random.default_rng(seed)
            X = gen.standard_normal((60, 40))
            y = gen.standard_normal(60)
            data = sw.RegressionData.from_arrays(y, X)
            sizes.append(len(sw.run_selection(data, 0.05).selected))
        assert np.mean(sizes) <= 2.0

    def test_covariate_scale_invariance(self):
        gen = np.random.default_rng(59)
        X = gen.standard_normal((50, 20))
        y = X[:, 2] - X[:, 11] + 0.2 * gen.standard_normal(50)
        base = sw.run_selection(sw.RegressionData.from_arrays(y, X), 0.1)
        X2 = X.copy()
        X2[:, 2] *= 10.0
        X2[:, 5] *= 0.001
        scaled = sw.run_selection(sw.RegressionData.from_arrays(y, X2), 0.1)
        assert scaled.selected == base.selected
        for a, b in zip(base.steps, scaled.steps):
            assert a.p_value == pytest.approx(b.p_value, abs=1e-9)

    def test_permutation_equivariance(self):
        gen = np.random.default_rng(61)
        X = gen.standard_normal((45, 15))
        y = X[:, 4] + 0.3 * gen.standard_normal(45)
        perm = gen.permutation(15)
        base = sw.run_selection(sw.RegressionData.from_arrays(y, X), 0.1)
        permuted = sw.run_selection(sw.RegressionData.from_arrays(y, X[:, perm]), 0.1)
        assert [int(perm[j]) for j in permuted.selected] == base.selected
        for a, b in zip(base.steps, permuted.steps):
            assert a.p_value == pytest.approx(b.p_value, abs=1e-9)

    def test_first_step_pvalue_matches_direct_monte_carlo(self):
        """The formula equals P(best-noise improvement beats the observed one),
        simulated directly through the same centred pipeline."""
        gen = np.random.default_rng(67)
        n, p = 20, 8
        X = gen.standard_normal((n, p))
        y = gen.standard_normal(n)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.9999, max_steps=1)
        first = result.steps[0]

        yc = y - y.mean()
        ss0 = float(yc @ yc)
        reps = 40_000
        noise = gen.standard_normal((reps, p, n))
        noise = noise - noise.mean(axis=2, keepdims=True)
        proj = noise @ yc
        norms2 = np.einsum("rpn,rpn->rp", noise, noise)
        ss_candidates = ss0 - proj ** 2 / norms2
        ss01_noise = ss_candidates.min(axis=1)
        mc = float(np.mean(ss01_noise < first.ss_after))
        assert first.p_value == pytest.approx(mc, abs=0.01)

    def test_uncentered_first_step_matches_monte_carlo(self):
        gen = np.random.default_rng(71)
        n, p = 18, 6
        X = gen.standard_normal((n, p))
        y = gen.standard_normal(n)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.9999, center=False, max_steps=1)
        first = result.steps[0]

        ss0 = float(y @ y)
        reps = 40_000
        noise = gen.standard_normal((reps, p, n))
        proj = noise @ y
        norms2 = np.einsum("rpn,rpn->rp", noise, noise)
        ss01_noise = (ss0 - proj ** 2 / norms2).min(axis=1)
        mc = float(np.mean(ss01_noise < first.ss_after))
        assert first.p_value == pytest.approx(mc, abs=0.01)

    def test_input_validation(self):
        with pytest.raises(DataError):
            sw.RegressionData.from_arrays([1.0, 2.0], np.eye(2))
        with pytest.raises(DataError):
            sw.RegressionData.from_arrays([1.0, 2.0, 3.0], np.ones((2, 2)))
        with pytest.raises(DataError):
            sw.RegressionData.from_arrays([1.0, np.inf, 3.0], np.ones((3, 2)))


class TestBetaLawValidator:
    def test_reference_configuration_passes(self):
        report = sw.validate_beta_law(20, 3, replications=2000)
        assert report.ks_distance <= report.ks_threshold
        assert report.expected_mean == pytest.approx(1.0 / 17.0)
        assert abs(report.mean_stat - report.expected_mean) <= 4 * report.mean_se
        assert report.passed

    def test_no_selected_columns_case(self):
        report = sw.validate_beta_law(15, 0, replications=2000)
        assert report.passed

    def test_deterministic(self):
        a = sw.validate_beta_law(20, 3, replications=1500, seed=9)
        b = sw.validate_beta_law(20, 3, replications=1500, seed=9)
        assert a.ks_distance == b.ks_distance
        assert a.mean_stat == b.mean_stat

    def test_bad_configuration(self):
        with pytest.raises(DomainError):
            sw.validate_beta_law(10, 9)


class TestClassification:
    def test_threshold_classifier_counts_errors(self):
        gen = np.random.default_rng(83)
        X = gen.standard_normal((60, 10))
        latent = X[:, 2] - X[:, 5]
        y = (latent > 0).astype(float)
        data = sw.RegressionData.from_arrays(y, X)
        result = sw.run_selection(data, 0.05)
        errors = sw.classification_errors(data, result.selected)
        assert 0 <= errors <= 10

    def test_requires_binary_labels(self):
        gen = np.random.default_rng(87)
        X = gen.standard_normal((20, 3))
        data = sw.RegressionData.from_arrays(gen.standard_normal(20), X)
        with pytest.raises(DataError):
            sw.classification_errors(data, [0])
