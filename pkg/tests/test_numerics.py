"""Distribution functions, empirical distances and the simulation engine.

Expected values are either analytic, frozen from an independently coded
oracle in this file, or checked against a second simulation.
"""

import math

import numpy as np
import pytest

from adequate import numerics as nm
from adequate.errors import ConfigurationError, DomainError, ParameterError


# ------------------------------------------------------------------ #
# Independent oracles
# ------------------------------------------------------------------ #

def erf_series(x: float) -> float:
    """Taylor/asymptotic-free erf via its power series (|x| small enough here)."""
    total = 0.0
    term = x
    k = 0
    while abs(term) > 1e-17 * max(abs(total), 1.0):
        total += term / (2 * k + 1)
        k += 1
        term *= -x * x / k
    return 2.0 / math.sqrt(math.pi) * total


def normal_cdf_series(x: float) -> float:
    return 0.5 + 0.5 * erf_series(x / math.sqrt(2.0))


def brute_ecdf_sups(values, cdf) -> tuple[float, float]:
    """Counting-based sup deviations, O(n^2); independent of the library path."""
    ys = np.sort(np.asarray(values, dtype=float))
    n = len(ys)
    dplus = dminus = 0.0
    for t in ys:
        f = cdf(t)
        at = np.sum(ys <= t) / n
        before = np.sum(ys < t) / n
        dplus = max(dplus, at - f)
        dminus = max(dminus, f - before)
    return dplus, dminus


# ------------------------------------------------------------------ #
# cdf / quantile
# ------------------------------------------------------------------ #

class TestCdf:
    def test_two_sided_normal_tail_at_3_121(self):
        # reference value 0.0018
        d = nm.standard_normal()
        assert 2.0 * (1.0 - nm.cdf(d, 3.121)) == pytest.approx(0.0018, abs=1e-4)

    def test_beta_boundaries(self):
        d = nm.beta_dist(0.5, 12)
        assert nm.cdf(d, 0.0) == 0.0
        assert nm.cdf(d, 1.0) == 1.0

    def test_student_t_symmetry(self):
        assert nm.cdf(nm.student_t(26), 0.0) == pytest.approx(0.5, abs=1e-14)

    def test_poisson_cdf_steps(self):
        d = nm.poisson_dist(2.0)
        pmf0 = math.exp(-2.0)
        assert nm.cdf(d, 0) == pytest.approx(pmf0, rel=1e-12)
        assert nm.cdf(d, 0.7) == pytest.approx(pmf0, rel=1e-12)
        assert nm.cdf(d, 1) == pytest.approx(pmf0 * 3.0, rel=1e-12)
        assert nm.cdf(d, -1) == 0.0

    def test_invalid_parameters(self):
        with pytest.raises(ParameterError):
            nm.student_t(0)
        with pytest.raises(ParameterError):
            nm.beta_dist(-1.0, 2.0)
        with pytest.raises(ParameterError):
            nm.beta_dist(1.0, 0.0)
        with pytest.raises(ParameterError):
            nm.poisson_dist(0.0)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            nm.cdf(nm.beta_dist(1, 2), 1.5)
        with pytest.raises(DomainError):
            nm.cdf(nm.standard_normal(), np.inf)


class TestQuantile:
    def test_normal_median(self):
        assert nm.quantile(nm.standard_normal(), 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_normal_0975_against_series_oracle(self):
        # bisect the independently coded erf series
        lo, hi = 0.0, 4.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if normal_cdf_series(mid) < 0.975:
                lo = mid
            else:
                hi = mid
        oracle = 0.5 * (lo + hi)
        assert oracle == pytest.approx(1.959964, abs=1e-5)
        assert nm.quantile(nm.standard_normal(), 0.975) == pytest.approx(oracle, abs=1e-8)

    def test_beta_round_trip(self):
        # quantile(cdf(x)) = x across the grid for a well-conditioned shape;
        # the heavy-tailed (0.5, 12) case only where its density is not
        # vanishingly flat (beyond that the inverse problem carries no
        # information at double precision)
        d = nm.beta_dist(3, 2)
        for x in np.arange(0.1, 0.95, 0.1):
            assert nm.quantile(d, nm.cdf(d, x)) == pytest.approx(x, abs=1e-8)
        d = nm.beta_dist(0.5, 12)
        for x in np.arange(0.1, 0.75, 0.1):
            assert nm.quantile(d, nm.cdf(d, x)) == pytest.approx(x, abs=1e-8)

    def test_round_trip_all_continuous_kinds(self):
        # inverse consistency to 1e-8 on a probability grid
        dists = [nm.standard_normal(), nm.student_t(7), nm.student_t(26),
                 nm.beta_dist(0.5, 12.5), nm.beta_dist(3, 2)]
        for d in dists:
            for p in np.linspace(0.02, 0.98, 25):
                q = nm.quantile(d, p)
                assert nm.cdf(d, q) == pytest.approx(p, abs=1e-8)

    def test_poisson_quantile_is_smallest_k(self):
        d = nm.poisson_dist(3.5)
        for p in (0.05, 0.3, 0.5, 0.9, 0.99):
            k = nm.quantile(d, p)
            assert nm.cdf(d, k) >= p
            assert k == 0 or nm.cdf(d, k - 1) < p

    def test_monotone_in_p(self):
        d = nm.student_t(5)
        qs = [nm.quantile(d, p) for p in np.linspace(0.01, 0.99, 50)]
        assert np.all(np.diff(qs) > 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            nm.quantile(nm.standard_normal(), 0.0)
        with pytest.raises(DomainError):
            nm.quantile(nm.standard_normal(), 1.0)


# ------------------------------------------------------------------ #
# Empirical distances
# ------------------------------------------------------------------ #

class TestKuiper:
    def test_single_zero_observation(self):
        e = nm.EmpiricalDist.from_sample([0.0])
        assert nm.kuiper_distance(e, nm.standard_normal()) == pytest.approx(1.0, abs=1e-12)

    def test_two_symmetric_points_match_oracle(self):
        # counting oracle on (-1.96, 1.96): both sups equal 0.5 - Phi(-1.96),
        # so the rotation-invariant distance is ~0.9500
        y = [-1.96, 1.96]
        dplus, dminus = brute_ecdf_sups(y, lambda t: nm.cdf(nm.standard_normal(), t))
        oracle = dplus + dminus
        assert oracle == pytest.approx(0.95000, abs=1e-4)
        e = nm.EmpiricalDist.from_sample(y)
        assert nm.kuiper_distance(e, nm.standard_normal()) == pytest.approx(oracle, abs=1e-12)

    def test_negation_invariance(self):
        gen = np.random.default_rng(11)
        y = gen.standard_normal(40)
        d = nm.standard_normal()
        a = nm.kuiper_distance(nm.EmpiricalDist.from_sample(y), d)
        b = nm.kuiper_distance(nm.EmpiricalDist.from_sample(-y), d)
        assert a == pytest.approx(b, abs=1e-12)

    def test_empty_sample_rejected(self):
        with pytest.raises(DomainError):
            nm.EmpiricalDist.from_sample([])

    def test_discrete_reference_rejected(self):
        e = nm.EmpiricalDist.from_sample([1.0, 2.0])
        with pytest.raises(DomainError):
            nm.kuiper_distance(e, nm.poisson_dist(2.0))


class TestKolmogorov:
    def test_single_zero_observation(self):
        e = nm.EmpiricalDist.from_sample([0.0])
        assert nm.kolmogorov_distance(e, nm.standard_normal()) == pytest.approx(0.5, abs=1e-12)

    def test_never_exceeds_kuiper(self):
        gen = np.random.default_rng(5)
        d = nm.standard_normal()
        for _ in range(20):
            e = nm.EmpiricalDist.from_sample(gen.standard_normal(gen.integers(1, 60)))
            assert nm.kolmogorov_distance(e, d) <= nm.kuiper_distance(e, d) + 1e-15

    def test_copper_standardized_matches_brute_force(self, copper):
        y = (copper - 2.016) / 0.116
        cdf = lambda t: nm.cdf(nm.standard_normal(), t)
        dplus, dminus = brute_ecdf_sups(y, cdf)
        e = nm.EmpiricalDist.from_sample(y)
        assert nm.kolmogorov_distance(e, nm.standard_normal()) == pytest.approx(
            max(dplus, dminus), abs=1e-12)
        assert nm.kuiper_distance(e, nm.standard_normal()) == pytest.approx(
            dplus + dminus, abs=1e-12)

    def test_random_samples_match_brute_force(self):
        # both distances agree with the counting oracle to 1e-12 up to n=200
        gen = np.random.default_rng(17)
        d = nm.standard_normal()
        cdf = lambda t: nm.cdf(d, t)
        for n in (3, 17, 88, 200):
            y = gen.standard_normal(n) * 1.3 + 0.2
            dplus, dminus = brute_ecdf_sups(y, cdf)
            e = nm.EmpiricalDist.from_sample(y)
            assert nm.kuiper_distance(e, d) == pytest.approx(dplus + dminus, abs=1e-12)
            assert nm.kolmogorov_distance(e, d) == pytest.approx(max(dplus, dminus),
                                                                 abs=1e-12)


# ------------------------------------------------------------------ #
# Simulation engine
# ------------------------------------------------------------------ #

class TestSubstreams:
    def test_same_label_bit_identical(self):
        a = nm.substream(1729, "x", 27, 5).standard_normal(27)
        b = nm.substream(1729, "x", 27, 5).standard_normal(27)
        assert np.array_equal(a, b)

    def test_labels_disjoint(self):
        a = nm.substream(1729, "x", 27, 5).standard_normal(27)
        b = nm.substream(1729, "x", 27, 6).standard_normal(27)
        c = nm.substream(1730, "x", 27, 5).standard_normal(27)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_replicate_matrix_chunk_invariant(self):
        whole = nm.replicate_samples(1, "p", 10, 0, 8)
        parts = np.vstack([nm.replicate_samples(1, "p", 10, 0, 3),
                           nm.replicate_samples(1, "p", 10, 3, 5)])
        assert np.array_equal(whole, parts)


class TestSimulateQuantiles:
    def test_sqrt_n_mean_statistic_limit(self):
        # 0.975 quantile of sqrt(n)|mean| tends to the |N(0,1)| quantile 2.2414
        spec = nm.SimSpec(n=400, replications=20_000, seed=1729, statistic="gauss_t1")
        (q,) = nm.simulate_quantiles(spec, [0.975])
        assert q == pytest.approx(2.2414, abs=0.05)

    def test_sum_of_squares_mean(self):
        table = nm.null_table("gauss_t2", 27, 10_000, 1729)
        assert table.mean() == pytest.approx(27.0, abs=0.5)

    def test_median_stable_across_seeds(self):
        spec1 = nm.SimSpec(n=50, replications=10_000, seed=1, statistic="gauss_t1")
        spec2 = nm.SimSpec(n=50, replications=10_000, seed=2, statistic="gauss_t1")
        (m1,) = nm.simulate_quantiles(spec1, [0.5])
        (m2,) = nm.simulate_quantiles(spec2, [0.5])
        # 3 Monte Carlo standard errors of a median of 1e4 draws
        table = nm.null_table("gauss_t1", 50, 10_000, 1)
        dens_se = 1.25 * table.std() / math.sqrt(10_000)
        assert abs(m1 - m2) <= 3 * 2 * dens_se

    def test_bit_reproducible(self):
        spec = nm.SimSpec(n=27, replications=5_000, seed=7, statistic="gauss_t4")
        probs = [0.5, 0.9, 0.975]
        a = nm.simulate_quantiles(spec, probs)
        b = nm.simulate_quantiles(spec, probs)
        assert a.tobytes() == b.tobytes()

    def test_unregistered_statistic(self):
        spec = nm.SimSpec(n=10, replications=2_000, seed=1, statistic="nope")
        with pytest.raises(ConfigurationError):
            nm.simulate_quantiles(spec, [0.5])

    def test_too_few_replications(self):
        spec = nm.SimSpec(n=10, replications=999, seed=1, statistic="gauss_t1")
        with pytest.raises(ParameterError):
            nm.simulate_quantiles(spec, [0.5])


class TestKolmogorovQuantile:
    def test_bounded_by_one(self):
        assert nm.kolmogorov_quantile(0.999, 5, replications=2000) <= 1.0

    def test_against_second_simulation(self):
        q = nm.kolmogorov_quantile(0.9667, 27, replications=20_000, seed=1729)
        # independent oracle: fresh uniform samples under a different seed
        gen = np.random.default_rng(99)
        u = np.sort(gen.random((100_000, 27)), axis=1)
        hi = np.arange(1, 28) / 27
        lo = np.arange(0, 27) / 27
        dko = np.maximum((hi - u).max(axis=1), (u - lo).max(axis=1))
        oracle = np.quantile(dko, 0.9667)
        assert q == pytest.approx(oracle, abs=0.01)

    def test_root_n_scaling(self):
        q_n = nm.kolmogorov_quantile(0.9, 25, replications=20_000)
        q_4n = nm.kolmogorov_quantile(0.9, 100, replications=20_000)
        assert 1.8 <= q_n / q_4n <= 2.2


class TestTableHelpers:
    def test_empirical_quantile_ceiling_convention(self):
        vals = np.arange(1.0, 11.0)          # 10 sorted replicates
        assert nm.empirical_quantile(vals, 0.05) == 1.0   # ceil(0.5) = 1
        assert nm.empirical_quantile(vals, 0.10) == 1.0
        assert nm.empirical_quantile(vals, 0.11) == 2.0
        assert nm.empirical_quantile(vals, 1.0) == 10.0

    def test_pvalue_tie_conventions(self):
        vals = np.array([1.0, 2.0, 2.0, 3.0])
        # ties count toward the larger p-value
        assert nm.upper_pvalue(vals, 2.0) == pytest.approx(0.75)
        assert nm.upper_pvalue(vals, 3.5) == 0.0
        assert nm.upper_pvalue(vals, 0.5) == 1.0
        assert nm.two_sided_pvalue(vals, 2.0) == pytest.approx(1.0)
