"""Refinement-time distributions: pmfs, sampling, expected counts."""

import numpy as np
import pytest

from rost import Scheduler, VARIANTS, rng_from_seed, simulate_refinement_counts


def all_schedulers(q=0.5, eta=0.5):
    return [Scheduler(v, q=q, eta=eta) for v in VARIANTS]


class TestPmfPinnedValues:
    def test_now(self):
        s = Scheduler("now")
        assert s.pmf(7, 7) == 1.0
        assert s.pmf(3, 7) == 0.0

    def test_uniform(self):
        s = Scheduler("uniform")
        assert np.allclose([s.pmf(t, 5) for t in range(1, 6)], 0.2, atol=1e-15)

    def test_age_proportional(self):
        s = Scheduler("agep")
        assert np.allclose([s.pmf(t, 3) for t in (1, 2, 3)], [1 / 6, 1 / 3, 1 / 2], atol=1e-15)

    def test_truncated_exponential(self):
        s = Scheduler("exp", q=0.5)
        assert np.allclose([s.pmf(t, 3) for t in (1, 2, 3)], [1 / 7, 2 / 7, 4 / 7], atol=1e-15)

    def test_uniform_now(self):
        s = Scheduler("uniform_now", eta=0.5)
        assert np.allclose(
            [s.pmf(t, 4) for t in (1, 2, 3, 4)], [1 / 6, 1 / 6, 1 / 6, 1 / 2], atol=1e-15
        )

    def test_uniform_exp(self):
        s = Scheduler("uniform_exp", eta=0.5, q=0.5)
        # mixes the renormalized geometric [1/3, 2/3] with uniform [1/2, 1/2]
        assert np.allclose([s.pmf(t, 2) for t in (1, 2)], [5 / 12, 7 / 12], atol=1e-15)

    def test_agep_now(self):
        s = Scheduler("agep_now", eta=0.5)
        # past weights proportional to t over 1..T-1
        assert np.allclose(
            [s.pmf(t, 4) for t in (1, 2, 3, 4)],
            [0.5 * 1 / 6, 0.5 * 2 / 6, 0.5 * 3 / 6, 0.5],
            atol=1e-15,
        )


class TestPmfProperties:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_normalization_sample_of_horizons(self, variant):
        s = Scheduler(variant, q=0.5, eta=0.5)
        for T in (1, 2, 3, 7, 50, 200):
            assert abs(s.pmf_vector(T).sum() - 1.0) < 1e-12

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_scalar_matches_vector(self, variant):
        s = Scheduler(variant, q=0.3, eta=0.7)
        for T in (1, 2, 5, 33):
            vec = s.pmf_vector(T)
            assert np.allclose([s.pmf(t, T) for t in range(1, T + 1)], vec, atol=1e-15)

    def test_exponential_approaches_now_as_q_grows(self):
        for q, floor in ((0.9, 0.9), (0.99, 0.99), (0.999999, 0.999999)):
            s = Scheduler("exp", q=q)
            assert s.pmf(50, 50) >= floor

    def test_uniform_now_with_zero_eta_is_uniform_over_past(self):
        # With eta=0 all mass spreads evenly over 1..T-1 (none on T); the
        # degenerate T=1 case still returns a valid distribution.
        s = Scheduler("uniform_now", eta=0.0)
        assert np.allclose(s.pmf_vector(5), [0.25, 0.25, 0.25, 0.25, 0.0], atol=1e-15)
        assert s.pmf(1, 1) == 1.0

    def test_one_observation_degenerate_cases(self):
        for variant in VARIANTS:
            s = Scheduler(variant, q=0.5, eta=0.5)
            assert abs(s.pmf(1, 1) - 1.0) < 1e-12

    def test_out_of_range_rejected(self):
        s = Scheduler("uniform")
        with pytest.raises(ValueError):
            s.pmf(0, 5)
        with pytest.raises(ValueError):
            s.pmf(6, 5)
        with pytest.raises(ValueError):
            s.pmf_vector(0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            Scheduler("nope")
        with pytest.raises(ValueError):
            Scheduler("exp", q=0.0)
        with pytest.raises(ValueError):
            Scheduler("uniform_now", eta=1.5)


class TestSample:
    def test_now_always_newest(self):
        s = Scheduler("now")
        rng = rng_from_seed(0)
        assert all(s.sample(T, rng) == T for T in (1, 3, 10, 77))

    def test_uniform_frequencies(self):
        s = Scheduler("uniform")
        rng = rng_from_seed(1)
        draws = np.array([s.sample(4, rng) for _ in range(40000)])
        freqs = np.bincount(draws, minlength=5)[1:]
        assert np.all(np.abs(freqs - 10000) < 300)

    def test_exponential_tail_mass(self):
        s = Scheduler("exp", q=0.9)
        rng = rng_from_seed(2)
        draws = np.array([s.sample(100, rng) for _ in range(5000)])
        assert np.mean(draws >= 98) >= 0.99


class TestExpectedRefinements:
    def test_now_is_constant_budget(self):
        s = Scheduler("now")
        for t, T, R in ((1, 1, 5), (3, 9, 50), (100, 200, 1)):
            assert s.expected_refinements(t, T, R) == R

    def test_uniform_single_step(self):
        assert Scheduler("uniform").expected_refinements(1, 1, 10) == 10

    def test_uniform_exact_harmonic_sum(self):
        got = Scheduler("uniform").expected_refinements(10, 100, 1)
        harmonic = sum(1.0 / s for s in range(10, 101))
        assert abs(got - harmonic) < 1e-12
        # the closed-form approximation log(T) - log(t) is within 3%
        assert abs(got - (np.log(100) - np.log(10))) / got < 0.03

    def test_age_proportional_exact_vs_approximation(self):
        got = Scheduler("agep").expected_refinements(50, 100, 1)
        # exact telescoping sum: 2 - 2t/(T+1)
        assert abs(got - (2 - 100 / 101)) < 1e-12
        assert abs(got - 1.0) / 1.0 < 0.15  # paper-style 2R(T-t)/T

    def test_exponential_early_timesteps_get_full_budget(self):
        s = Scheduler("exp", q=0.5)
        # the geometric mass over the future sums to R, inflated a little
        # by truncation in the first few horizons after arrival
        got = s.expected_refinements(5, 200, 10)
        assert 10.0 <= got <= 10.5


class TestSimulation:
    def test_simulated_mean_tracks_exact_sums(self):
        rng = rng_from_seed(3)
        T, R, reps = 60, 20, 80
        for s in all_schedulers():
            mean_r = simulate_refinement_counts(s, T, R, reps, rng)
            expected = np.array([s.expected_refinements(t, T, R) for t in range(1, T + 1)])
            # tolerance: 5% relative, floored at a 4-sigma sampling-noise
            # bound (hundreds of points are checked simultaneously)
            sigma = np.sqrt(np.maximum(expected, 1e-12) / reps)
            tol = np.maximum(0.05 * expected, 4.0 * sigma)
            assert np.all(np.abs(mean_r - expected) <= tol), s.variant

    def test_total_draws_conserved(self):
        rng = rng_from_seed(4)
        s = Scheduler("agep_exp")
        mean_r = simulate_refinement_counts(s, 30, 7, 50, rng)
        assert abs(mean_r.sum() - 30 * 7) < 1e-9
