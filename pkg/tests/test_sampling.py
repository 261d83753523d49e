from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfti.coherence import local_coherence_exact
from cfti.sampling import (
    EffectiveSet,
    Pmf,
    SamplingPlan,
    build_pmf_ci,
    build_pmf_optimal,
    build_pmf_si,
    dedup,
    derive_seed,
    draw_plan,
    expected_effective,
    power_masses,
    si_index,
    si_split,
)
from cfti.transforms import CenteredDFT, Haar1D, dc_index

alphas = st.floats(0, 8, allow_nan=False)
sizes = st.sampled_from([2, 4, 8, 16, 64, 256])


class TestPmfConstruction:
    def test_small_ci_masses_exact(self):
        masses = power_masses(8, 1.0)
        exact = [Fraction(1, 3), Fraction(1, 2), 1, 1, 1, Fraction(1, 2), Fraction(1, 3),
                 Fraction(1, 4)]
        np.testing.assert_allclose(masses, [float(f) for f in exact], atol=1e-15)
        assert sum(exact) == Fraction(59, 12)
        assert build_pmf_ci(8, 1.0).norm_inverse == pytest.approx(59 / 12, abs=1e-14)

    def test_uniform(self):
        pmf = build_pmf_ci(16, 0.0)
        np.testing.assert_allclose(pmf.probs, 1 / 16)
        assert pmf.family == "uniform"

    def test_normaliser_bracket_at_512(self):
        c_inv = build_pmf_ci(512, 1.0).norm_inverse
        assert 2 * np.log(256) < c_inv < 4 + 2 * np.log(256)

    def test_si_values(self):
        pmf = build_pmf_si(8, 4, 1.0)
        c = 12 / 59
        for j in range(4):
            assert pmf.probs[si_index(j, dc_index(8), 8)] == pytest.approx(c / 4, abs=1e-14)
        np.testing.assert_allclose(pmf.pixel_marginal(), 0.25, atol=1e-15)
        np.testing.assert_allclose(pmf.opd_marginal(), build_pmf_ci(8, 1.0).probs, atol=1e-15)

    def test_si_uniform(self):
        np.testing.assert_allclose(build_pmf_si(8, 4, 0.0).probs, 1 / 32)

    def test_optimal_from_identity_pair_is_uniform(self):
        np.testing.assert_allclose(build_pmf_optimal(np.ones(16)).probs, 1 / 16)

    def test_optimal_peaks_at_dc(self):
        mu = local_coherence_exact(CenteredDFT(64), Haar1D(64))
        pmf = build_pmf_optimal(mu)
        assert pmf.probs.argmax() == dc_index(64)
        np.testing.assert_allclose(pmf.probs, mu ** 2 / np.sum(mu ** 2))

    def test_optimal_si(self):
        pmf = build_pmf_optimal(np.tile(np.arange(1.0, 9.0), 4), n_p=4)
        assert pmf.scheme == "SI" and pmf.n_xi == 8

    @pytest.mark.parametrize("bad", [lambda: build_pmf_ci(12, 1), lambda: build_pmf_ci(8, -1),
                                     lambda: build_pmf_si(8, 3), lambda: build_pmf_optimal(
                                         np.zeros(8)),
                                     lambda: Pmf(np.array([0.5, 0.6]), "power", "CI", 2),
                                     lambda: Pmf(np.array([0.5, 0.5]), "other", "CI", 2)])
    def test_invalid_inputs(self, bad):
        with pytest.raises(ValueError):
            bad()

    @given(sizes, alphas)
    def test_normalisation_property(self, n, alpha):
        pmf = build_pmf_ci(n, alpha)
        assert abs(pmf.probs.sum() - 1) <= 1e-12
        assert np.all(pmf.probs > 0)
        assert pmf.probs[dc_index(n)] == pmf.probs.max()

    @given(sizes, st.sampled_from([1, 4, 16]), alphas)
    def test_si_pixel_marginal_property(self, n, n_p, alpha):
        pmf = build_pmf_si(n, n_p, alpha)
        assert abs(pmf.probs.sum() - 1) <= 1e-12
        np.testing.assert_allclose(pmf.pixel_marginal(), 1 / n_p, rtol=1e-12)


class TestDrawing:
    def test_frequencies_within_binomial_band(self):
        pmf = build_pmf_ci(4, 0.0)
        m = 10 ** 6
        counts = np.bincount(draw_plan(pmf, m, 1).draws, minlength=4)
        band = 3 * np.sqrt(m * 0.25 * 0.75)
        assert np.all(np.abs(counts - m / 4) <= band)

    def test_determinism(self):
        pmf = build_pmf_ci(64, 1.0)
        a, b = draw_plan(pmf, 100, 99), draw_plan(pmf, 100, 99)
        assert a.draws.tobytes() == b.draws.tobytes()
        assert a.seed == 99
        assert not np.array_equal(a.draws, draw_plan(pmf, 100, 100).draws)

    def test_fresh_seed_is_recorded(self):
        plan = draw_plan(build_pmf_ci(8, 1.0), 5)
        again = draw_plan(plan.pmf, 5, plan.seed)
        np.testing.assert_array_equal(plan.draws, again.draws)

    def test_uniform_weights(self):
        plan = draw_plan(build_pmf_ci(16, 0.0), 50, 3)
        np.testing.assert_allclose(plan.weights, 4.0)

    def test_weights_follow_probabilities(self):
        plan = draw_plan(build_pmf_ci(32, 2.0), 50, 3)
        np.testing.assert_allclose(plan.weights, plan.pmf.probs[plan.draws] ** -0.5)

    @pytest.mark.parametrize("m", [0, -1, 2.5, True])
    def test_bad_m(self, m):
        with pytest.raises(ValueError):
            draw_plan(build_pmf_ci(8, 1.0), m, 0)

    def test_multiplicity_mean_is_m_times_p(self):
        pmf = build_pmf_ci(16, 1.0)
        m, trials = 32, 4000
        counts = np.zeros(16)
        for t in range(trials):
            counts += np.bincount(draw_plan(pmf, m, derive_seed(5, t)).draws, minlength=16)
        mean = counts / trials
        sd = np.sqrt(m * pmf.probs * (1 - pmf.probs) / trials)
        assert np.all(np.abs(mean - m * pmf.probs) <= 4 * sd)

    def test_plan_validation(self):
        pmf = build_pmf_ci(8, 1.0)
        with pytest.raises(ValueError):
            SamplingPlan(pmf, np.array([8]))
        with pytest.raises(ValueError):
            SamplingPlan(pmf, np.array([], dtype=int))
        zero = Pmf(np.array([0.0, 1.0]), "optimal", "CI", 2)
        with pytest.raises(ValueError):
            SamplingPlan(zero, np.array([0]))

    def test_ci_expansion_and_pixel_counts(self):
        plan = SamplingPlan(build_pmf_ci(8, 1.0), np.array([1, 3]))
        np.testing.assert_array_equal(plan.expand_ci(3), [1, 3, 9, 11, 17, 19])
        si = SamplingPlan(build_pmf_si(8, 4, 1.0), np.array([0, 9, 10, 31]))
        np.testing.assert_array_equal(si.pixel_counts(), [1, 2, 0, 1])
        with pytest.raises(ValueError):
            plan.pixel_counts()
        with pytest.raises(ValueError):
            si.expand_ci(2)


class TestIndexing:
    @given(st.integers(0, 63), st.integers(0, 255))
    def test_round_trip(self, pixel, row):
        p, r = si_split(si_index(pixel, row, 256), 256)
        assert (p, r) == (pixel, row)

    def test_derive_seed(self):
        assert derive_seed(1, 2) == derive_seed(1, 2)
        assert derive_seed(1, 2) != derive_seed(1, 3)
        assert 0 <= derive_seed(7, 0) < 2 ** 63


class TestDedup:
    def test_simple_case(self):
        eff = dedup(np.array([3, 3, 5]))
        np.testing.assert_array_equal(eff.indices, [3, 5])
        np.testing.assert_array_equal(eff.multiplicities, [2, 1])
        assert eff.m_eff == 2

    def test_distinct(self):
        assert dedup(np.array([4, 1, 2])).m_eff == 3

    @given(st.lists(st.integers(0, 31), min_size=1, max_size=80))
    def test_invariants(self, draws):
        plan = SamplingPlan(build_pmf_ci(32, 1.0), np.array(draws))
        eff = dedup(plan)
        assert isinstance(eff, EffectiveSet)
        assert eff.multiplicities.sum() == plan.m
        assert eff.m_eff <= min(plan.m, 32)
        assert np.all(np.diff(eff.indices) > 0)

    def test_expected_effective_closed_form(self):
        assert expected_effective(np.full(4, 0.25), 4) == pytest.approx(175 / 64, abs=1e-14)
        assert expected_effective(build_pmf_ci(64, 1.0), 1) == pytest.approx(1.0, abs=1e-14)
        assert expected_effective(build_pmf_ci(16, 1.0), 10 ** 6) == pytest.approx(16, abs=1e-3)
        with pytest.raises(ValueError):
            expected_effective(np.full(4, 0.25), 0)

    def test_expected_effective_monte_carlo(self):
        pmf = build_pmf_ci(64, 1.0)
        sims = [dedup(draw_plan(pmf, 64, derive_seed(11, t))).m_eff for t in range(10 ** 4)]
        assert np.mean(sims) == pytest.approx(expected_effective(pmf, 64), rel=0.01)
