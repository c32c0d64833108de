"""Selection kernels: weights, sampling frequencies, weighted mean."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from kga.selection import (
    Boltzmann,
    CBOAsymmetric,
    Rank,
    RouletteWheel,
    boltzmann_weights,
    kernel_from_config,
    sample_parent_pairs,
    selection_weights,
    weighted_mean,
)

ALL_KERNELS = [
    RouletteWheel(),
    RouletteWheel(fitness="exp", alpha=2.0),
    Boltzmann(alpha=3.0),
    Rank(),
    CBOAsymmetric(alpha=3.0),
]

finite_values = hnp.arrays(
    np.float64,
    st.integers(1, 30),
    elements=st.floats(-1e6, 1e6, allow_nan=False),
)


class TestSelectionWeights:
    def test_boltzmann_equal_values_uniform(self):
        w = selection_weights(Boltzmann(alpha=7.0), np.array([1.0, 1.0, 1.0]))
        np.testing.assert_allclose(w.first, 1 / 3, atol=1e-15)

    def test_boltzmann_small_alpha_uniform(self):
        w = selection_weights(Boltzmann(alpha=1e-300), np.array([3.0, 1.0, 2.0, 5.0]))
        np.testing.assert_allclose(w.first, 0.25, atol=1e-12)

    def test_rank_hand_case(self):
        w = selection_weights(Rank(), np.array([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(w.first, [1 / 6, 1 / 2, 1 / 3], atol=1e-15)

    def test_rank_with_tie(self):
        w = selection_weights(Rank(), np.array([1.0, 1.0, 2.0]))
        np.testing.assert_allclose(w.first, [3 / 7, 3 / 7, 1 / 7], atol=1e-15)

    def test_cbo_first_marginal_uniform(self):
        w = selection_weights(CBOAsymmetric(alpha=5.0), np.array([4.0, 0.0, 1.0]))
        np.testing.assert_allclose(w.first, 1 / 3, atol=1e-15)
        assert w.second[1] > w.second[2] > w.second[0]

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            selection_weights(Rank(), np.array([1.0, np.nan]))

    @pytest.mark.parametrize("kernel", ALL_KERNELS)
    @given(values=finite_values)
    @settings(max_examples=50, deadline=None)
    def test_weights_sum_to_one(self, kernel, values):
        w = selection_weights(kernel, values)
        assert abs(w.first.sum() - 1.0) < 1e-12
        assert abs(w.second.sum() - 1.0) < 1e-12
        assert np.all(w.first >= 0) and np.all(w.second >= 0)

    @pytest.mark.parametrize("kernel", ALL_KERNELS)
    def test_permutation_equivariance(self, kernel):
        rng = np.random.default_rng(0)
        values = rng.normal(size=20)
        perm = rng.permutation(20)
        w = selection_weights(kernel, values)
        wp = selection_weights(kernel, values[perm])
        # normalizer summation order differs, so equality is to 1e-12
        np.testing.assert_allclose(w.first[perm], wp.first, rtol=1e-12, atol=0)
        np.testing.assert_allclose(w.second[perm], wp.second, rtol=1e-12, atol=0)

    def test_boltzmann_monotonicity(self):
        rng = np.random.default_rng(1)
        for alpha in (0.1, 1.0, 100.0):
            values = rng.normal(size=30)
            w = boltzmann_weights(values, alpha)
            order = np.argsort(values)
            assert np.all(np.diff(w[order]) < 0)

    def test_boltzmann_argmax_is_argmin_values(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            values = rng.integers(0, 5, size=12).astype(float)
            for alpha in (0.5, 10.0, 1e6):
                w = boltzmann_weights(values, alpha)
                assert np.argmax(w) == np.argmin(values)

    def test_rank_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            values = rng.normal(size=15)
            w = selection_weights(Rank(), values).first
            wt = selection_weights(Rank(), np.exp(2.0 * values) + 1.0).first
            assert np.array_equal(w, wt)


class TestSampleParentPairs:
    def test_concentrated_weights_all_pairs_at_min(self):
        values = np.array([5.0, 3.0, -4.0, 9.0])
        w = selection_weights(Boltzmann(alpha=1e9), values)
        pairs = sample_parent_pairs(w, 500, np.random.default_rng(0))
        assert np.all(pairs == 2)

    def test_empirical_marginal_within_3_sigma(self):
        # Multinomial confidence-interval oracle on a fixed weight vector.
        from kga.selection import ParentWeights

        p = np.array([0.2, 0.3, 0.5])
        w = ParentWeights(first=p, second=p)
        n = 100_000
        pairs = sample_parent_pairs(w, n, np.random.default_rng(42))
        for slot in range(2):
            counts = np.bincount(pairs[:, slot], minlength=3)
            se = np.sqrt(n * p * (1 - p))
            assert np.all(np.abs(counts - n * p) <= 3 * se)

    def test_cbo_first_marginal_uniform_empirically(self):
        values = np.array([4.0, 0.0, 1.0, 2.0])
        w = selection_weights(CBOAsymmetric(alpha=2.0), values)
        n = 100_000
        pairs = sample_parent_pairs(w, n, np.random.default_rng(7))
        counts = np.bincount(pairs[:, 0], minlength=4)
        se = np.sqrt(n * 0.25 * 0.75)
        assert np.all(np.abs(counts - n * 0.25) <= 3 * se)

    def test_count_must_be_positive(self):
        w = selection_weights(Rank(), np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            sample_parent_pairs(w, 0, np.random.default_rng(0))


class TestWeightedMean:
    def test_small_alpha_is_arithmetic_mean(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(50, 3))
        values = rng.normal(size=50)
        np.testing.assert_allclose(
            weighted_mean(x, values, 1e-300), x.mean(axis=0), atol=1e-12
        )

    def test_large_alpha_concentrates_on_best(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(20, 2))
        values = np.arange(20.0)  # unique minimum gap 1 at index 0
        np.testing.assert_allclose(
            weighted_mean(x, values, 1e4), x[0], atol=1e-12
        )

    def test_translation_invariance_bitwise(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(10, 2))
        values = np.arange(10.0)  # exactly representable after +1e6
        a = weighted_mean(x, values, 3.0)
        b = weighted_mean(x, values + 1e6, 3.0)
        assert np.array_equal(a, b)

    def test_finite_for_huge_alpha(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(100, 4))
        values = rng.uniform(0, 1e3, size=100)
        assert np.all(np.isfinite(weighted_mean(x, values, 1e6)))

    def test_in_convex_hull_componentwise(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            x = rng.normal(size=(30, 3))
            values = rng.normal(size=30)
            m = weighted_mean(x, values, 2.0)
            assert np.all(m >= x.min(axis=0) - 1e-12)
            assert np.all(m <= x.max(axis=0) + 1e-12)


class TestKernelConfig:
    def test_names_round_trip(self):
        assert kernel_from_config("boltzmann", 2.0) == Boltzmann(2.0)
        assert kernel_from_config("rank") == Rank()
        assert kernel_from_config("cbo", 1.5) == CBOAsymmetric(1.5)
        assert isinstance(kernel_from_config("roulette"), RouletteWheel)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            Boltzmann(alpha=0.0)
        with pytest.raises(ValueError):
            kernel_from_config("boltzmann")
        with pytest.raises(ValueError):
            kernel_from_config("tournament")
