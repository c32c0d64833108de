"""Benchmark definitions, batch evaluation, and the assumption validator."""

import numpy as np
import pytest

from kga.objectives import (
    OBJECTIVE_NAMES,
    STYBLINSKI_TANG_MINIMIZER,
    ObjectiveSpec,
    batch_evaluate,
    evaluate,
    get_objective,
    verify_growth_assumptions,
)

INIT_BOX = (-2.0, 2.0)


class TestEvaluate:
    def test_ackley_minimum_1d(self):
        obj = get_objective("ackley", 1)
        assert evaluate(obj, np.zeros(1)) == pytest.approx(0.0, abs=1e-12)

    def test_rastrigin_minimum_10d(self):
        obj = get_objective("rastrigin", 10)
        assert evaluate(obj, np.zeros(10)) == pytest.approx(0.0, abs=1e-12)

    def test_styblinski_tang_minimum_2d(self):
        # Frozen per-coordinate minimizer verified against an independent
        # grid-search + bisection oracle in test_styblinski_oracle below.
        obj = get_objective("styblinski-tang", 2)
        s = STYBLINSKI_TANG_MINIMIZER
        assert evaluate(obj, np.array([s, s])) == pytest.approx(
            obj.min_value, abs=1e-10
        )

    def test_styblinski_oracle(self):
        # 1-D grid search followed by bisection on the stationarity
        # condition 4s^3 - 32s + 5 = 0, independent of the frozen constant.
        grid = np.linspace(-5.0, 5.0, 20001)
        f = 0.5 * (grid**4 - 16 * grid**2 + 5 * grid)
        s0 = grid[np.argmin(f)]
        lo, hi = s0 - 1e-3, s0 + 1e-3
        deriv = lambda s: 4 * s**3 - 32 * s + 5
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if deriv(lo) * deriv(mid) <= 0:
                hi = mid
            else:
                lo = mid
        assert abs(0.5 * (lo + hi) - STYBLINSKI_TANG_MINIMIZER) < 1e-10

    def test_dimension_mismatch_rejected(self):
        obj = get_objective("ackley", 3)
        with pytest.raises(ValueError):
            evaluate(obj, np.zeros(2))

    def test_all_minima_consistent(self):
        for name in OBJECTIVE_NAMES:
            obj = get_objective(name, 4)
            assert abs(evaluate(obj, obj.minimizer) - obj.min_value) < 1e-10

    def test_finite_on_random_inputs(self):
        rng = np.random.default_rng(0)
        for name in OBJECTIVE_NAMES:
            obj = get_objective(name, 5)
            x = rng.uniform(-50, 50, size=(100, 5))
            assert np.all(np.isfinite(batch_evaluate(obj, x)))

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            get_objective("sphere-of-doom", 2)


class TestBatchEvaluate:
    def test_single_row_at_minimizer(self):
        obj = get_objective("rastrigin", 3)
        out = batch_evaluate(obj, obj.minimizer[None, :])
        assert out.shape == (1,)
        assert out[0] == pytest.approx(obj.min_value, abs=1e-12)

    def test_identical_rows_identical_values(self):
        obj = get_objective("ackley", 4)
        row = np.full((2, 4), 0.73)
        out = batch_evaluate(obj, row)
        assert out[0] == out[1]

    def test_agrees_with_looped_evaluate(self):
        rng = np.random.default_rng(11)
        for name in OBJECTIVE_NAMES:
            obj = get_objective(name, 6)
            x = rng.uniform(-3, 3, size=(10, 6))
            batched = batch_evaluate(obj, x)
            looped = np.array([evaluate(obj, row) for row in x])
            assert np.array_equal(batched, looped)

    def test_dimension_mismatch(self):
        obj = get_objective("ackley", 2)
        with pytest.raises(ValueError):
            batch_evaluate(obj, np.zeros((5, 3)))


class TestInvariantsShiftAndSymmetry:
    def test_shift_check_over_init_box(self):
        rng = np.random.default_rng(5)
        for name in OBJECTIVE_NAMES:
            obj = get_objective(name, 3)
            x = rng.uniform(*INIT_BOX, size=(100_000, 3))
            assert np.all(batch_evaluate(obj, x) - obj.min_value >= 0)

    @pytest.mark.parametrize("name", ["ackley", "rastrigin"])
    def test_symmetric_benchmarks(self, name):
        rng = np.random.default_rng(6)
        obj = get_objective(name, 4)
        x = rng.uniform(-5, 5, size=(200, 4))
        np.testing.assert_allclose(
            batch_evaluate(obj, x), batch_evaluate(obj, -x), atol=1e-12
        )


class TestGrowthAssumptions:
    def test_quadratic_inverse_equality_case(self):
        obj = get_objective("quadratic", 1)
        report = verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 5000, 1)
        assert report.inverse_ok
        assert report.p == pytest.approx(2.0, abs=1e-6)
        assert report.c_p == pytest.approx(1.0, rel=1e-6)

    def test_constant_objective_fails_inverse(self):
        obj = ObjectiveSpec(
            name="flat",
            dim=1,
            minimizer=np.zeros(1),
            min_value=0.0,
            eval=lambda x: np.zeros(x.shape[0]),
        )
        report = verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 1000, 2)
        assert not report.inverse_ok

    def test_ackley_all_flags(self):
        # Dense-sample oracle on [-2, 2]: every inequality of the report
        # is re-checked directly on the sampled points.
        obj = get_objective("ackley", 1)
        report = verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 10_000, 3)
        assert report.lipschitz_ok and report.upper_ok
        assert report.lower_ok and report.inverse_ok
        grid = np.linspace(-2, 2, 4001)[:, None]
        f = batch_evaluate(obj, grid) - obj.min_value
        r = np.abs(grid.ravel())
        assert np.all(f <= 1.005 * report.c_u * (1 + r**2) + 1e-9)
        far = r > report.r_l
        assert np.all(f[far] >= 0.995 * report.c_l * r[far] ** 2 - 1e-9)
        near = (r > 1e-9) & (r <= report.r_p)
        assert np.all(0.995 * report.c_p * r[near] ** report.p <= f[near] + 1e-9)

    def test_positive_constants_when_flagged(self):
        obj = get_objective("rastrigin", 2)
        report = verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 4000, 4)
        if report.lipschitz_ok:
            assert report.lipschitz_const > 0
        if report.upper_ok:
            assert report.c_u > 0
        if report.lower_ok:
            assert report.c_l > 0 and report.r_l > 0
        if report.inverse_ok:
            assert report.c_p > 0 and report.p > 0 and report.e_inf > 0

    def test_deterministic_given_seed(self):
        obj = get_objective("ackley", 2)
        a = verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 2000, 9)
        b = verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 2000, 9)
        assert a == b

    def test_too_few_samples_rejected(self):
        obj = get_objective("ackley", 1)
        with pytest.raises(ValueError):
            verify_growth_assumptions(obj, np.array([-2.0, 2.0]), 1, 0)
