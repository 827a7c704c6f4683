"""Tests for the exact transport solvers and their oracles."""

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from wassdyn.errors import DimensionMismatchError, MeasureValidationError, SupportTooLargeError
from wassdyn.measure import dirac, measure_from_arrays, mix, moment_p, new_measure
from wassdyn.transport import (
    EXACT_LIMIT,
    brute_force_wasserstein,
    cost_matrix,
    kr_dual,
    plan_1d,
    wasserstein,
    wasserstein_1d,
    wasserstein_exact,
)


class TestExact:
    def test_identity_is_zero_with_diagonal_plan(self, random_measure):
        mu = random_measure(6, 2)
        value, plan = wasserstein_exact(mu, mu, 2.0)
        assert value == pytest.approx(0.0, abs=1e-12)
        off_diagonal = plan.gamma - np.diag(np.diag(plan.gamma))
        assert np.abs(off_diagonal).max() <= 1e-12

    def test_two_point_to_dirac(self):
        value, _ = wasserstein_exact(new_measure([(0, 0.5), (1, 0.5)]), dirac(0.5), 1.0)
        assert value == pytest.approx(0.5)

    @pytest.mark.parametrize("p", [1.0, 2.0, 2.5])
    def test_matches_brute_force(self, random_measure, p):
        for _ in range(20):
            mu = random_measure(6, 2, uniform=True)
            nu = random_measure(6, 2, uniform=True)
            exact, _ = wasserstein_exact(mu, nu, p)
            assert exact == pytest.approx(brute_force_wasserstein(mu, nu, p), abs=1e-9)

    def test_plan_is_feasible(self, random_measure):
        for m, n in [(1, 7), (5, 5), (9, 3)]:
            mu, nu = random_measure(m, 3), random_measure(n, 3)
            _, plan = wasserstein_exact(mu, nu, 1.0)
            assert plan.shape == (mu.size, nu.size)
            assert plan.gamma.min() >= -1e-15
            assert plan.marginal_error() <= 1e-9

    def test_deterministic(self, random_measure):
        mu, nu = random_measure(10, 2), random_measure(10, 2)
        a, plan_a = wasserstein_exact(mu, nu, 1.0)
        b, plan_b = wasserstein_exact(mu, nu, 1.0)
        assert a == b
        assert np.array_equal(plan_a.gamma, plan_b.gamma)

    def test_degenerate_equal_weights(self):
        # Northwest corner on equal uniform marginals produces a degenerate basis.
        xs = np.arange(8.0).reshape(-1, 1)
        mu = measure_from_arrays(xs, np.full(8, 0.125))
        nu = measure_from_arrays(xs[::-1] + 0.5, np.full(8, 0.125))
        exact, _ = wasserstein_exact(mu, nu, 2.0)
        assert exact == pytest.approx(0.5)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_degenerate_assignment(self, rng, p):
        # equal weights make every basis degenerate; the optimum is an assignment
        x = rng.uniform(-2.0, 2.0, size=(12, 2))
        y = rng.uniform(-2.0, 2.0, size=(12, 2))
        w = np.full(12, 1.0 / 12)
        c = cost_matrix(x, y, p)
        rows, cols = linear_sum_assignment(c)
        expected = (c[rows, cols].sum() / 12) ** (1.0 / p)
        value, _ = wasserstein_exact(measure_from_arrays(x, w), measure_from_arrays(y, w), p)
        assert value == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_dirac_reduction(self, random_measure, p):
        mu = random_measure(9, 2)
        value, _ = wasserstein_exact(mu, dirac([1.0, 1.0]), p)
        assert value**p == pytest.approx(moment_p(mu, [1.0, 1.0], p), abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            wasserstein_exact(dirac(0.0), dirac([0.0, 0.0]), 1.0)

    def test_size_limit(self):
        n = int(np.sqrt(EXACT_LIMIT)) + 1
        big = measure_from_arrays(np.arange(n, dtype=float), np.ones(n))
        with pytest.raises(SupportTooLargeError):
            wasserstein_exact(big, big, 1.0)


class TestOneDimensional:
    def test_diracs(self):
        assert wasserstein_1d(dirac(0.0), dirac(3.0), 2.0) == pytest.approx(3.0)

    def test_shifted_pair(self):
        mu = new_measure([(0, 0.5), (1, 0.5)])
        nu = new_measure([(1, 0.5), (2, 0.5)])
        assert wasserstein_1d(mu, nu, 1.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
    def test_agrees_with_simplex(self, random_measure, rng, p):
        for _ in range(40):
            mu = random_measure(int(rng.integers(1, 10)), 1)
            nu = random_measure(int(rng.integers(1, 10)), 1)
            exact, _ = wasserstein_exact(mu, nu, p)
            assert wasserstein_1d(mu, nu, p) == pytest.approx(exact, abs=1e-8)

    def test_monotone_plan(self, random_measure):
        mu, nu = random_measure(7, 1), random_measure(5, 1)
        plan = plan_1d(mu, nu, 2.0)
        assert plan.marginal_error() <= 1e-12
        assert plan.cost ** 0.5 == pytest.approx(wasserstein_1d(mu, nu, 2.0))

    def test_rejects_higher_dimension(self):
        with pytest.raises(MeasureValidationError):
            wasserstein_1d(dirac([0.0, 0.0]), dirac([1.0, 0.0]), 1.0)


class TestDual:
    def test_identity(self, random_measure):
        mu = random_measure(5, 2)
        value, pot = kr_dual(mu, mu)
        assert value == pytest.approx(0.0, abs=1e-12)
        assert pot.max_violation(mu, mu) <= 1e-9

    def test_two_diracs(self):
        value, pot = kr_dual(dirac(0.0), dirac(1.0))
        assert value == pytest.approx(1.0)
        assert pot.max_violation(dirac(0.0), dirac(1.0)) <= 1e-12

    def test_strong_duality(self, random_measure):
        for _ in range(30):
            mu, nu = random_measure(8, 2), random_measure(8, 2)
            value, pot = kr_dual(mu, nu)
            exact, _ = wasserstein_exact(mu, nu, 1.0)
            assert value == pytest.approx(exact, abs=1e-6)
            assert pot.max_violation(mu, nu) <= 1e-9
            # Centred potentials: both weighted sums carry half the value.
            assert float(mu.weights @ pot.phi) == pytest.approx(-float(nu.weights @ pot.psi), abs=1e-9)


class TestBruteForce:
    def test_identical(self):
        mu = new_measure([(0, 1), (1, 1), (5, 1)])
        assert brute_force_wasserstein(mu, mu, 1.0) == pytest.approx(0.0)

    def test_shift(self):
        mu = new_measure([(0, 1), (1, 1)])
        nu = new_measure([(1, 1), (2, 1)])
        assert brute_force_wasserstein(mu, nu, 1.0) == pytest.approx(1.0)

    def test_rejects_non_uniform(self):
        with pytest.raises(MeasureValidationError):
            brute_force_wasserstein(new_measure([(0, 1), (1, 3)]), new_measure([(0, 1), (1, 1)]), 1.0)

    def test_rejects_oversized(self):
        mu = new_measure([(float(i), 1.0) for i in range(8)])
        with pytest.raises(SupportTooLargeError):
            brute_force_wasserstein(mu, mu, 1.0)


class TestProperties:
    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_metric_axioms(self, random_measure, p):
        for _ in range(20):
            a, b, c = (random_measure(8, 2) for _ in range(3))
            ab = wasserstein(a, b, p)
            assert ab == pytest.approx(wasserstein(b, a, p), abs=1e-9)
            assert wasserstein(a, c, p) <= ab + wasserstein(b, c, p) + 1e-9
            assert wasserstein(a, a, p) <= 1e-9

    def test_monotone_in_p(self, random_measure):
        for _ in range(20):
            mu, nu = random_measure(6, 2), random_measure(7, 2)
            w1 = wasserstein(mu, nu, 1.0)
            assert w1 <= wasserstein(mu, nu, 2.0) + 1e-9
            assert w1 <= wasserstein(mu, nu, 3.5) + 1e-9

    def test_segment_identity(self, random_measure, rng):
        for _ in range(20):
            mu0, mu1 = random_measure(6, 2), random_measure(6, 2)
            t = float(rng.random())
            lhs = wasserstein(mix(mu1, mu0, t), mu0, 1.0)
            assert lhs == pytest.approx(t * wasserstein(mu1, mu0, 1.0), abs=1e-8)

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_convex_interpolation(self, random_measure, rng, p):
        for _ in range(20):
            mu0, mu1, nu0, nu1 = (random_measure(5, 2) for _ in range(4))
            t = float(rng.random())
            lhs = wasserstein(mix(mu1, mu0, t), mix(nu1, nu0, t), p) ** p
            rhs = t * wasserstein(mu1, nu1, p) ** p + (1 - t) * wasserstein(mu0, nu0, p) ** p
            assert lhs <= rhs + 1e-9


class TestDispatcher:
    def test_auto_uses_quantiles_on_the_line(self, random_measure):
        mu, nu = random_measure(5, 1), random_measure(5, 1)
        assert wasserstein(mu, nu, 2.0) == wasserstein_1d(mu, nu, 2.0)

    def test_dual_method_only_for_p1(self):
        with pytest.raises(MeasureValidationError):
            wasserstein(dirac(0.0), dirac(1.0), 2.0, method="dual")

    def test_cost_matrix(self):
        c = cost_matrix(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0], [0.0, 1.0]]), 2.0)
        np.testing.assert_allclose(c, [[25.0, 1.0]])
