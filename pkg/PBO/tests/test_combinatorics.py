"""
Unit tests for the R-function, its tabulation and derivatives, and the
inclusion probabilities.
"""

import itertools
import unittest
from unittest.mock import patch

import numpy as np
from hypothesis import given, settings, strategies as st

from PBO.core import combinatorics as cmb
from PBO.core.oracle import finite_difference_check, finite_difference_second
from PBO.exceptions import DomainException, OverflowException


def brute_force_r(k, w):
    if k < 0 or k > len(w):
        return 0.0
    return float(sum(np.prod([w[i] for i in subset]) for subset in itertools.combinations(range(len(w)), k)))


weight_lists = st.lists(st.floats(min_value=0.1, max_value=10.0), min_size=1, max_size=8)


class TestWeights(unittest.TestCase):

    def test_weights_of_free_entries(self):
        weights = cmb.weights_from_probs([0.5, 0.0, 0.75, 1.0])
        np.testing.assert_allclose(weights.w, [1.0, 3.0])
        np.testing.assert_array_equal(weights.indices, [0, 2])
        np.testing.assert_array_equal(weights.ones, [3])
        np.testing.assert_array_equal(weights.zeros, [1])
        self.assertEqual(weights.index_map, {0: 0, 1: 2})

    def test_near_degenerate_entries_are_snapped(self):
        weights = cmb.weights_from_probs([1e-14, 1.0 - 1e-14, 0.5])
        np.testing.assert_array_equal(weights.zeros, [0])
        np.testing.assert_array_equal(weights.ones, [1])
        self.assertEqual(len(weights), 1)

    def test_out_of_range_probabilities_rejected(self):
        with self.assertRaises(DomainException):
            cmb.weights_from_probs([0.5, 1.2])
        with self.assertRaises(DomainException):
            cmb.weights_from_probs([np.nan])

    def test_from_values_rejects_nonpositive(self):
        with self.assertRaises(DomainException):
            cmb.BernoulliWeights.from_values([1.0, 0.0])

    def test_weight_jacobian_matches_finite_differences(self):
        p = np.array([0.2, 0.5, 0.7])
        report = finite_difference_check(lambda x: cmb.weights_from_probs(x).w, p, cmb.weight_jacobian(p))
        self.assertTrue(report.passed, report.relative_errors)

    def test_log_space_switch(self):
        self.assertFalse(cmb.use_log_space(np.ones(10)))
        self.assertTrue(cmb.use_log_space(np.ones(65)))
        self.assertTrue(cmb.use_log_space(np.array([1e-5, 1e4])))


class TestRFunction(unittest.TestCase):

    def test_small_values(self):
        w = [1.0, 2.0, 3.0]
        self.assertEqual(cmb.r_value(0, w), 1.0)
        self.assertEqual(cmb.r_value(1, w), 6.0)
        self.assertEqual(cmb.r_value(2, w), 11.0)
        self.assertEqual(cmb.r_value(3, w), 6.0)
        self.assertEqual(cmb.r_value(4, w), 0.0)
        self.assertEqual(cmb.r_value(-1, w), 0.0)

    def test_empty_set(self):
        self.assertEqual(cmb.r_value(0, []), 1.0)
        self.assertEqual(cmb.r_value(1, []), 0.0)

    @settings(max_examples=60, deadline=None)
    @given(weight_lists, st.integers(min_value=0, max_value=8))
    def test_matches_subset_enumeration(self, w, k):
        expected = brute_force_r(k, w)
        self.assertAlmostEqual(cmb.r_value(k, w), expected, delta=1e-10 * max(1.0, expected))

    @settings(max_examples=60, deadline=None)
    @given(weight_lists, st.integers(min_value=0, max_value=8))
    def test_log_space_agrees_with_linear(self, w, k):
        linear = cmb.r_value(k, w, log_space=False)
        logged = cmb.r_value(k, w, log_space=True)
        self.assertAlmostEqual(logged, linear, delta=1e-10 * max(1.0, linear))

    def test_log_value(self):
        w = [1.0, 2.0, 3.0]
        self.assertAlmostEqual(cmb.log_r_value(2, w), np.log(11.0), places=12)
        self.assertEqual(cmb.log_r_value(4, w), -np.inf)

    def test_values_vector(self):
        np.testing.assert_allclose(cmb.r_values(3, [1.0, 2.0, 3.0]), [1.0, 6.0, 11.0, 6.0])

    def test_power_sum_agrees_for_small_sets(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = rng.uniform(0.5, 2.0, 6)
            for k in range(7):
                self.assertAlmostEqual(cmb.r_value_power_sum(k, w), cmb.r_value(k, w),
                                       delta=1e-8 * max(1.0, cmb.r_value(k, w)))

    def test_power_sum_overflow(self):
        with self.assertRaises(OverflowException):
            cmb.r_value_power_sum(3, [1e200, 1e200, 1e200])

    def test_large_set_stays_finite_in_log_space(self):
        w = np.full(500, 1.5)
        value = cmb.log_r_value(10, w)
        self.assertTrue(np.isfinite(value))
        self.assertGreater(value, 0.0)


class TestRTable(unittest.TestCase):

    def test_prefix_values(self):
        table = cmb.r_table(2, [1.0, 2.0, 3.0])
        self.assertEqual(table.value(0, 0), 1.0)
        self.assertEqual(table.value(1, 2), 3.0)
        self.assertEqual(table.value(2, 2), 2.0)
        self.assertEqual(table.value(2, 3), 11.0)
        self.assertEqual(table.value(3, 3), 0.0)

    def test_log_table(self):
        table = cmb.r_table(2, [1.0, 2.0, 3.0], log_space=True)
        self.assertTrue(table.log_space)
        self.assertAlmostEqual(table.value(2, 3), 11.0, places=10)

    def test_cotabulated_gradients(self):
        w = np.array([0.5, 1.5, 2.0, 3.0])
        table = cmb.r_table(3, w, with_gradients=True)
        np.testing.assert_allclose(table.gradient(3, 4), cmb.r_gradient(3, w), rtol=1e-12)

    def test_gradient_needs_cotabulation(self):
        with self.assertRaises(DomainException):
            cmb.r_table(2, [1.0, 2.0]).gradient(1, 1)


class TestRDerivatives(unittest.TestCase):

    def setUp(self):
        self.w = np.array([0.4, 1.0, 1.7, 2.5, 0.8, 3.0])

    def test_gradient_equals_leave_one_out(self):
        for k in range(1, 7):
            np.testing.assert_allclose(cmb.r_gradient(k, self.w), cmb.leave_one_out_r(k - 1, self.w), rtol=1e-12)

    def test_leave_one_out_matches_deletion(self):
        for k in range(0, 6):
            expected = [cmb.r_value(k, np.delete(self.w, i)) for i in range(self.w.size)]
            np.testing.assert_allclose(cmb.leave_one_out_r(k, self.w), expected, rtol=1e-12)

    def test_gradient_routes_agree(self):
        for k in range(1, 7):
            np.testing.assert_allclose(cmb.r_gradient_via_inclusion(k, self.w), cmb.r_gradient(k, self.w),
                                       rtol=1e-10)

    def test_gradient_matches_finite_differences(self):
        report = finite_difference_check(lambda x: cmb.r_value(3, x), self.w, cmb.r_gradient(3, self.w))
        self.assertTrue(report.passed, report.relative_errors)

    def test_log_gradient(self):
        np.testing.assert_allclose(cmb.r_log_gradient(3, self.w),
                                   cmb.r_gradient(3, self.w) / cmb.r_value(3, self.w), rtol=1e-10)
        np.testing.assert_array_equal(cmb.r_log_gradient(0, self.w), np.zeros(6))
        with self.assertRaises(DomainException):
            cmb.r_log_gradient(7, self.w)

    def test_inclusion_route_needs_positive_k(self):
        with self.assertRaises(DomainException):
            cmb.r_gradient_via_inclusion(0, self.w)

    def test_hessian_in_weight_space(self):
        H = cmb.r_hessian(3, self.w)
        np.testing.assert_array_equal(np.diag(H), np.zeros(6))
        self.assertAlmostEqual(H[0, 1], cmb.r_value(1, np.delete(self.w, [0, 1])), places=12)
        np.testing.assert_allclose(H, H.T)

    def test_hessian_in_probability_space(self):
        p = self.w / (1.0 + self.w)
        H = cmb.r_hessian(3, self.w, space="p")
        f = lambda x: cmb.r_value(3, x / (1.0 - x))
        for i, j in ((0, 0), (2, 2), (0, 3), (1, 4)):
            numerical = finite_difference_second(f, p, i, j)
            self.assertAlmostEqual(H[i, j], numerical, delta=1e-4 * max(1.0, abs(numerical)))

    def test_unknown_space(self):
        with self.assertRaises(DomainException):
            cmb.r_hessian(2, self.w, space="q")


class TestInclusionProbabilities(unittest.TestCase):

    def setUp(self):
        self.w = np.array([0.3, 1.2, 2.0, 0.7, 4.0, 1.0])

    def brute_force_inclusion(self, z):
        total = brute_force_r(z, self.w)
        pi = np.zeros(self.w.size)
        pij = np.zeros((self.w.size, self.w.size))
        for subset in itertools.combinations(range(self.w.size), z):
            mass = np.prod(self.w[list(subset)]) / total
            for i in subset:
                pi[i] += mass
                for j in subset:
                    if i != j:
                        pij[i, j] += mass
        return pi, pij

    def test_first_order_matches_enumeration(self):
        for z in range(1, 6):
            expected, _ = self.brute_force_inclusion(z)
            for method in ("leave_one_out", "gradient"):
                np.testing.assert_allclose(cmb.inclusion_first(z, self.w, method).first_order, expected,
                                           rtol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(weight_lists, st.data())
    def test_first_order_sums_to_budget(self, w, data):
        z = data.draw(st.integers(min_value=0, max_value=len(w)))
        inclusion = cmb.inclusion_first(z, w)
        self.assertAlmostEqual(inclusion.total, z, delta=1e-10 * max(1, z))
        self.assertTrue(np.all(inclusion.first_order >= -1e-12))
        self.assertTrue(np.all(inclusion.first_order <= 1.0 + 1e-12))

    def test_budget_outside_range(self):
        with self.assertRaises(DomainException):
            cmb.inclusion_first(7, self.w)
        with self.assertRaises(DomainException):
            cmb.inclusion_first(2, self.w, method="other")

    def test_second_order_matches_enumeration(self):
        for z in range(2, 6):
            _, expected = self.brute_force_inclusion(z)
            matrix = cmb.inclusion_second_matrix(z, self.w)
            np.testing.assert_allclose(matrix, expected, rtol=1e-10, atol=1e-14)
            self.assertAlmostEqual(cmb.inclusion_second(z, self.w, 1, 4), expected[1, 4], places=12)

    def test_second_order_row_sums(self):
        z = 3
        pi = cmb.inclusion_first(z, self.w).first_order
        matrix = cmb.inclusion_second_matrix(z, self.w)
        np.testing.assert_allclose(matrix.sum(axis=1), (z - 1) * pi, rtol=1e-10)

    def test_second_order_needs_distinct_indices(self):
        with self.assertRaises(DomainException):
            cmb.inclusion_second(2, self.w, 3, 3)

    def test_second_order_below_two_is_zero(self):
        self.assertEqual(cmb.inclusion_second(1, self.w, 0, 1), 0.0)
        np.testing.assert_array_equal(cmb.inclusion_second_matrix(1, self.w), np.zeros((6, 6)))

    def test_second_order_matrix_in_row_blocks(self):
        w = np.array([0.3, 1.2, 2.0, 0.7, 4.0, 1.0, 0.05])
        for z in (2, 4, 6):
            whole = cmb.inclusion_second_matrix(z, w)
            # at most one row of 7 x 7 weights per block
            with patch.object(cmb, "PAIR_BLOCK_ELEMENTS", 50):
                blocked = cmb.inclusion_second_matrix(z, w)
                blocked_log = cmb.inclusion_second_matrix(z, w, log_space=True)
                hessian = cmb.r_hessian(z, w)
            np.testing.assert_allclose(blocked, whole, rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(blocked_log, whole, rtol=1e-10, atol=1e-14)
            np.testing.assert_allclose(hessian, cmb.r_hessian(z, w), rtol=1e-12)
            for i, j in itertools.combinations(range(w.size), 2):
                self.assertAlmostEqual(blocked[i, j], cmb.inclusion_second(z, w, i, j), places=12)

    def test_first_order_derivatives(self):
        z = 3
        report = finite_difference_check(lambda x: cmb.inclusion_first(z, x).first_order, self.w,
                                         cmb.inclusion_derivatives(z, self.w, "first"))
        self.assertTrue(report.passed, report.relative_errors)

    def test_first_order_derivatives_in_probability_space(self):
        z = 2
        p = self.w / (1.0 + self.w)
        report = finite_difference_check(lambda x: cmb.inclusion_first(z, x / (1.0 - x)).first_order, p,
                                         cmb.inclusion_derivatives(z, self.w, "first", space="p"))
        self.assertTrue(report.passed, report.relative_errors)

    def test_second_order_derivatives(self):
        z = 3
        derivatives = cmb.inclusion_derivatives(z, self.w, "second")
        h = 1e-6
        for i, j in ((0, 1), (2, 4), (5, 3)):
            up, down = self.w.copy(), self.w.copy()
            up[i] += h
            down[i] -= h
            numerical = (cmb.inclusion_second(z, up, i, j) - cmb.inclusion_second(z, down, i, j)) / (2 * h)
            self.assertAlmostEqual(derivatives.wrt_first[i, j], numerical, delta=1e-6)
            up, down = self.w.copy(), self.w.copy()
            up[j] += h
            down[j] -= h
            numerical = (cmb.inclusion_second(z, up, i, j) - cmb.inclusion_second(z, down, i, j)) / (2 * h)
            self.assertAlmostEqual(derivatives.wrt_second[i, j], numerical, delta=1e-6)
            mixed = finite_difference_second(lambda x: cmb.inclusion_second(z, x, i, j), self.w, i, j)
            self.assertAlmostEqual(derivatives.mixed[i, j], mixed, delta=1e-5)

    def test_unknown_order(self):
        with self.assertRaises(DomainException):
            cmb.inclusion_derivatives(2, self.w, order="third")


if __name__ == '__main__':
    unittest.main()
