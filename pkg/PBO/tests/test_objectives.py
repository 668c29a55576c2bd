"""
Unit tests for the in-process objectives and the objective factory.
"""

import os
import tempfile
import unittest
from concurrent.futures import ThreadPoolExecutor
from unittest.mock import MagicMock

import numpy as np

from PBO.exceptions import ConfigException, DomainException, NonFiniteValueException
from PBO.objectives import create_objective
from PBO.objectives.base_objective import BaseObjective, ConstantObjective, FunctionObjective
from PBO.objectives.bilinear import BilinearObjective, bilinear_eval, bilinear_signs
from PBO.objectives.external_bridge import ExternalObjective
from PBO.objectives.trace_fim import (
    TraceFIMObjective,
    TraceFIMProblem,
    load_forward_matrix,
    synthetic_forward_matrix,
    trace_fim_eval
)


class TestBilinearObjective(unittest.TestCase):

    def test_signs_alternate_from_minus(self):
        np.testing.assert_array_equal(bilinear_signs(5), [-1, 1, -1, 1, -1])

    def test_values(self):
        self.assertEqual(bilinear_eval([0, 1, 0, 1]), 2.0)
        self.assertEqual(bilinear_eval([1, 0, 1, 0]), -2.0)
        self.assertEqual(bilinear_eval([1, 1, 0, 0]), 0.0)

    def test_known_optimum_and_batch(self):
        objective = BilinearObjective(20)
        self.assertEqual(objective.known_optimum, 10.0)
        optimum = np.tile([0, 1], 10)
        self.assertEqual(objective.evaluate(optimum), 10.0)
        designs = np.array([optimum, 1 - optimum])
        np.testing.assert_array_equal(objective.evaluate_batch(designs), [10.0, -10.0])
        self.assertEqual(objective.evaluations, 3)


class TestBaseObjective(unittest.TestCase):

    def test_rejects_invalid_designs(self):
        objective = ConstantObjective(3, 1.0)
        with self.assertRaises(DomainException):
            objective.evaluate([1, 0])
        with self.assertRaises(DomainException):
            objective.evaluate([1, 2, 0])

    def test_non_finite_values(self):
        objective = FunctionObjective(lambda d: float("inf") if d[0] else 1.0, 2)
        self.assertEqual(objective.evaluate([0, 1]), 1.0)
        with self.assertRaises(NonFiniteValueException):
            objective.evaluate([1, 0])
        with self.assertRaises(NonFiniteValueException):
            objective.evaluate_batch(np.array([[0, 1], [1, 1]]))

    def test_evaluation_count_under_threads(self):
        objective = BilinearObjective(8)
        designs = np.random.default_rng(5).integers(0, 2, size=(2000, 8))
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(objective.evaluate, designs))
        objective.evaluate_batch(designs[:50])
        self.assertEqual(objective.evaluations, 2050)

    def test_logger_callback(self):
        callback = MagicMock()
        objective = ConstantObjective(2, 4.0, logger_callback=callback)
        objective.evaluate([1, 0])
        callback.assert_called_once()
        name, design, value = callback.call_args[0]
        self.assertEqual(name, "constant")
        np.testing.assert_array_equal(design, [1, 0])
        self.assertEqual(value, 4.0)

    def test_info(self):
        info = ConstantObjective(2, 4.0).get_info()
        self.assertEqual(info["dimension"], 2)
        self.assertEqual(info["known_optimum"], 4.0)

    def test_base_requires_implementation(self):
        with self.assertRaises(NotImplementedError):
            BaseObjective("abstract", 2).evaluate([0, 1])


class TestTraceFIM(unittest.TestCase):

    def setUp(self):
        self.forward = synthetic_forward_matrix(n_sensors=6, n_times=3, n_params=4, seed=2)
        self.problem = TraceFIMProblem.from_time_instances(self.forward, 0.5, 6)

    def test_time_major_rows(self):
        np.testing.assert_array_equal(self.problem.sensor_rows[1], [1, 7, 13])
        mask = self.problem.observation_mask([0, 0, 1, 0, 0, 0])
        np.testing.assert_array_equal(np.flatnonzero(mask), [2, 8, 14])

    def test_row_sum_matches_pseudo_inverse(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            d = rng.integers(0, 2, 6)
            row_sum = trace_fim_eval(self.problem, d, "row_sum")
            pinv = trace_fim_eval(self.problem, d, "pinv")
            self.assertAlmostEqual(row_sum, pinv, delta=1e-10 * max(1.0, abs(row_sum)))

    def test_objective_is_additive_over_sensors(self):
        objective = TraceFIMObjective(self.problem)
        singles = [objective.evaluate(np.eye(6, dtype=int)[s]) for s in range(6)]
        self.assertAlmostEqual(objective.evaluate(np.ones(6, dtype=int)), sum(singles))
        self.assertEqual(objective.evaluate(np.zeros(6, dtype=int)), 0.0)
        pinv = TraceFIMObjective(self.problem, method="pinv")
        self.assertAlmostEqual(pinv.evaluate([1, 0, 1, 0, 1, 0]), objective.evaluate([1, 0, 1, 0, 1, 0]))

    def test_invalid_problems(self):
        with self.assertRaises(ConfigException):
            TraceFIMProblem.from_time_instances(self.forward, 0.5, 5)
        with self.assertRaises(ConfigException):
            TraceFIMProblem.from_time_instances(self.forward, 0.0, 6)
        bad = self.forward.copy()
        bad[0, 0] = np.nan
        with self.assertRaises(ConfigException):
            TraceFIMProblem.from_time_instances(bad, 1.0, 6)
        with self.assertRaises(DomainException):
            trace_fim_eval(self.problem, [1, 0, 1, 0, 1, 0], "cholesky")
        with self.assertRaises(DomainException):
            self.problem.observation_mask([1, 0])

    def test_load_forward_matrix(self):
        with tempfile.TemporaryDirectory() as directory:
            npy_path = os.path.join(directory, "forward.npy")
            csv_path = os.path.join(directory, "forward.csv")
            np.save(npy_path, self.forward)
            np.savetxt(csv_path, self.forward, delimiter=",", fmt="%.17g")
            np.testing.assert_array_equal(load_forward_matrix(npy_path), self.forward)
            np.testing.assert_array_equal(load_forward_matrix(csv_path), self.forward)
            with self.assertRaises(ConfigException):
                load_forward_matrix(os.path.join(directory, "missing.npy"))


class TestObjectiveFactory(unittest.TestCase):

    def test_creates_each_type(self):
        self.assertIsInstance(create_objective({"type": "bilinear", "dimension": 8}), BilinearObjective)
        constant = create_objective({"type": "constant", "dimension": 3, "value": 2.0})
        self.assertEqual(constant.evaluate([1, 1, 0]), 2.0)
        trace_fim = create_objective({"type": "trace_fim", "dimension": 5, "n_times": 2, "n_params": 3})
        self.assertIsInstance(trace_fim, TraceFIMObjective)
        self.assertEqual(trace_fim.problem.forward.shape, (10, 3))

    def test_external_objective_is_created_lazily(self):
        objective = create_objective({"type": "external", "dimension": 4, "command": ["does-not-run"]})
        self.assertIsInstance(objective, ExternalObjective)
        objective.close()

    def test_trace_fim_from_file(self):
        forward = synthetic_forward_matrix(3, 2, 4, seed=1)
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "forward.npy")
            np.save(path, forward)
            objective = create_objective({"type": "trace_fim", "dimension": 3, "matrix_file": path, "sigma": 2.0})
        expected = float(np.sum(forward ** 2)) / 4.0
        self.assertAlmostEqual(objective.evaluate([1, 1, 1]), expected)

    def test_errors(self):
        with self.assertRaises(ConfigException):
            create_objective({"type": "quadratic", "dimension": 3})
        with self.assertRaises(ConfigException) as context:
            create_objective({"type": "bilinear"})
        self.assertIn("dimension", str(context.exception))
        with self.assertRaises(ConfigException):
            create_objective({"type": "external", "dimension": 3})


if __name__ == '__main__':
    unittest.main()
