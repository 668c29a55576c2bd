"""
End-to-end reproduction tests of the bilinear, inclusion, large-dimension and
sensor-placement experiments.

The long-running tests only run when PBO_RUN_SLOW is set.
"""

import os
import tempfile
import unittest

import numpy as np

from PBO.config.optimizer_config import REFERENCE_SEED
from PBO.core.optimizer import ConstraintSpec, OptimizerConfig, run, uniform_baseline_best
from PBO.core.oracle import brute_force_optimum, enumerate_feasible, feasible_count
from PBO.core.sampling import RandomStream
from PBO.objectives.bilinear import BilinearObjective
from PBO.objectives.trace_fim import TraceFIMObjective, TraceFIMProblem, synthetic_forward_matrix
from PBO.pbo_system import ProbabilisticBinaryOptimizationSystem

RUN_SLOW = bool(os.getenv("PBO_RUN_SLOW"))


class TestBilinearReference(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.objective = BilinearObjective(20)
        cls.constraint = ConstraintSpec.equality(10)
        cls.trace = run(cls.objective, cls.constraint, OptimizerConfig(seed=REFERENCE_SEED))

    def test_reaches_global_maximum(self):
        self.assertEqual(self.trace.best_along_route.value, 10.0)
        self.assertEqual(self.trace.best_along_route.design, [0, 1] * 10)

    def test_iterates_stay_in_box(self):
        for record in self.trace.records:
            policy = np.asarray(record.policy)
            self.assertTrue(np.all((policy >= 0.0) & (policy <= 1.0)))

    def test_new_evaluations_decay(self):
        new = np.array([record.new_evaluations for record in self.trace.records], dtype=float)
        quarter = max(1, len(new) // 4)
        self.assertLess(new[-quarter:].mean(), new[:quarter].mean())

    def test_distinct_evaluations_bounded(self):
        statistics = self.trace.cache_statistics
        self.assertIsNone(statistics.explored_fraction)
        self.assertLessEqual(statistics.distinct_evaluations, feasible_count(self.constraint, 20))


class TestSmallProblems(unittest.TestCase):

    def test_bilinear_six_three(self):
        objective = BilinearObjective(6)
        constraint = ConstraintSpec.equality(3)
        trace = run(objective, constraint, OptimizerConfig())
        self.assertEqual(trace.design.value, brute_force_optimum(objective, constraint).value)
        self.assertEqual(trace.design.value, 3.0)

    def test_inclusion_region_count_by_enumeration(self):
        constraint = ConstraintSpec.inclusion(range(11))
        enumerated = sum(len(keys) for keys, _ in enumerate_feasible(constraint, 20).chunks())
        self.assertEqual(enumerated, 616666)
        self.assertEqual(enumerated, feasible_count(constraint, 20))


@unittest.skipUnless(RUN_SLOW, "set PBO_RUN_SLOW=1 to run the long reproduction tests")
class TestSlowReproduction(unittest.TestCase):

    def test_bilinear_across_seeds(self):
        objective = BilinearObjective(20)
        constraint = ConstraintSpec.equality(10)
        values = []
        for seed in range(10):
            trace = run(objective, constraint, OptimizerConfig(seed=seed))
            values.append(trace.best_along_route.value)
            uniform = uniform_baseline_best(objective, constraint, 1000, RandomStream(seed).spawn(10 ** 6))
            early = max(record.best_value for record in trace.records[:10])
            self.assertGreater(early, uniform.value, f"seed {seed}")
        self.assertTrue(all(value >= 9.0 for value in values))
        self.assertGreaterEqual(sum(value == 10.0 for value in values), 8)

    def test_inclusion_and_unconstrained(self):
        objective = BilinearObjective(20)
        for constraint in (ConstraintSpec.inclusion(range(11)), ConstraintSpec.unconstrained()):
            trace = run(objective, constraint, OptimizerConfig())
            self.assertEqual(trace.best_along_route.value, 10.0, constraint.kind)

    def test_large_dimension(self):
        constraint = ConstraintSpec.equality(10)
        trace = run(BilinearObjective(500), constraint, OptimizerConfig(),
                    feasible_count=feasible_count(constraint, 500))
        self.assertGreaterEqual(trace.best_along_route.value, 9.0)
        self.assertLess(trace.cache_statistics.explored_fraction, 1e-10)

    def test_trace_fim_sensor_placement(self):
        forward = synthetic_forward_matrix(n_sensors=20, n_times=4, n_params=10, seed=0)
        objective = TraceFIMObjective(TraceFIMProblem.from_time_instances(forward, 1.0, 20))
        constraint = ConstraintSpec.equality(10)
        optimum = brute_force_optimum(objective, constraint)
        trace = run(objective, constraint, OptimizerConfig())
        self.assertGreaterEqual(trace.design.value, 0.98 * optimum.value)

    def test_reference_run_is_byte_reproducible(self):
        config = {"objective": {"type": "bilinear", "dimension": 20},
                  "constraint": {"kind": "equality", "budget": 10}}
        with tempfile.TemporaryDirectory() as directory:
            outputs = []
            for name in ("first", "second"):
                out = os.path.join(directory, name)
                with ProbabilisticBinaryOptimizationSystem(config=config, out=out, configure_logging=False) as system:
                    system.optimize()
                outputs.append(out)
            for name in ("trace.csv", "result.json"):
                with open(os.path.join(outputs[0], name), "rb") as a, open(os.path.join(outputs[1], name), "rb") as b:
                    self.assertEqual(a.read(), b.read())


if __name__ == '__main__':
    unittest.main()
