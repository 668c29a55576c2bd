"""
Unit tests for the external objective protocol, the worker and the bridge.
"""

import io
import os
import sys
import unittest
from unittest.mock import MagicMock, patch

import numpy as np

from PBO.core.optimizer import ConstraintSpec, OptimizerConfig, run
from PBO.exceptions import (
    BridgeProcessException,
    BridgeProtocolException,
    ConfigException,
    NonFiniteValueException,
    ObjectiveEvaluationException
)
from PBO.objectives.bridge_worker import serve
from PBO.objectives.external_bridge import ExternalBridge, ExternalObjective, external_eval
from PBO.utils.bridge_protocol import BridgeProtocol

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def worker_command(objective: str = "popcount", mode: str = "normal"):
    return [sys.executable, "-m", "PBO.objectives.bridge_worker", "--objective", objective, "--mode", mode]


class TestBridgeProtocol(unittest.TestCase):

    def setUp(self):
        self.protocol = BridgeProtocol()

    def test_format(self):
        self.assertEqual(self.protocol.format_hello(3), "HELLO 3\n")
        self.assertEqual(self.protocol.format_eval([1, 0, 1]), "EVAL 3 101\n")
        self.assertEqual(self.protocol.format_value(2.5), "VAL 2.5\n")

    def test_parse_values(self):
        self.assertEqual(self.protocol.parse_value("VAL 3\n"), 3.0)
        self.assertEqual(self.protocol.parse_value("VAL -1.5e-3\n"), -1.5e-3)
        self.assertTrue(np.isnan(self.protocol.parse_value("VAL nan\n")))
        self.assertEqual(self.protocol.parse_value("VAL -inf\n"), -np.inf)
        value = 0.1 + 0.2
        self.assertEqual(self.protocol.parse_value(self.protocol.format_value(value)), value)

    def test_malformed_values(self):
        for line in ("VALUE 3\n", "VAL 3", "VAL\n", "VAL 3 4\n", "val 3\n", "VAL three\n"):
            with self.assertRaises(BridgeProtocolException) as context:
                self.protocol.parse_value(line)
            self.assertEqual(context.exception.line, line)

    def test_protocol_errors_are_objective_failures(self):
        self.assertTrue(issubclass(BridgeProtocolException, ObjectiveEvaluationException))

    def test_parse_requests(self):
        self.assertEqual(self.protocol.parse_hello("HELLO 12\n"), 12)
        np.testing.assert_array_equal(self.protocol.parse_eval("EVAL 3 101\n", 3), [1, 0, 1])
        with self.assertRaises(BridgeProtocolException):
            self.protocol.parse_eval("EVAL 3 101\n", 4)
        with self.assertRaises(BridgeProtocolException):
            self.protocol.parse_eval("EVAL 4 101\n", 4)
        with self.assertRaises(BridgeProtocolException):
            self.protocol.parse_hello("HELLO 0\n")
        self.protocol.parse_ready("READY\n")
        with self.assertRaises(BridgeProtocolException):
            self.protocol.parse_ready("OK\n")


class TestWorker(unittest.TestCase):

    def _serve(self, requests: str, objective: str = "popcount", mode: str = "normal"):
        stdout = io.BytesIO()
        code = serve(objective, mode, io.BytesIO(requests.encode("ascii")), stdout)
        return code, stdout.getvalue().decode("ascii")

    def test_normal_session(self):
        code, output = self._serve("HELLO 4\nEVAL 4 1101\nEVAL 4 0101\nBYE\n", objective="bilinear")
        self.assertEqual(code, 0)
        self.assertEqual(output, "READY\nVAL 1.0\nVAL 2.0\n")

    def test_bad_handshake(self):
        code, output = self._serve("HI 4\n")
        self.assertEqual(code, 2)
        self.assertEqual(output, "")

    def test_misbehaving_modes(self):
        self.assertEqual(self._serve("HELLO 2\nEVAL 2 11\n", mode="malformed")[1], "READY\nVALUE 2.0\n")
        self.assertEqual(self._serve("HELLO 2\nEVAL 2 11\n", mode="nonfinite")[1], "READY\nVAL nan\n")
        self.assertEqual(self._serve("HELLO 2\nEVAL 2 11\n", mode="exit"), (3, "READY\n"))


class TestExternalBridge(unittest.TestCase):

    def setUp(self):
        patcher = patch.dict(os.environ, {"PYTHONPATH": REPO_ROOT})
        patcher.start()
        self.addCleanup(patcher.stop)

    def test_popcount(self):
        with ExternalBridge(worker_command(), 5) as bridge:
            self.assertEqual(bridge.evaluate([1, 0, 1, 1, 0]), 3.0)
            self.assertEqual(bridge.evaluate([0, 0, 0, 0, 0]), 0.0)
            self.assertTrue(bridge.running)
        self.assertFalse(bridge.running)

    def test_malformed_response(self):
        with ExternalBridge(worker_command(mode="malformed"), 3) as bridge:
            with self.assertRaises(BridgeProtocolException) as context:
                bridge.evaluate([1, 0, 1])
        self.assertTrue(context.exception.line.startswith("VALUE"))

    def test_non_finite_response(self):
        with ExternalBridge(worker_command(mode="nonfinite"), 3) as bridge:
            with self.assertRaises(NonFiniteValueException):
                bridge.evaluate([1, 0, 1])

    def test_process_exit(self):
        with ExternalBridge(worker_command(mode="exit"), 3) as bridge:
            with self.assertRaises(BridgeProcessException) as context:
                bridge.evaluate([1, 0, 1])
            self.assertIn("code 3", str(context.exception))
            with self.assertRaises(BridgeProcessException):
                bridge.evaluate([1, 0, 1])

    def test_missing_executable(self):
        with self.assertRaises(BridgeProcessException):
            ExternalBridge(["/nonexistent/objective-binary"], 3).evaluate([1, 0, 1])
        with self.assertRaises(ConfigException):
            ExternalBridge([], 3)

    def test_closed_pipe_before_handshake(self):
        process = MagicMock()
        process.stdout.readline.return_value = b""
        process.wait.return_value = 7
        process.poll.return_value = 7
        with patch("PBO.objectives.external_bridge.subprocess.Popen", return_value=process):
            with self.assertRaises(BridgeProcessException) as context:
                ExternalBridge(["objective"], 2).evaluate([0, 1])
        self.assertIn("code 7", str(context.exception))

    def test_external_eval(self):
        self.assertEqual(external_eval({"command": worker_command("bilinear")}, [0, 1, 0, 1]), 2.0)

    def test_pool_serves_concurrent_optimizer(self):
        config = OptimizerConfig(sample_size=10, max_iterations=3, final_sample_size=10, seed=2, threads=2)
        with ExternalObjective(worker_command("bilinear"), 6, pool_size=2) as objective:
            trace = run(objective, ConstraintSpec.equality(3), config)
        self.assertEqual(trace.iterations, 3)
        self.assertEqual(sum(trace.design.design), 3)

    def test_optimizer_reports_external_failure(self):
        config = OptimizerConfig(sample_size=5, max_iterations=2, final_sample_size=5)
        with ExternalObjective(worker_command(mode="nonfinite"), 4) as objective:
            with self.assertRaises(NonFiniteValueException) as context:
                run(objective, ConstraintSpec.equality(2), config)
        self.assertIsNotNone(context.exception.partial_trace)


if __name__ == '__main__':
    unittest.main()
