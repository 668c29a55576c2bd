"""
Base Objective

This module provides the base objective class that all black-box objectives
inherit from.
"""

import logging
import threading
from typing import Any, Callable, Dict, Optional

import numpy as np

from PBO.core.distributions import validate_design, validate_designs
from PBO.exceptions import NonFiniteValueException

logger = logging.getLogger(__name__)


class BaseObjective:
    """
    Base class for deterministic real-valued functions of binary designs.

    Subclasses implement ``_evaluate_impl``; vectorized objectives may also
    override ``_evaluate_batch_impl``.
    """

    def __init__(self,
                 name: str,
                 dimension: int,
                 config: Optional[Dict[str, Any]] = None,
                 known_optimum: Optional[float] = None,
                 logger_callback: Optional[Callable] = None):
        """
        Initialize the base objective.

        Args:
            name: Name of the objective
            dimension: Length N of the designs
            config: Objective configuration
            known_optimum: Optimal value under the intended constraint, if known
            logger_callback: Callback receiving (name, design, value) after each evaluation
        """
        self.name = name
        self.dimension = int(dimension)
        self.config = config or {}
        self.known_optimum = known_optimum
        self.logger_callback = logger_callback
        self.evaluations = 0
        self._count_lock = threading.Lock()

        logger.info(f"Initialized objective {name} over N={self.dimension}")

    def evaluate(self, d) -> float:
        """
        Evaluate the objective at one design.

        Raises:
            DomainException: If d is not a binary vector of length N
            NonFiniteValueException: If the objective returns NaN or infinity
        """
        design = validate_design(d, self.dimension)
        value = float(self._evaluate_impl(design))
        self._check_finite(value, design)
        self._count(1)
        if self.logger_callback:
            self.logger_callback(self.name, design, value)
        return value

    __call__ = evaluate

    def evaluate_batch(self, designs) -> np.ndarray:
        batch = validate_designs(designs, self.dimension)
        values = np.asarray(self._evaluate_batch_impl(batch), dtype=float)
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            self._check_finite(float(values[bad]), batch[bad])
        self._count(values.size)
        return values

    def _count(self, n: int) -> None:
        # evaluate may run on EvaluationCache worker threads
        with self._count_lock:
            self.evaluations += n

    def _check_finite(self, value: float, design: np.ndarray) -> None:
        if not np.isfinite(value):
            bits = "".join(str(int(b)) for b in design)
            logger.error(f"Objective {self.name} returned {value} at {bits}")
            raise NonFiniteValueException(f"objective {self.name} returned non-finite value {value} at {bits}")

    def _evaluate_impl(self, design: np.ndarray) -> float:
        """
        Implementation of the objective.

        This method should be overridden by subclasses.
        """
        raise NotImplementedError("Subclasses must implement _evaluate_impl")

    def _evaluate_batch_impl(self, designs: np.ndarray) -> np.ndarray:
        return np.array([self._evaluate_impl(d) for d in designs], dtype=float)

    def get_info(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "known_optimum": self.known_optimum,
            "evaluations": self.evaluations
        }

    def close(self) -> None:
        """Release external resources; nothing to do for in-process objectives."""


class ConstantObjective(BaseObjective):
    """J(d) = c for every design."""

    def __init__(self, dimension: int, value: float = 0.0, name: str = "constant", **kwargs):
        super().__init__(name, dimension, known_optimum=value, **kwargs)
        self.value = float(value)

    def _evaluate_impl(self, design: np.ndarray) -> float:
        return self.value

    def _evaluate_batch_impl(self, designs: np.ndarray) -> np.ndarray:
        return np.full(designs.shape[0], self.value)


class FunctionObjective(BaseObjective):
    """Adapter turning a plain callable into an objective."""

    def __init__(self, function: Callable[[np.ndarray], float], dimension: int,
                 name: str = "function", **kwargs):
        super().__init__(name, dimension, **kwargs)
        self.function = function

    def _evaluate_impl(self, design: np.ndarray) -> float:
        return float(self.function(design))
