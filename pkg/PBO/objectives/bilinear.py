"""
Bilinear Objective

This module provides the alternating-sign benchmark J(d) = sum_{i=1..N} (-1)^i d_i
with 1-based positions: even positions count +1, odd positions -1. Its maximum
under the budget ||d||_0 = N/2 is N/2, attained by selecting every even position.
"""

import logging
from typing import Optional

import numpy as np

from PBO.objectives.base_objective import BaseObjective

logger = logging.getLogger(__name__)


def bilinear_signs(dimension: int) -> np.ndarray:
    positions = np.arange(1, dimension + 1)
    return np.where(positions % 2 == 0, 1.0, -1.0)


def bilinear_eval(d) -> float:
    d = np.asarray(d, dtype=float)
    return float(np.dot(bilinear_signs(d.size), d))


class BilinearObjective(BaseObjective):

    def __init__(self, dimension: int, name: str = "bilinear", known_optimum: Optional[float] = None, **kwargs):
        if known_optimum is None:
            known_optimum = float(dimension // 2)
        super().__init__(name, dimension, known_optimum=known_optimum, **kwargs)
        self.signs = bilinear_signs(self.dimension)

    def _evaluate_impl(self, design: np.ndarray) -> float:
        return float(np.dot(self.signs, design))

    def _evaluate_batch_impl(self, designs: np.ndarray) -> np.ndarray:
        return designs @ self.signs
