"""
Trace-of-FIM Objective

This module provides the A-optimal sensor placement objective of a linear
Gaussian inverse problem: the trace of the Fisher information matrix
F^T (diag(m) Gamma diag(m))^+ F with Gamma = sigma^2 I, where m switches on the
observation rows owned by the active sensors.

Observations are stacked time-major, so sensor s owns the rows
t * n_sensors + s for t = 0..n_times-1.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import List

import numpy as np

from PBO.exceptions import ConfigException, DomainException
from PBO.objectives.base_objective import BaseObjective

logger = logging.getLogger(__name__)


@dataclass
class TraceFIMProblem:
    forward: np.ndarray
    sigma: float
    sensor_rows: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.forward = np.asarray(self.forward, dtype=float)
        if self.forward.ndim != 2 or not np.all(np.isfinite(self.forward)):
            raise ConfigException("forward matrix must be a finite 2-D array")
        if not self.sigma > 0:
            raise ConfigException(f"noise standard deviation must be positive, got {self.sigma}")
        covered = np.sort(np.concatenate(self.sensor_rows)) if self.sensor_rows else np.empty(0)
        if not np.array_equal(covered, np.arange(self.forward.shape[0])):
            raise ConfigException("sensor row groups must partition the observation rows")

    @classmethod
    def from_time_instances(cls, forward: np.ndarray, sigma: float, n_sensors: int) -> "TraceFIMProblem":
        forward = np.asarray(forward, dtype=float)
        if forward.shape[0] % n_sensors:
            raise ConfigException(f"{forward.shape[0]} observation rows do not split over {n_sensors} sensors")
        rows = np.arange(forward.shape[0])
        return cls(forward=forward, sigma=sigma,
                   sensor_rows=[rows[s::n_sensors] for s in range(n_sensors)])

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_rows)

    def observation_mask(self, d) -> np.ndarray:
        d = np.asarray(d)
        if d.size != self.n_sensors:
            raise DomainException(f"design has {d.size} entries for {self.n_sensors} sensors")
        mask = np.zeros(self.forward.shape[0])
        for s in np.flatnonzero(d):
            mask[self.sensor_rows[s]] = 1.0
        return mask

    def sensor_contributions(self) -> np.ndarray:
        """sigma^-2 times the squared norm of each sensor's rows."""
        row_norms = np.sum(self.forward ** 2, axis=1)
        return np.array([row_norms[rows].sum() for rows in self.sensor_rows]) / self.sigma ** 2


def trace_fim_eval(problem: TraceFIMProblem, d, method: str = "row_sum") -> float:
    """
    Trace of the Fisher information matrix of design d.

    Args:
        problem: Forward matrix, noise level and sensor row map
        d: Binary design over sensors
        method: 'row_sum' (sigma^-2 sum of active squared row norms) or 'pinv'

    Returns:
        Trace of F^T (diag(m) Gamma diag(m))^+ F
    """
    mask = problem.observation_mask(d)
    if method == "row_sum":
        return float(np.sum(problem.forward[mask == 1.0] ** 2) / problem.sigma ** 2)
    if method == "pinv":
        M = np.diag(mask)
        precision = np.linalg.pinv(M @ (problem.sigma ** 2 * np.eye(mask.size)) @ M)
        return float(np.trace(problem.forward.T @ precision @ problem.forward))
    raise DomainException(f"unknown trace-FIM method: {method}")


def synthetic_forward_matrix(n_sensors: int, n_times: int, n_params: int, seed: int = 0,
                             decay: float = 0.1) -> np.ndarray:
    """
    Gaussian forward matrix with rows damped by 1 / (1 + decay * t) over time instances.

    Every sensor also gets its own random gain so sensors differ in information content.
    """
    rng = np.random.default_rng(seed)
    forward = rng.standard_normal((n_times * n_sensors, n_params))
    times = np.repeat(np.arange(n_times), n_sensors)
    gains = np.tile(rng.uniform(0.5, 1.5, n_sensors), n_times)
    return forward * (gains / (1.0 + decay * times))[:, None]


def load_forward_matrix(path: str) -> np.ndarray:
    """Load a forward matrix from a .npy file or a comma-separated text file."""
    if not os.path.exists(path):
        raise ConfigException(f"forward matrix file not found: {path}")
    if path.endswith(".npy"):
        matrix = np.load(path)
    else:
        matrix = np.loadtxt(path, delimiter=",", ndmin=2)
    logger.info(f"Loaded forward matrix {matrix.shape} from {path}")
    return matrix


class TraceFIMObjective(BaseObjective):

    def __init__(self, problem: TraceFIMProblem, method: str = "row_sum", name: str = "trace_fim", **kwargs):
        super().__init__(name, problem.n_sensors, **kwargs)
        self.problem = problem
        self.method = method
        self._contributions = problem.sensor_contributions()

    def _evaluate_impl(self, design: np.ndarray) -> float:
        if self.method == "row_sum":
            return float(design @ self._contributions)
        return trace_fim_eval(self.problem, design, self.method)
