"""
Oracles

This module provides the brute-force and numerical oracles the rest of the
package is verified against: exhaustive enumeration of feasible designs,
brute-force optima, finite-difference derivative checks and the default check
suite run by ``pbo check``.

Designs are enumerated in ascending canonical key 1 + sum_i d_i 2^i, which is
lexicographic order of the bit string read from d_{N-1} down to d_0.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import comb

from PBO.config.optimizer_config import DEFAULT_CHECK_CONFIG, DEFAULT_ENUMERATION_CAP
from PBO.core import combinatorics
from PBO.core.distributions import (
    CBModel,
    GCBModel,
    PBModel,
    exact_expectation,
    exact_gradient
)
from PBO.core.optimizer import ConstraintSpec
from PBO.exceptions import DomainException, EnumerationCapException
from PBO.utils.records import CheckOutcome, CheckReport

logger = logging.getLogger(__name__)

_CHUNK_SIZE = 1 << 16


def feasible_count(constraint: ConstraintSpec, dimension: int) -> int:
    """Number of designs satisfying the constraint, as a sum of binomial coefficients."""
    return int(sum(comb(dimension, z, exact=True) for z in constraint.budgets(dimension)
                   if 0 <= z <= dimension))


def design_from_key(key: int, dimension: int) -> np.ndarray:
    if key < 1 or key > 2 ** dimension:
        raise DomainException(f"key {key} outside [1, 2^{dimension}]")
    value = key - 1
    return np.array([(value >> i) & 1 for i in range(dimension)], dtype=np.int8)


class FeasibleEnumeration:
    """Exhaustive iterator over the designs satisfying a constraint, in canonical key order."""

    def __init__(self, constraint: ConstraintSpec, dimension: int,
                 cap: int = DEFAULT_ENUMERATION_CAP, chunk_size: int = _CHUNK_SIZE):
        if dimension > cap:
            raise EnumerationCapException(f"cannot enumerate N={dimension} above the cap {cap}")
        constraint.validate(dimension)
        self.constraint = constraint
        self.dimension = dimension
        self.chunk_size = chunk_size
        self._budgets = np.asarray(constraint.budgets(dimension))

    def __len__(self) -> int:
        return feasible_count(self.constraint, self.dimension)

    def chunks(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Yield (keys, designs) blocks of feasible designs."""
        shifts = np.arange(self.dimension, dtype=np.int64)
        total = 1 << self.dimension
        for start in range(0, total, self.chunk_size):
            values = np.arange(start, min(start + self.chunk_size, total), dtype=np.int64)
            designs = ((values[:, None] >> shifts) & 1).astype(np.int8)
            feasible = np.isin(designs.sum(axis=1), self._budgets)
            if np.any(feasible):
                yield values[feasible] + 1, designs[feasible]

    def __iter__(self) -> Iterator[np.ndarray]:
        for _, designs in self.chunks():
            yield from designs


def enumerate_feasible(constraint: ConstraintSpec, dimension: int,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> FeasibleEnumeration:
    return FeasibleEnumeration(constraint, dimension, cap)


def _evaluate_block(objective: Any, designs: np.ndarray) -> np.ndarray:
    if hasattr(objective, "evaluate_batch"):
        return np.asarray(objective.evaluate_batch(designs), dtype=float)
    evaluate = getattr(objective, "evaluate", objective)
    return np.array([evaluate(d) for d in designs], dtype=float)


@dataclass
class BruteForceResult:
    value: float
    designs: List[np.ndarray]
    keys: List[int]
    count: int


def brute_force_optimum(objective: Any, constraint: ConstraintSpec, direction: str = "maximize",
                        cap: int = DEFAULT_ENUMERATION_CAP) -> BruteForceResult:
    """
    Exact optimum over every feasible design.

    Returns:
        The optimal value with all optimal designs (ascending key) and the
        number of designs evaluated
    """
    enumeration = enumerate_feasible(constraint, int(objective.dimension), cap)
    best_value: Optional[float] = None
    best_keys: List[int] = []
    best_designs: List[np.ndarray] = []
    count = 0
    for keys, designs in enumeration.chunks():
        values = _evaluate_block(objective, designs)
        count += values.size
        target = values.max() if direction == "maximize" else values.min()
        improves = (best_value is None or (target > best_value if direction == "maximize"
                                           else target < best_value))
        hits = np.flatnonzero(values == target)
        if improves:
            best_value = float(target)
            best_keys = [int(keys[k]) for k in hits]
            best_designs = [designs[k].copy() for k in hits]
        elif target == best_value:
            best_keys.extend(int(keys[k]) for k in hits)
            best_designs.extend(designs[k].copy() for k in hits)
    logger.info(f"Brute force over {count} designs: optimum {best_value} attained by {len(best_keys)} designs")
    return BruteForceResult(value=best_value, designs=best_designs, keys=best_keys, count=count)


def brute_force_table(objective: Any, constraint: ConstraintSpec,
                      cap: int = DEFAULT_ENUMERATION_CAP) -> pd.DataFrame:
    """Every feasible design's canonical index and objective value."""
    frames = []
    for keys, designs in enumerate_feasible(constraint, int(objective.dimension), cap).chunks():
        frames.append(pd.DataFrame({"index": keys, "value": _evaluate_block(objective, designs)}))
    return pd.concat(frames, ignore_index=True)


@dataclass
class FiniteDifferenceReport:
    numerical: np.ndarray
    analytic: np.ndarray
    relative_errors: np.ndarray
    modes: List[str]
    tolerance: float
    passed: bool

    @property
    def max_error(self) -> float:
        return float(np.max(self.relative_errors)) if self.relative_errors.size else 0.0


def finite_difference_gradient(function: Callable[[np.ndarray], Any], point, step: float = 1e-6,
                               lower: Optional[float] = None,
                               upper: Optional[float] = None) -> Tuple[np.ndarray, List[str]]:
    """
    Numerical derivative of a scalar or vector function, one column per coordinate.

    Central differences are used unless a step would cross ``lower`` or
    ``upper``, in which case the one-sided difference from the inside is taken.
    """
    x = np.asarray(point, dtype=float)
    columns, modes = [], []
    for i in range(x.size):
        forward, backward = x.copy(), x.copy()
        forward[i] += step
        backward[i] -= step
        if lower is not None and backward[i] < lower:
            mode = "forward"
            derivative = (np.asarray(function(forward)) - np.asarray(function(x))) / step
        elif upper is not None and forward[i] > upper:
            mode = "backward"
            derivative = (np.asarray(function(x)) - np.asarray(function(backward))) / step
        else:
            mode = "central"
            derivative = (np.asarray(function(forward)) - np.asarray(function(backward))) / (2 * step)
        columns.append(np.atleast_1d(derivative))
        modes.append(mode)
    numerical = np.stack(columns, axis=-1)
    if numerical.shape[0] == 1:
        numerical = numerical[0]
    return numerical, modes


def finite_difference_check(function: Callable[[np.ndarray], Any], point, analytic,
                            step: float = 1e-6, tolerance: float = 1e-5,
                            lower: Optional[float] = None, upper: Optional[float] = None,
                            floor: float = 1e-3) -> FiniteDifferenceReport:
    """
    Compare an analytic derivative against finite differences.

    Args:
        function: Scalar (or vector) function of the point
        point: Where to differentiate
        analytic: Claimed derivative, a vector (or matrix with one column per coordinate)
        step: Difference step
        tolerance: Largest accepted relative error
        lower, upper: Box bounds that switch boundary coordinates to one-sided differences
        floor: Magnitude below which errors are measured absolutely

    Returns:
        FiniteDifferenceReport with the per-coordinate relative errors
    """
    numerical, modes = finite_difference_gradient(function, point, step, lower, upper)
    analytic = np.asarray(analytic, dtype=float).reshape(numerical.shape)
    scale = np.maximum(np.maximum(np.abs(numerical), np.abs(analytic)), floor)
    errors = np.abs(numerical - analytic) / scale
    per_coordinate = errors if errors.ndim == 1 else errors.max(axis=0)
    passed = bool(np.all(per_coordinate <= tolerance))
    if not passed:
        logger.debug(f"Finite-difference check failed: max relative error {per_coordinate.max():.3e}")
    return FiniteDifferenceReport(numerical=numerical, analytic=analytic, relative_errors=per_coordinate,
                                  modes=modes, tolerance=tolerance, passed=passed)


def finite_difference_second(function: Callable[[np.ndarray], float], point, i: int, j: int,
                             step: float = 1e-3) -> float:
    """
    Central second difference of a scalar function in coordinates i and j,
    Richardson-extrapolated from the steps h and h/2.
    """
    coarse = _second_difference(function, point, i, j, step)
    fine = _second_difference(function, point, i, j, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def _second_difference(function: Callable[[np.ndarray], float], point, i: int, j: int, step: float) -> float:
    x = np.asarray(point, dtype=float)

    def shifted(di: float, dj: float) -> float:
        y = x.copy()
        y[i] += di
        y[j] += dj
        return float(function(y))

    if i == j:
        return (shifted(step, 0.0) - 2.0 * float(function(x)) + shifted(-step, 0.0)) / step ** 2
    return (shifted(step, step) - shifted(step, -step) - shifted(-step, step)
            + shifted(-step, -step)) / (4.0 * step ** 2)


def exhaustive_expectation(objective: Any, model) -> float:
    evaluate = getattr(objective, "evaluate", objective)
    return exact_expectation(model, evaluate)


def exhaustive_gradient(objective: Any, model) -> np.ndarray:
    evaluate = getattr(objective, "evaluate", objective)
    return exact_gradient(model, evaluate)


def _outcome(name: str, report: FiniteDifferenceReport) -> CheckOutcome:
    return CheckOutcome(name=name, passed=report.passed, max_error=report.max_error)


def _closeness(name: str, a, b, tolerance: float) -> CheckOutcome:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-3)
    error = float(np.max(np.abs(a - b) / scale)) if a.size else 0.0
    return CheckOutcome(name=name, passed=error <= tolerance, max_error=error)


def _check_instance(rng: np.random.Generator, dimension: int, step: float,
                    tolerance: float) -> List[CheckOutcome]:
    p = rng.uniform(0.05, 0.95, dimension)
    z = int(rng.integers(1, dimension))
    w = p / (1.0 - p)
    d = np.zeros(dimension, dtype=np.int8)
    d[rng.choice(dimension, z, replace=False)] = 1
    outcomes = []

    outcomes.append(_outcome("weight_jacobian", finite_difference_check(
        lambda x: combinatorics.weights_from_probs(x).w, p,
        combinatorics.weight_jacobian(p), step, tolerance)))
    outcomes.append(_outcome("r_gradient", finite_difference_check(
        lambda x: combinatorics.r_value(z, x), w, combinatorics.r_gradient(z, w), step, tolerance)))
    outcomes.append(_closeness("r_gradient_via_inclusion", combinatorics.r_gradient(z, w),
                               combinatorics.r_gradient_via_inclusion(z, w), 1e-10))
    outcomes.append(_outcome("inclusion_derivatives", finite_difference_check(
        lambda x: combinatorics.inclusion_first(z, x).first_order, w,
        combinatorics.inclusion_derivatives(z, w, "first"), step, tolerance)))
    pi = combinatorics.inclusion_first(z, w).first_order
    outcomes.append(_closeness("inclusion_sum", pi.sum(), z, 1e-10))

    pb = PBModel(p)
    for route in ("tabulation", "inclusion"):
        outcomes.append(_outcome(f"pb_grad_{route}", finite_difference_check(
            lambda x: PBModel(x).pmf(z), p, pb.grad(z, route), step, tolerance)))
    outcomes.append(_closeness("pb_normalization", pb.pmf_table().sum(), 1.0, 1e-10))

    cb = CBModel(p, z)
    outcomes.append(_outcome("cb_log_grad", finite_difference_check(
        lambda x: CBModel(x, z).log_pmf(d), p, cb.log_grad(d), step, tolerance)))
    i, j = (int(k) for k in rng.choice(dimension, 2, replace=False))
    for a, b in ((i, i), (i, j)):
        numerical = finite_difference_second(lambda x: CBModel(x, z).log_pmf(d), p, a, b)
        outcomes.append(_closeness(f"cb_hessian_{'diagonal' if a == b else 'mixed'}",
                                   cb.hessian_entry(d, a, b), numerical, 1e-4))

    budget_set = sorted({z, max(0, z - 1)})
    gcb = GCBModel(p, budget_set)
    outcomes.append(_outcome("gcb_log_grad", finite_difference_check(
        lambda x: np.log(GCBModel(x, budget_set).pmf(d)), p, gcb.log_grad(d), step, tolerance)))
    outcomes.append(_closeness("gcb_normalization", sum(gcb.pmf(e) for e in gcb.support()), 1.0, 1e-10))
    return outcomes


def run_check_suite(instances: int = DEFAULT_CHECK_CONFIG["instances"],
                    dimension: int = DEFAULT_CHECK_CONFIG["dimension"],
                    seed: int = 0,
                    step: float = DEFAULT_CHECK_CONFIG["step"],
                    tolerance: float = DEFAULT_CHECK_CONFIG["tolerance"]) -> CheckReport:
    """
    Run the derivative and normalization checks on randomized instances.

    Returns:
        CheckReport with one outcome per check and instance
    """
    rng = np.random.default_rng(seed)
    report = CheckReport()
    for instance in range(instances):
        for outcome in _check_instance(rng, dimension, step, tolerance):
            outcome.detail = f"instance {instance}"
            report.outcomes.append(outcome)
    logger.info(f"Check suite: {report.passed} passed, {report.failed} failed")
    return report
