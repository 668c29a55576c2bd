"""
Optimizer

This module provides projected stochastic gradient ascent (or descent) on the
success probabilities of a conditional Bernoulli policy. Each iteration samples
designs from the current policy, evaluates the black-box objective through an
evaluation cache, forms the score-function gradient with the optimal baseline,
and takes a step scaled back into the unit box by the projector.
"""

import logging
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from PBO.config.optimizer_config import DEFAULT_ENUMERATION_CAP, DEFAULT_OPTIMIZER_CONFIG
from PBO.core.distributions import CBModel, SuccessProbabilities, build_model
from PBO.core.sampling import RandomStream, SampleBatch, canonical_key, sample_model
from PBO.exceptions import (
    ConfigException,
    DomainException,
    InfeasibleConstraintException,
    ObjectiveEvaluationException
)
from PBO.utils.records import BestDesign, CacheStatistics, IterationRecord

logger = logging.getLogger(__name__)

DIRECTIONS = ("maximize", "minimize")
DECAY_SCHEDULES = ("none", "inverse")


@dataclass(frozen=True)
class ConstraintSpec:
    """Budget constraint on ||d||_0: a single value, a set of values, or none."""
    kind: str
    budget: Optional[int] = None
    budget_set: Tuple[int, ...] = ()

    @classmethod
    def equality(cls, z: int) -> "ConstraintSpec":
        return cls(kind="equality", budget=int(z))

    @classmethod
    def inclusion(cls, budget_set: Sequence[int]) -> "ConstraintSpec":
        return cls(kind="inclusion", budget_set=tuple(sorted({int(z) for z in budget_set})))

    @classmethod
    def unconstrained(cls) -> "ConstraintSpec":
        return cls(kind="unconstrained")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConstraintSpec":
        kind = data.get("kind")
        if kind == "equality":
            if "budget" not in data:
                raise ConfigException("equality constraint requires 'budget'")
            return cls.equality(data["budget"])
        if kind == "inclusion":
            if not data.get("budget_set"):
                raise ConfigException("inclusion constraint requires a nonempty 'budget_set'")
            return cls.inclusion(data["budget_set"])
        if kind == "unconstrained":
            return cls.unconstrained()
        raise ConfigException(f"unknown constraint kind: {kind}")

    def budgets(self, dimension: int) -> List[int]:
        if self.kind == "equality":
            return [self.budget]
        if self.kind == "inclusion":
            return list(self.budget_set)
        return list(range(dimension + 1))

    def validate(self, dimension: int) -> None:
        budgets = self.budgets(dimension)
        if not budgets:
            raise InfeasibleConstraintException("budget set is empty")
        if min(budgets) < 0 or max(budgets) > dimension:
            raise InfeasibleConstraintException(f"budgets {budgets} outside [0, {dimension}]")

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "equality":
            return {"kind": self.kind, "budget": self.budget}
        if self.kind == "inclusion":
            return {"kind": self.kind, "budget_set": list(self.budget_set)}
        return {"kind": self.kind}


@dataclass
class OptimizerConfig:
    learning_rate: float = DEFAULT_OPTIMIZER_CONFIG["learning_rate"]
    sample_size: int = DEFAULT_OPTIMIZER_CONFIG["sample_size"]
    max_iterations: int = DEFAULT_OPTIMIZER_CONFIG["max_iterations"]
    pgtol: float = DEFAULT_OPTIMIZER_CONFIG["pgtol"]
    final_sample_size: int = DEFAULT_OPTIMIZER_CONFIG["final_sample_size"]
    direction: str = DEFAULT_OPTIMIZER_CONFIG["direction"]
    seed: int = DEFAULT_OPTIMIZER_CONFIG["seed"]
    baseline: bool = DEFAULT_OPTIMIZER_CONFIG["baseline"]
    initial_p: Union[float, Sequence[float]] = DEFAULT_OPTIMIZER_CONFIG["initial_p"]
    decay: str = DEFAULT_OPTIMIZER_CONFIG["decay"]
    threads: int = DEFAULT_OPTIMIZER_CONFIG["threads"]
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigException(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        for name in ("sample_size", "max_iterations", "final_sample_size", "threads", "enumeration_cap"):
            if int(getattr(self, name)) < 1:
                raise ConfigException(f"{name} must be a positive integer")
        if self.pgtol < 0:
            raise ConfigException("pgtol must be nonnegative")
        if self.direction not in DIRECTIONS:
            raise ConfigException(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.decay not in DECAY_SCHEDULES:
            raise ConfigException(f"decay must be one of {DECAY_SCHEDULES}, got {self.decay!r}")
        if self.seed < 0:
            raise ConfigException("seed must be nonnegative")

    @classmethod
    def from_dict(cls, settings: Dict[str, Any]) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(settings) - known)
        if unknown:
            raise ConfigException(f"unknown optimizer settings: {', '.join(unknown)}")
        return cls(**settings)

    def initial_policy(self, dimension: int) -> np.ndarray:
        if np.isscalar(self.initial_p):
            return np.full(dimension, float(self.initial_p))
        p0 = np.asarray(self.initial_p, dtype=float)
        if p0.size != dimension:
            raise ConfigException(f"initial_p has {p0.size} entries, expected {dimension}")
        return p0.copy()

    def step_size(self, iteration: int) -> float:
        if self.decay == "inverse":
            return self.learning_rate / (iteration + 1)
        return self.learning_rate


@dataclass
class OptimizerTrace:
    records: List[IterationRecord] = field(default_factory=list)
    best_along_route: Optional[BestDesign] = None
    optimal_policy: Optional[np.ndarray] = None
    final_sample: Optional[SampleBatch] = None
    design: Optional[BestDesign] = None
    converged: bool = False
    cache_statistics: Optional[CacheStatistics] = None

    @property
    def iterations(self) -> int:
        return len(self.records)


class BestTracker:
    """Keeps the best design seen so far; equal values go to the lowest key."""

    def __init__(self, direction: str = "maximize"):
        self.direction = direction
        self.best: Optional[BestDesign] = None

    def better(self, value: float, key: int, incumbent: Optional[BestDesign]) -> bool:
        if incumbent is None:
            return True
        if value == incumbent.value:
            return key < incumbent.key
        if self.direction == "maximize":
            return value > incumbent.value
        return value < incumbent.value

    def update(self, designs: np.ndarray, values: np.ndarray) -> Optional[BestDesign]:
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return self.best
        target = values.max() if self.direction == "maximize" else values.min()
        candidates = [(canonical_key(designs[k]), k) for k in np.flatnonzero(values == target)]
        key, k = min(candidates)
        if self.better(float(target), key, self.best):
            self.best = BestDesign(design=[int(b) for b in designs[k]], value=float(target), key=key)
        return self.best


def best_of(designs: np.ndarray, values: np.ndarray, direction: str = "maximize") -> BestDesign:
    tracker = BestTracker(direction)
    return tracker.update(designs, values)


class EvaluationCache:
    """
    Objective values keyed by canonical design index.

    Every key is evaluated at most once, also when batches are evaluated on
    several threads: the first caller of a key owns its evaluation and later
    callers wait on the same future.
    """

    def __init__(self, objective: Any, threads: int = 1):
        self._evaluate: Callable[[np.ndarray], float] = getattr(objective, "evaluate", objective)
        self.threads = max(1, int(threads))
        self._values: Dict[int, float] = {}
        self._in_flight: Dict[int, Future] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, design) -> bool:
        return canonical_key(design) in self._values

    def lookup(self, design: np.ndarray) -> Tuple[float, bool]:
        """Return (value, computed) for one design."""
        key = canonical_key(design)
        with self._lock:
            if key in self._values:
                self.hits += 1
                return self._values[key], False
            future = self._in_flight.get(key)
            owner = future is None
            if owner:
                future = Future()
                self._in_flight[key] = future
                self.misses += 1
            else:
                self.hits += 1
        if not owner:
            return future.result(), False
        try:
            value = float(self._evaluate(np.asarray(design)))
        except ObjectiveEvaluationException as err:
            self._fail(key, future, err)
            raise
        except Exception as err:
            wrapped = ObjectiveEvaluationException(f"objective failed on design {key}: {err}")
            self._fail(key, future, wrapped)
            raise wrapped from err
        with self._lock:
            self._values[key] = value
            del self._in_flight[key]
        future.set_result(value)
        return value, True

    def _fail(self, key: int, future: Future, err: Exception) -> None:
        with self._lock:
            self._in_flight.pop(key, None)
        future.set_exception(err)

    def evaluate_batch(self, designs: np.ndarray) -> Tuple[np.ndarray, int]:
        """
        Evaluate a batch of designs.

        Returns:
            Values in batch order and the number of newly computed keys
        """
        designs = np.asarray(designs)
        if self.threads == 1 or designs.shape[0] < 2:
            results = [self.lookup(d) for d in designs]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(self.lookup, designs))
        values = np.array([value for value, _ in results], dtype=float)
        return values, sum(1 for _, computed in results if computed)

    def statistics(self, feasible_count: Optional[int] = None) -> CacheStatistics:
        fraction = len(self._values) / feasible_count if feasible_count else None
        return CacheStatistics(
            distinct_evaluations=len(self._values),
            hits=self.hits,
            misses=self.misses,
            explored_fraction=fraction
        )


def policy_model(policy: SuccessProbabilities, constraint: ConstraintSpec,
                 cap: int = DEFAULT_ENUMERATION_CAP):
    """CB model for a single admissible budget, GCB model otherwise."""
    return build_model(policy, constraint.budgets(policy.dimension), cap=cap)


def _batch_values(batch: SampleBatch, objective: Any) -> np.ndarray:
    if batch.objective_values is not None:
        return np.asarray(batch.objective_values, dtype=float)
    if objective is None:
        raise DomainException("sample batch carries no objective values and no objective was given")
    evaluate = getattr(objective, "evaluate", objective)
    return np.array([evaluate(d) for d in batch.designs], dtype=float)


def stochastic_gradient(policy: SuccessProbabilities, constraint: ConstraintSpec, objective: Any,
                        batch: SampleBatch, baseline: float = 0.0, model=None,
                        scores: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Score-function estimate (1/n) sum_k (J(d_k) - b) grad log P(d_k) of the
    gradient of E[J] with respect to the success probabilities.
    """
    values = _batch_values(batch, objective)
    if scores is None:
        model = model if model is not None else policy_model(policy, constraint)
        scores = model.log_grad_batch(batch.designs)
    return (values - baseline) @ scores / batch.size


def optimal_baseline(policy: SuccessProbabilities, constraint: ConstraintSpec, batch: SampleBatch,
                     model=None, scores: Optional[np.ndarray] = None,
                     objective: Any = None) -> float:
    """
    Variance-minimizing baseline over the non-degenerate coordinates.

    max{0, sum_k J_k ||s_k||^2 / (n V)} where V = E||s||^2 is the closed-form
    total score variance (PB-weighted over the budgets of a GCB policy).
    Only the k == l terms of sum_k sum_l J_k s_k . s_l enter the numerator.
    """
    free = policy.free
    if free.size == 0:
        return 0.0
    model = model if model is not None else policy_model(policy, constraint)
    if scores is None:
        scores = model.log_grad_batch(batch.designs)
    values = _batch_values(batch, objective)
    free_scores = scores[:, free]
    numerator = float(values @ np.einsum("ki,ki->k", free_scores, free_scores))
    if isinstance(model, CBModel):
        variance = model.score_variance()
    else:
        variance = model.mixture_score_variance()
    denominator = batch.size * variance
    if not np.isfinite(denominator) or denominator <= 0.0:
        return 0.0
    return max(0.0, numerator / denominator)


def project(p: np.ndarray, g: np.ndarray, direction: str = "maximize") -> np.ndarray:
    """
    Scale g so that a full step p +/- g stays in [0, 1]^N.

    Returns s * g with s = min(1, min_i s_i), where s_i = (1 - p_i) / |g_i| for
    a step leaving through 1, p_i / |g_i| for one leaving through 0, else 1.
    """
    g = np.asarray(g, dtype=float)
    s = _step_scales(p, g, direction)
    scale = min(1.0, float(s.min())) if s.size else 1.0
    return scale * g


def _step_scales(p: np.ndarray, g: np.ndarray, direction: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    step = g if direction == "maximize" else -g
    target = p + step
    magnitude = np.abs(g)
    s = np.ones_like(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        above = target > 1.0
        below = target < 0.0
        s[above] = (1.0 - p[above]) / magnitude[above]
        s[below] = p[below] / magnitude[below]
    return s


def blocking_coordinates(p: np.ndarray, g: np.ndarray, direction: str = "maximize") -> List[int]:
    """Indices whose boundary distance sets the projector's scale, empty when the full step fits."""
    s = _step_scales(p, g, direction)
    if s.size == 0 or s.min() >= 1.0:
        return []
    return np.flatnonzero(s <= s.min()).tolist()


def run(objective: Any, constraint: ConstraintSpec, config: Optional[OptimizerConfig] = None,
        run_logger: Any = None, callback: Optional[Callable[[IterationRecord], None]] = None,
        feasible_count: Optional[int] = None) -> OptimizerTrace:
    """
    Optimize the success probabilities of the policy for a black-box objective.

    Args:
        objective: Object with ``dimension`` and ``evaluate(d)``
        constraint: Budget constraint on the designs
        config: Optimizer settings (defaults when omitted)
        run_logger: Optional RunLogger receiving run events
        callback: Optional hook called with every IterationRecord
        feasible_count: Size of the feasible region for the explored fraction

    Returns:
        OptimizerTrace with the iteration records, p*, the final sample, d*
        and the best design seen along the route

    Raises:
        InfeasibleConstraintException: If the constraint has zero probability
        ObjectiveEvaluationException: If the objective fails; carries the partial trace
    """
    config = config or OptimizerConfig()
    dimension = int(objective.dimension)
    constraint.validate(dimension)
    stream = RandomStream(config.seed)
    cache = EvaluationCache(objective, config.threads)
    tracker = BestTracker(config.direction)
    trace = OptimizerTrace()
    sign = 1.0 if config.direction == "maximize" else -1.0
    p = config.initial_policy(dimension)

    logger.info(f"Starting optimization: N={dimension}, constraint={constraint.to_dict()}, "
                f"eta={config.learning_rate}, n_ens={config.sample_size}, seed={config.seed}")
    if run_logger is not None:
        run_logger.log_run_start({"constraint": constraint.to_dict(), "dimension": dimension,
                                  "optimizer": vars(config)})

    def evaluate(designs: np.ndarray) -> Tuple[np.ndarray, int]:
        try:
            values, new = cache.evaluate_batch(designs)
        except ObjectiveEvaluationException as err:
            trace.best_along_route = tracker.best
            trace.cache_statistics = cache.statistics(feasible_count)
            err.partial_trace = trace
            logger.error(f"Objective evaluation failed after {trace.iterations} iterations: {err}")
            raise
        tracker.update(designs, values)
        return values, new

    for n in range(config.max_iterations):
        policy = SuccessProbabilities(p)
        model = policy_model(policy, constraint, config.enumeration_cap)

        # Sample from the current policy and evaluate through the cache
        batch = sample_model(model, config.sample_size, stream.spawn(n))
        values, new = evaluate(batch.designs)
        batch = batch.with_values(values)

        # Score-function gradient, scores shared by baseline and estimator
        scores = model.log_grad_batch(batch.designs)
        baseline = optimal_baseline(policy, constraint, batch, model, scores) if config.baseline else 0.0
        gradient = stochastic_gradient(policy, constraint, None, batch, baseline, model, scores)

        # Scale the step back into the unit box
        projected = project(policy.values, gradient, config.direction)
        pgnorm = float(np.linalg.norm(projected))

        record = IterationRecord(
            iteration=n,
            policy=policy.values.tolist(),
            projected_gradient=projected.tolist(),
            pgnorm=pgnorm,
            baseline=baseline,
            mean_value=float(values.mean()),
            best_value=float(values.max() if config.direction == "maximize" else values.min()),
            new_evaluations=new,
            cumulative_evaluations=len(cache)
        )
        trace.records.append(record)
        logger.debug(f"Iteration {n}: pgnorm={pgnorm:.3e}, baseline={baseline:.4g}, "
                     f"mean J={record.mean_value:.4g}, new evaluations={new}")
        if run_logger is not None:
            run_logger.log_iteration(record)
        if callback is not None:
            callback(record)

        if pgnorm < config.pgtol:
            trace.converged = True
            if np.linalg.norm(gradient) >= config.pgtol:
                pinned = blocking_coordinates(policy.values, gradient, config.direction)
                pinned_text = ", ".join(f"p_{i}={policy.values[i]:.3g}" for i in pinned)
                logger.warning(f"Projector stalled at iteration {n}: {pinned_text} pinned at the box "
                               f"boundary block the step")
            logger.info(f"Converged after {n + 1} iterations (pgnorm={pgnorm:.3e})")
            break
        p = np.clip(policy.values + sign * config.step_size(n) * projected, 0.0, 1.0)

    # Final sample from p*
    optimal = SuccessProbabilities(p)
    final_model = policy_model(optimal, constraint, config.enumeration_cap)
    final_batch = sample_model(final_model, config.final_sample_size, stream.spawn(config.max_iterations))
    final_values, _ = evaluate(final_batch.designs)

    trace.optimal_policy = optimal.values.copy()
    trace.final_sample = final_batch.with_values(final_values)
    trace.design = best_of(final_batch.designs, final_values, config.direction)
    trace.best_along_route = tracker.best
    trace.cache_statistics = cache.statistics(feasible_count)

    logger.info(f"Optimization finished: {trace.iterations} iterations, d* value={trace.design.value}, "
                f"best along route={trace.best_along_route.value}, "
                f"distinct evaluations={trace.cache_statistics.distinct_evaluations}")
    if run_logger is not None:
        run_logger.log_run_end({
            "iterations": trace.iterations,
            "converged": trace.converged,
            "design_value": trace.design.value,
            "best_along_route": trace.best_along_route.value
        })
    return trace


def uniform_baseline_best(objective: Any, constraint: ConstraintSpec, n: int,
                          rng: Union[RandomStream, int], direction: str = "maximize") -> BestDesign:
    """Best of n designs drawn from the p = 0.5 policy under the constraint."""
    stream = rng if isinstance(rng, RandomStream) else RandomStream(rng)
    dimension = int(objective.dimension)
    model = policy_model(SuccessProbabilities(np.full(dimension, 0.5)), constraint)
    batch = sample_model(model, n, stream)
    values, _ = EvaluationCache(objective).evaluate_batch(batch.designs)
    return best_of(batch.designs, values, direction)
