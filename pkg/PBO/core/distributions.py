"""
Probability Models

This module provides the Poisson-binomial (PB), conditional Bernoulli (CB) and
generalized conditional Bernoulli (GCB) models over binary designs, including
the closed forms for degenerate success probabilities (p_i in {0, 1}).

Degenerate trials are handled by reduction: with I = {i : p_i = 1},
O = {i : p_i = 0} and A the remaining indices, a budget z on the full design is
a budget z - |I| on the trials in A.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, Optional, Sequence

import numpy as np

from PBO.config.optimizer_config import DEFAULT_ENUMERATION_CAP, DEGENERACY_EPSILON
from PBO.core.combinatorics import (
    inclusion_first,
    inclusion_second,
    inclusion_second_matrix,
    r_log_gradient,
    r_values,
    snap_probabilities,
    weights_from_probs
)
from PBO.exceptions import (
    DomainException,
    EnumerationCapException,
    InfeasibleConstraintException
)

logger = logging.getLogger(__name__)


class SuccessProbabilities:
    """
    Success probabilities p in [0, 1]^N of a Bernoulli policy.

    Entries within ``epsilon`` of a boundary are snapped onto it, after which
    the degenerate sets are classified by exact equality.
    """

    def __init__(self, values, epsilon: float = DEGENERACY_EPSILON):
        self.epsilon = epsilon
        self.values = snap_probabilities(values, epsilon)
        self.values.setflags(write=False)
        self.weights = weights_from_probs(self.values, epsilon)

    @property
    def dimension(self) -> int:
        return int(self.values.size)

    @property
    def free(self) -> np.ndarray:
        return self.weights.indices

    @property
    def ones(self) -> np.ndarray:
        return self.weights.ones

    @property
    def zeros(self) -> np.ndarray:
        return self.weights.zeros

    @property
    def fully_degenerate(self) -> bool:
        return self.free.size == 0

    def feasible_budget(self, z: int) -> bool:
        return self.ones.size <= z <= self.dimension - self.zeros.size

    def __len__(self) -> int:
        return self.dimension

    def __repr__(self) -> str:
        return (f"SuccessProbabilities(N={self.dimension}, free={self.free.size}, "
                f"ones={self.ones.size}, zeros={self.zeros.size})")


@dataclass
class CBMoments:
    mean: np.ndarray
    covariance: np.ndarray
    score_variance: float


def as_probabilities(p) -> SuccessProbabilities:
    return p if isinstance(p, SuccessProbabilities) else SuccessProbabilities(p)


def validate_design(d, dimension: int) -> np.ndarray:
    """Return d as an int8 vector, rejecting non-binary entries or a wrong length."""
    design = np.asarray(d)
    if design.ndim != 1 or design.size != dimension:
        raise DomainException(f"design must be a vector of length {dimension}, got shape {design.shape}")
    if not np.all((design == 0) | (design == 1)):
        raise DomainException("design entries must be 0 or 1")
    return design.astype(np.int8)


def validate_designs(designs, dimension: int) -> np.ndarray:
    batch = np.asarray(designs)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.ndim != 2 or batch.shape[1] != dimension:
        raise DomainException(f"designs must have {dimension} columns, got shape {batch.shape}")
    if not np.all((batch == 0) | (batch == 1)):
        raise DomainException("design entries must be 0 or 1")
    return batch.astype(np.int8)


def _check_enumerable(dimension: int, cap: int) -> None:
    if dimension > cap:
        raise EnumerationCapException(f"dimension {dimension} exceeds the enumeration cap {cap}")


class PBModel:
    """Poisson-binomial distribution of the number of successes z = ||d||_0."""

    def __init__(self, probs):
        self.probs = as_probabilities(probs)
        weights = self.probs.weights
        free_p = self.probs.values[self.probs.free]
        self._n_ones = int(self.probs.ones.size)
        self._n_free = len(weights)
        self._log_complement = float(np.sum(np.log1p(-free_p)))
        self._log_r = r_values(self._n_free, weights, log=True)

    @property
    def dimension(self) -> int:
        return self.probs.dimension

    def _r(self, n: int) -> float:
        if n < 0 or n > self._n_free:
            return 0.0
        return float(np.exp(self._log_r[n]))

    def log_pmf(self, z: int) -> float:
        reduced = z - self._n_ones
        if reduced < 0 or reduced > self._n_free:
            return -np.inf
        return float(self._log_r[reduced] + self._log_complement)

    def pmf(self, z: int) -> float:
        """P(||d||_0 = z) = R(z - |I|, A) * prod_{j in A} (1 - p_j)."""
        return float(np.exp(self.log_pmf(z)))

    def pmf_table(self) -> np.ndarray:
        return np.array([self.pmf(z) for z in range(self.dimension + 1)])

    def grad(self, z: int, route: str = "tabulation") -> np.ndarray:
        """
        Gradient of P(z) with respect to p.

        Non-degenerate coordinates use either the tabulated gradient of log R
        ('tabulation') or the first-order inclusion probabilities ('inclusion').
        A degenerate coordinate i gets P_{-i}(z - 1) - P_{-i}(z), the PB mass
        of the remaining trials.
        """
        if route not in ("tabulation", "inclusion"):
            raise DomainException(f"unknown gradient route: {route}")
        gradient = np.zeros(self.dimension)
        reduced = z - self._n_ones
        P = self.pmf(z)
        if P > 0.0 and self._n_free:
            w = self.probs.weights.w
            if route == "tabulation":
                dlogR = r_log_gradient(reduced, self.probs.weights)
            else:
                dlogR = inclusion_first(reduced, self.probs.weights).first_order / w
            gradient[self.probs.free] = P * ((1.0 + w) ** 2 * dlogR - (1.0 + w))
        complement = np.exp(self._log_complement)
        gradient[self.probs.ones] = (self._r(reduced) - self._r(reduced + 1)) * complement
        gradient[self.probs.zeros] = (self._r(reduced - 1) - self._r(reduced)) * complement
        return gradient

    def log_grad(self, z: int, route: str = "tabulation") -> np.ndarray:
        P = self.pmf(z)
        if P <= 0.0:
            raise DomainException(f"log-gradient undefined: P(z={z}) = 0")
        return self.grad(z, route) / P

    def mean(self) -> float:
        return float(np.sum(self.probs.values))

    def variance(self) -> float:
        p = self.probs.values
        return float(np.sum(p * (1.0 - p)))


class CBModel:
    """
    Conditional Bernoulli distribution of d given ||d||_0 = z.

    Construction fails with InfeasibleConstraintException when the conditioning
    event has zero probability under the policy.
    """

    def __init__(self, probs, budget: int, cap: int = DEFAULT_ENUMERATION_CAP):
        self.probs = as_probabilities(probs)
        self.budget = int(budget)
        self.cap = cap
        self.reduced_budget = self.budget - int(self.probs.ones.size)
        n_free = len(self.probs.weights)
        if self.reduced_budget < 0 or self.reduced_budget > n_free:
            raise InfeasibleConstraintException(
                f"budget {self.budget} infeasible with {self.probs.ones.size} trials fixed at 1 "
                f"and {self.probs.zeros.size} fixed at 0 (N={self.probs.dimension})"
            )
        self._n_free = n_free
        self._log_w = np.log(self.probs.weights.w)
        self._log_r = r_values(min(self.reduced_budget + 1, n_free), self.probs.weights, log=True)
        self._position = {int(index): pos for pos, index in enumerate(self.probs.free)}
        self._pi: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return self.probs.dimension

    @property
    def log_normalizer(self) -> float:
        return float(self._log_r[self.reduced_budget])

    @property
    def inclusion(self) -> np.ndarray:
        """First-order inclusion probabilities of the non-degenerate trials."""
        if self._pi is None:
            self._pi = inclusion_first(self.reduced_budget, self.probs.weights).first_order
        return self._pi

    @property
    def mean(self) -> np.ndarray:
        mean = self.probs.values.copy()
        mean[self.probs.free] = self.inclusion
        return mean

    def _log_ratio(self, offset: int) -> float:
        """log R(z' + offset, A) - log R(z', A)."""
        n = self.reduced_budget + offset
        if n < 0 or n > self._n_free:
            return -np.inf
        return float(self._log_r[n] - self.log_normalizer)

    def _mismatches(self, d: np.ndarray) -> np.ndarray:
        ones, zeros = self.probs.ones, self.probs.zeros
        return np.concatenate([ones[d[ones] == 0], zeros[d[zeros] == 1]])

    def log_pmf(self, d) -> float:
        d = validate_design(d, self.dimension)
        if self._mismatches(d).size:
            return -np.inf
        free_d = d[self.probs.free]
        if int(free_d.sum()) != self.reduced_budget:
            return -np.inf
        return float(np.dot(free_d, self._log_w) - self.log_normalizer)

    def pmf(self, d) -> float:
        """P(d | z) = prod_{j in A} w_j^{d_j} / R(z', A) for designs consistent with p."""
        return float(np.exp(self.log_pmf(d)))

    def pmf_grad(self, d) -> np.ndarray:
        """
        Gradient of P(d | z) with respect to p, including zero-probability designs.

        A design that contradicts exactly one degenerate coordinate i has a
        nonzero derivative in that coordinate: prod w^d / R(z', A) for p_i = 0
        (when sum_A d = z' - 1) and minus that for p_i = 1 (when sum_A d = z' + 1).
        """
        d = validate_design(d, self.dimension)
        gradient = np.zeros(self.dimension)
        mismatches = self._mismatches(d)
        free_d = d[self.probs.free]
        count = int(free_d.sum())
        if mismatches.size == 0:
            if count == self.reduced_budget:
                gradient = self.pmf(d) * self._score(free_d[None, :])[0]
            return gradient
        if mismatches.size > 1:
            return gradient
        i = int(mismatches[0])
        value = np.exp(np.dot(free_d, self._log_w) - self.log_normalizer)
        if d[i] == 1 and count == self.reduced_budget - 1:
            gradient[i] = value
        elif d[i] == 0 and count == self.reduced_budget + 1:
            gradient[i] = -value
        return gradient

    def _score(self, free_designs: np.ndarray) -> np.ndarray:
        """Score rows of designs already known to have positive probability."""
        w = self.probs.weights.w
        scores = np.zeros((free_designs.shape[0], self.dimension))
        scores[:, self.probs.free] = ((1.0 + w) ** 2 / w) * (free_designs - self.inclusion)
        scores[:, self.probs.zeros] = -np.exp(self._log_ratio(-1))
        scores[:, self.probs.ones] = np.exp(self._log_ratio(1))
        return scores

    def log_grad(self, d) -> np.ndarray:
        """
        Gradient of log P(d | z) with respect to p.

        Non-degenerate coordinates give ((1 + w_i)^2 / w_i)(d_i - pi_i); a trial
        fixed at 0 gives -R(z'-1, A)/R(z', A) and one fixed at 1 gives
        R(z'+1, A)/R(z', A).

        Raises:
            DomainException: If P(d | z) = 0
        """
        return self.log_grad_batch(np.asarray(d)[None, :])[0]

    def log_grad_batch(self, designs) -> np.ndarray:
        batch = validate_designs(designs, self.dimension)
        ones, zeros = self.probs.ones, self.probs.zeros
        free = batch[:, self.probs.free]
        consistent = (np.all(batch[:, ones] == 1, axis=1) & np.all(batch[:, zeros] == 0, axis=1)
                      & (free.sum(axis=1) == self.reduced_budget))
        if not np.all(consistent):
            bad = int(np.flatnonzero(~consistent)[0])
            raise DomainException(f"log-gradient undefined for design {bad}: P(d | z={self.budget}) = 0")
        return self._score(free)

    def hessian_entry(self, d, i: int, j: int, kind: str = "log") -> float:
        """
        Second derivative of log P(d | z) ('log') or P(d | z) ('pmf') in p_i, p_j.

        Both indices must refer to non-degenerate trials.
        """
        if kind not in ("log", "pmf"):
            raise DomainException(f"unknown Hessian kind: {kind}")
        if i not in self._position or j not in self._position:
            raise DomainException(f"Hessian entry ({i}, {j}) involves a degenerate trial")
        d = validate_design(d, self.dimension)
        a, b = self._position[i], self._position[j]
        w = self.probs.weights.w
        pi = self.inclusion
        if a == b:
            c = (1.0 + w[a]) ** 4 / w[a] ** 2
            log_entry = c * ((w[a] - 1.0) / (1.0 + w[a]) * (d[i] - pi[a]) + (pi[a] ** 2 - pi[a]))
        else:
            pij = self._pair_inclusion(a, b)
            c = (1.0 + w[a]) ** 2 * (1.0 + w[b]) ** 2 / (w[a] * w[b])
            log_entry = c * (pi[a] * pi[b] - pij)
        if kind == "log":
            return float(log_entry)
        P = self.pmf(d)
        if P == 0.0:
            return 0.0
        score = self.log_grad(d)
        return float(P * (log_entry + score[i] * score[j]))

    def _pair_inclusion(self, a: int, b: int) -> float:
        return inclusion_second(self.reduced_budget, self.probs.weights, a, b)

    def score_variance(self) -> float:
        """sum_{i in A} ((1 + w_i)^4 / w_i^2)(pi_i - pi_i^2), the total variance of the score."""
        w = self.probs.weights.w
        pi = self.inclusion
        return float(np.sum((1.0 + w) ** 4 / w ** 2 * (pi - pi ** 2)))

    def moments(self) -> CBMoments:
        pi = self.inclusion
        free = self.probs.free
        covariance = np.zeros((self.dimension, self.dimension))
        block = inclusion_second_matrix(self.reduced_budget, self.probs.weights) - np.outer(pi, pi)
        block[np.diag_indices(pi.size)] = pi - pi ** 2
        covariance[np.ix_(free, free)] = block
        return CBMoments(mean=self.mean, covariance=covariance, score_variance=self.score_variance())

    def support(self) -> Iterator[np.ndarray]:
        """All designs with positive probability, in lexicographic order of the chosen trials."""
        _check_enumerable(self.dimension, self.cap)
        base = np.zeros(self.dimension, dtype=np.int8)
        base[self.probs.ones] = 1
        for chosen in itertools.combinations(self.probs.free, self.reduced_budget):
            design = base.copy()
            design[list(chosen)] = 1
            yield design

    def expectation(self, f: Callable[[np.ndarray], float]) -> float:
        return float(sum(f(d) * self.pmf(d) for d in self.support()))

    def variance(self, f: Callable[[np.ndarray], float]) -> float:
        values = [(f(d), self.pmf(d)) for d in self.support()]
        mean = sum(v * P for v, P in values)
        return float(sum((v - mean) ** 2 * P for v, P in values))


class GCBModel:
    """
    Generalized conditional Bernoulli distribution of d given ||d||_0 in Z.

    The model is the mixture of the CB models over Z weighted by the PB
    probabilities P(z), renormalized over Z.
    """

    def __init__(self, probs, budget_set: Iterable[int], cap: int = DEFAULT_ENUMERATION_CAP):
        self.probs = as_probabilities(probs)
        self.budget_set = sorted({int(z) for z in budget_set})
        self.cap = cap
        if not self.budget_set:
            raise DomainException("budget set must be nonempty")
        if self.budget_set[0] < 0 or self.budget_set[-1] > self.dimension:
            raise DomainException(f"budget set {self.budget_set} outside [0, {self.dimension}]")
        self.pb = PBModel(self.probs)
        self.budget_weights = np.array([self.pb.pmf(z) for z in self.budget_set])
        self.normalizer = float(self.budget_weights.sum())
        if self.normalizer <= 0.0:
            raise InfeasibleConstraintException(
                f"every budget in {self.budget_set} has zero probability under the policy"
            )
        self.components: Dict[int, CBModel] = {
            z: CBModel(self.probs, z, cap)
            for z, weight in zip(self.budget_set, self.budget_weights) if weight > 0.0
        }

    @property
    def dimension(self) -> int:
        return self.probs.dimension

    def pmf_table(self) -> Dict[int, float]:
        """Mixture weight P(z) / sum_{z' in Z} P(z') of every budget in Z."""
        return {z: float(weight / self.normalizer) for z, weight in zip(self.budget_set, self.budget_weights)}

    def pmf(self, d) -> float:
        d = validate_design(d, self.dimension)
        total = 0.0
        for z, weight in zip(self.budget_set, self.budget_weights):
            if z in self.components:
                total += self.components[z].pmf(d) * weight
        return total / self.normalizer

    def _normalizer_grad(self, memo: Dict[int, np.ndarray]) -> np.ndarray:
        for z in self.budget_set:
            if z not in memo:
                memo[z] = self.pb.grad(z)
        return np.sum([memo[z] for z in self.budget_set], axis=0)

    def log_grad(self, d) -> np.ndarray:
        """
        Gradient of log P(d | Z) with respect to p.

        Only the component z_d = ||d||_0 carries mass at d, so the gradient is
        grad log P(z_d) + grad log P(d | z_d) - grad sum_Z P(z) / sum_Z P(z).

        Raises:
            DomainException: If P(d | Z) = 0
        """
        return self.log_grad_batch(np.asarray(d)[None, :])[0]

    def log_grad_batch(self, designs) -> np.ndarray:
        batch = validate_designs(designs, self.dimension)
        memo: Dict[int, np.ndarray] = {}
        shared = self._normalizer_grad(memo) / self.normalizer
        counts = batch.sum(axis=1)
        scores = np.zeros(batch.shape, dtype=float)
        for z in np.unique(counts):
            z = int(z)
            if z not in self.components:
                raise DomainException(f"log-gradient undefined: P(||d||_0 = {z} | Z) = 0")
            rows = np.flatnonzero(counts == z)
            pb_score = memo[z] / self.pb.pmf(z)
            scores[rows] = self.components[z].log_grad_batch(batch[rows]) + pb_score - shared
        return scores

    def pmf_grad(self, d) -> np.ndarray:
        """Gradient of P(d | Z); zero at designs outside the support."""
        P = self.pmf(d)
        if P == 0.0:
            return np.zeros(self.dimension)
        return P * self.log_grad(d)

    def mixture_score_variance(self) -> float:
        """PB-weighted average of the component score variances."""
        total = sum(self.components[z].score_variance() * weight
                    for z, weight in zip(self.budget_set, self.budget_weights) if z in self.components)
        return float(total / self.normalizer)

    def support(self) -> Iterator[np.ndarray]:
        for z in self.budget_set:
            if z in self.components:
                yield from self.components[z].support()

    def expectation(self, f: Callable[[np.ndarray], float]) -> float:
        """E[f] = sum_z P(z) E[f | z] / sum_z P(z)."""
        table = self.pmf_table()
        return float(sum(table[z] * cb.expectation(f) for z, cb in self.components.items()))

    def variance(self, f: Callable[[np.ndarray], float]) -> float:
        """Law of total variance over the mixture components."""
        table = self.pmf_table()
        mean = self.expectation(f)
        second = 0.0
        for z, cb in self.components.items():
            component_mean = cb.expectation(f)
            second += table[z] * (cb.variance(f) + component_mean ** 2)
        return float(second - mean ** 2)


def pb_pmf(model: PBModel, z: int) -> float:
    return model.pmf(z)


def pb_grad(model: PBModel, z: int, route: str = "tabulation") -> np.ndarray:
    return model.grad(z, route)


def pb_log_grad(model: PBModel, z: int, route: str = "tabulation") -> np.ndarray:
    return model.log_grad(z, route)


def pb_mean(model: PBModel) -> float:
    return model.mean()


def pb_variance(model: PBModel) -> float:
    return model.variance()


def cb_pmf(model: CBModel, d) -> float:
    return model.pmf(d)


def cb_pmf_grad(model: CBModel, d) -> np.ndarray:
    return model.pmf_grad(d)


def cb_log_grad(model: CBModel, d) -> np.ndarray:
    return model.log_grad(d)


def cb_log_grad_batch(model: CBModel, designs) -> np.ndarray:
    return model.log_grad_batch(designs)


def cb_hessian_entry(model: CBModel, d, i: int, j: int, kind: str = "log") -> float:
    return model.hessian_entry(d, i, j, kind)


def cb_moments(model: CBModel) -> CBMoments:
    return model.moments()


def gcb_pmf(model: GCBModel, d) -> float:
    return model.pmf(d)


def gcb_log_grad(model: GCBModel, d) -> np.ndarray:
    return model.log_grad(d)


def gcb_log_grad_batch(model: GCBModel, designs) -> np.ndarray:
    return model.log_grad_batch(designs)


def gcb_pmf_table(model: GCBModel) -> Dict[int, float]:
    return model.pmf_table()


def gcb_expectation(model: GCBModel, f: Callable[[np.ndarray], float]) -> float:
    return model.expectation(f)


def gcb_variance(model: GCBModel, f: Callable[[np.ndarray], float]) -> float:
    return model.variance(f)


def bernoulli_pmf(p, d) -> float:
    """Independent-Bernoulli probability prod p_i^{d_i} (1 - p_i)^{1 - d_i}."""
    probs = as_probabilities(p)
    d = validate_design(d, probs.dimension)
    return float(np.prod(np.where(d == 1, probs.values, 1.0 - probs.values)))


def bernoulli_log_grad(p, d) -> np.ndarray:
    """Score d_i / p_i - (1 - d_i) / (1 - p_i) of the independent-Bernoulli policy."""
    probs = as_probabilities(p)
    d = validate_design(d, probs.dimension)
    if bernoulli_pmf(probs, d) == 0.0:
        raise DomainException("log-gradient undefined: design has zero probability")
    values = probs.values
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(d == 1, 1.0 / values, -1.0 / (1.0 - values))


def exact_expectation(model, objective: Callable[[np.ndarray], float]) -> float:
    """sum_d J(d) P(d) over the model's support."""
    return float(sum(objective(d) * model.pmf(d) for d in model.support()))


def exact_gradient(model, objective: Callable[[np.ndarray], float]) -> np.ndarray:
    """sum_d J(d) grad P(d) over the model's support."""
    gradient = np.zeros(model.dimension)
    for d in model.support():
        gradient += objective(d) * model.pmf_grad(d)
    return gradient


def build_model(probs, budgets: Sequence[int], cap: int = DEFAULT_ENUMERATION_CAP):
    """CB model for a single budget, GCB model otherwise."""
    budgets = list(budgets)
    if len(budgets) == 1:
        return CBModel(probs, budgets[0], cap)
    return GCBModel(probs, budgets, cap)
