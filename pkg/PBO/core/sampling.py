"""
Sampling

This module provides exact samplers for the Poisson-binomial, conditional
Bernoulli and generalized conditional Bernoulli models, and the seedable random
stream they draw from.

Random numbers come from numpy's PCG64 bit generator seeded through a
SeedSequence; ``RandomStream.spawn`` derives independent substreams from
(seed, key) so results do not depend on evaluation order or thread count.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from PBO.core.distributions import CBModel, GCBModel, PBModel, as_probabilities

logger = logging.getLogger(__name__)


class RandomStream:
    """Seeded PCG64 generator with deterministic substreams."""

    ALGORITHM = "PCG64"

    def __init__(self, seed: int, spawn_key: tuple = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(spawn_key)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, key: int) -> "RandomStream":
        return RandomStream(self.seed, self.spawn_key + (int(key),))

    def random(self, size=None):
        return self.generator.random(size)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, spawn_key={self.spawn_key}, algorithm={self.ALGORITHM})"


def canonical_key(d) -> int:
    """Unique integer index 1 + sum_i d_i 2^i of a binary design (0-based i)."""
    bits = np.asarray(d, dtype=np.uint8).ravel()
    return 1 + int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def canonical_keys(designs: np.ndarray) -> List[int]:
    return [canonical_key(d) for d in np.asarray(designs)]


@dataclass
class SampleBatch:
    designs: np.ndarray
    objective_values: Optional[np.ndarray] = None
    budgets: List[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.designs.shape[0])

    def keys(self) -> List[int]:
        return canonical_keys(self.designs)

    def with_values(self, values) -> "SampleBatch":
        return SampleBatch(designs=self.designs, objective_values=np.asarray(values, dtype=float),
                           budgets=self.budgets)

    def satisfies(self, budgets) -> bool:
        allowed = np.asarray(sorted(budgets))
        return bool(np.all(np.isin(self.designs.sum(axis=1), allowed)))


class QMatrix:
    """
    Tail-sum probabilities q(i, j) = P(sum_{m >= j} d_m = i - 1) over the
    non-degenerate trials of a CB model, for i = 1..z'+1.

    Stored 0-based and column-major with a sentinel column for the empty tail:
    ``values[a, j]`` is the probability that trials j.. sum to a.
    """

    def __init__(self, probabilities: np.ndarray, budget: int):
        p = np.asarray(probabilities, dtype=float)
        m = p.size
        values = np.zeros((budget + 1, m + 1), order="F")
        values[0, m] = 1.0
        for j in range(m - 1, -1, -1):
            values[:, j] = (1.0 - p[j]) * values[:, j + 1]
            values[1:, j] += p[j] * values[:-1, j + 1]
        self.values = values
        self.probabilities = p
        self.budget = budget

    def value(self, i: int, j: int) -> float:
        """q(i, j) with 1-based i and j; j = m + 1 is the empty tail."""
        if i < 1 or i > self.budget + 1:
            return 0.0
        return float(self.values[i - 1, j - 1])

    @property
    def total(self) -> float:
        """q(z'+1, 1), the probability that the trials sum to z'."""
        return float(self.values[self.budget, 0])


def build_q(model: CBModel) -> QMatrix:
    """Build the q-matrix of a feasible CB model over its non-degenerate trials."""
    probs = model.probs
    return QMatrix(probs.values[probs.free], model.reduced_budget)


def bernoulli_sample(p, n: int, rng: RandomStream) -> SampleBatch:
    probs = as_probabilities(p)
    designs = (rng.random((n, probs.dimension)) < probs.values).astype(np.int8)
    return SampleBatch(designs=designs)


def pb_sample(model: PBModel, n: int, rng: RandomStream) -> np.ndarray:
    """Draw n counts z with probabilities P(z) by cumulative-weight inversion."""
    return _invert_cumulative(model.pmf_table(), n, rng)


def _invert_cumulative(weights: np.ndarray, n: int, rng: RandomStream) -> np.ndarray:
    cumulative = np.cumsum(weights)
    u = rng.random(n) * cumulative[-1]
    positions = np.searchsorted(cumulative, u, side="right")
    # zero-weight outcomes occupy no interval of the cumulative sum
    return np.minimum(positions, weights.size - 1)


def cb_sample(model: CBModel, n: int, rng: RandomStream) -> SampleBatch:
    """
    Draw n exact CB samples by sequential decomposition.

    Trial j is included with probability q(r - 1, j + 1) p_j / q(r, j), where
    r is the number of successes still to place. Degenerate trials are fixed
    before the sweep.
    """
    probs = model.probs
    q = build_q(model)
    p = q.probabilities
    m = p.size
    # All n designs advance through the free trials together
    remaining = np.full(n, model.reduced_budget, dtype=np.int64)
    free_designs = np.zeros((n, m), dtype=np.int8)
    u = rng.random((n, m))
    for j in range(m):
        numerator = np.where(remaining > 0, q.values[np.maximum(remaining - 1, 0), j + 1] * p[j], 0.0)
        denominator = q.values[remaining, j]
        with np.errstate(divide="ignore", invalid="ignore"):
            inclusion = np.where(denominator > 0.0, numerator / denominator, 0.0)
        take = u[:, j] < inclusion
        free_designs[take, j] = 1
        remaining -= take

    # Scatter the free trials back between the fixed ones
    designs = np.zeros((n, probs.dimension), dtype=np.int8)
    designs[:, probs.ones] = 1
    designs[:, probs.free] = free_designs
    return SampleBatch(designs=designs, budgets=[model.budget])


def gcb_sample(model: GCBModel, n: int, rng: RandomStream) -> SampleBatch:
    """
    Draw n GCB samples in two stages: budgets z by their PB weights, then CB
    samples for every distinct z with the drawn multiplicity.

    Samples stay in the order of the first-stage draws.
    """
    drawn = np.asarray(model.budget_set)[_invert_cumulative(model.budget_weights, n, rng)]
    designs = np.zeros((n, model.dimension), dtype=np.int8)
    for z in np.unique(drawn):
        rows = np.flatnonzero(drawn == z)
        designs[rows] = cb_sample(model.components[int(z)], rows.size, rng).designs
    logger.debug(f"GCB stage one drew budgets {dict(zip(*np.unique(drawn, return_counts=True)))}")
    return SampleBatch(designs=designs, budgets=list(model.budget_set))


def sample_model(model, n: int, rng: RandomStream) -> SampleBatch:
    if isinstance(model, CBModel):
        return cb_sample(model, n, rng)
    return gcb_sample(model, n, rng)
