"""
Combinatorics

This module provides the Bernoulli weights of a vector of success
probabilities, the R-function (the sum over all k-subsets of an index set of
the products of their weights) with its tabulated evaluation and derivatives,
and first- and second-order inclusion probabilities with their derivatives.

Set differences such as R(k, A\\{i}) are evaluated by tabulating over the
reduced index sequence. Zeroing the weight of a removed index produces exactly
that table, which lets all reduced tables be swept at once as one array.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from PBO.config.optimizer_config import (
    DEGENERACY_EPSILON,
    LOG_SPACE_MIN_DIMENSION,
    LOG_SPACE_WEIGHT_RATIO
)
from PBO.exceptions import DomainException, OverflowException

logger = logging.getLogger(__name__)

# Upper bound on the weight entries tabulated at once for leave-two-out tables
PAIR_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class BernoulliWeights:
    """Odds w_i = p_i / (1 - p_i) of the non-degenerate trials.

    ``indices`` holds the original trial index of every weight position;
    ``ones`` and ``zeros`` hold the trials fixed at p_i = 1 and p_i = 0.
    """
    w: np.ndarray
    indices: np.ndarray
    ones: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    zeros: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @classmethod
    def from_values(cls, w) -> "BernoulliWeights":
        """Wrap raw weights, each position mapping to itself."""
        values = np.asarray(w, dtype=float).ravel()
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DomainException("Bernoulli weights must be finite and strictly positive")
        return cls(w=values, indices=np.arange(values.size))

    @property
    def index_map(self) -> Dict[int, int]:
        return {position: int(index) for position, index in enumerate(self.indices)}

    @property
    def log_w(self) -> np.ndarray:
        return np.log(self.w)

    @property
    def log_space(self) -> bool:
        return use_log_space(self.w)

    def __len__(self) -> int:
        return int(self.w.size)


@dataclass
class RTable:
    """Full tabulation c(n, j) = R(n, first j weights) for n = 0..k, j = 0..|A|."""
    values: np.ndarray
    gradients: Optional[np.ndarray] = None
    log_space: bool = False

    def value(self, n: int, j: int) -> float:
        if n < 0 or n >= self.values.shape[0]:
            return 0.0
        cell = self.values[n, j]
        return float(np.exp(cell)) if self.log_space else float(cell)

    def gradient(self, n: int, j: int) -> np.ndarray:
        if self.gradients is None:
            raise DomainException("table was built without gradients")
        return self.gradients[n, j]


@dataclass
class InclusionProbabilities:
    first_order: np.ndarray
    budget: int

    @property
    def total(self) -> float:
        return float(np.sum(self.first_order))


@dataclass
class InclusionDerivatives:
    """Derivatives of the second-order inclusion probabilities.

    ``wrt_first[i, j]`` is the derivative of pi_ij in the i-th coordinate,
    ``wrt_second[i, j]`` its derivative in the j-th coordinate and
    ``mixed[i, j]`` the mixed second derivative. Diagonals are zero.
    """
    wrt_first: np.ndarray
    wrt_second: np.ndarray
    mixed: np.ndarray


WeightsLike = Union[BernoulliWeights, np.ndarray, list, tuple]


def snap_probabilities(p, epsilon: float = DEGENERACY_EPSILON) -> np.ndarray:
    """Copy p, rejecting values outside [0, 1] and snapping near-boundary entries."""
    values = np.array(getattr(p, "values", p), dtype=float).ravel()
    if not np.all(np.isfinite(values)):
        raise DomainException("success probabilities must be finite")
    if values.size and (values.min() < -epsilon or values.max() > 1.0 + epsilon):
        raise DomainException("success probabilities must lie in [0, 1]")
    near_zero = values <= epsilon
    near_one = values >= 1.0 - epsilon
    snapped = (near_zero & (values != 0.0)) | (near_one & (values != 1.0))
    if np.any(snapped):
        logger.debug(f"Snapped {int(np.sum(snapped))} near-degenerate probabilities onto the boundary")
    values[near_zero] = 0.0
    values[near_one] = 1.0
    return values


def weights_from_probs(p, epsilon: float = DEGENERACY_EPSILON) -> BernoulliWeights:
    """
    Compute the Bernoulli weights of the non-degenerate success probabilities.

    Args:
        p: Success probabilities (array-like or SuccessProbabilities)
        epsilon: Snapping distance for degenerate entries

    Returns:
        BernoulliWeights over the indices with 0 < p_i < 1
    """
    values = snap_probabilities(p, epsilon)
    free = np.flatnonzero((values > 0.0) & (values < 1.0))
    w = values[free] / (1.0 - values[free])
    return BernoulliWeights(
        w=w,
        indices=free,
        ones=np.flatnonzero(values == 1.0),
        zeros=np.flatnonzero(values == 0.0)
    )


def weight_jacobian(p, epsilon: float = DEGENERACY_EPSILON) -> np.ndarray:
    """Diagonal Jacobian dw/dp = diag((1 + w)^2) over the non-degenerate entries."""
    weights = weights_from_probs(p, epsilon)
    return np.diag((1.0 + weights.w) ** 2)


def use_log_space(w) -> bool:
    w = np.asarray(w, dtype=float)
    if w.size > LOG_SPACE_MIN_DIMENSION:
        return True
    positive = w[w > 0]
    if positive.size == 0:
        return False
    return bool(positive.max() / positive.min() > LOG_SPACE_WEIGHT_RATIO)


def _weight_vector(weights: WeightsLike) -> np.ndarray:
    if isinstance(weights, BernoulliWeights):
        return weights.w
    return np.asarray(weights, dtype=float).ravel()


def _resolve_log_space(w: np.ndarray, log_space: Optional[bool]) -> bool:
    return use_log_space(w) if log_space is None else bool(log_space)


def _tabulate_last_column(k: int, W: np.ndarray, log_space: bool) -> np.ndarray:
    """
    Sweep the two-term recurrence row by row for a batch of weight vectors.

    Only the previous row c(n-1, .) is kept. Row n is the running sum of
    w_j * c(n-1, j-1), so each row costs one cumulative sum.

    Args:
        k: Largest count to tabulate
        W: Weights, shape (batch, m); zero entries remove their index
        log_space: Tabulate log c(n, j) instead of c(n, j)

    Returns:
        Array of shape (batch, k + 1) holding R(n, A) (or its log) for n = 0..k
    """
    batch, m = W.shape
    empty = -np.inf if log_space else 0.0
    # Counts above m stay at R = 0
    out = np.full((batch, k + 1), empty)
    out[:, 0] = 0.0 if log_space else 1.0

    # Row n = 0: c(0, j) = 1 for every prefix j
    if log_space:
        with np.errstate(divide="ignore"):
            log_W = np.log(W)
        row = np.zeros((batch, m + 1))
    else:
        row = np.ones((batch, m + 1))

    with np.errstate(invalid="ignore"):
        for n in range(1, min(k, m) + 1):
            # c(n, 0) = 0, then c(n, j) = c(n, j-1) + w_j c(n-1, j-1)
            nxt = np.full((batch, m + 1), empty)
            if log_space:
                nxt[:, 1:] = np.logaddexp.accumulate(log_W + row[:, :-1], axis=1)
            else:
                nxt[:, 1:] = np.cumsum(W * row[:, :-1], axis=1)
            row = nxt
            out[:, n] = row[:, -1]
    return out


def r_values(k_max: int, weights: WeightsLike, log_space: Optional[bool] = None,
             log: bool = False) -> np.ndarray:
    """R(n, A) for every n = 0..k_max, from a single tabulation sweep."""
    if k_max < 0:
        return np.empty(0)
    w = _weight_vector(weights)
    in_log = _resolve_log_space(w, log_space)
    column = _tabulate_last_column(k_max, w[None, :], in_log)[0]
    if log == in_log:
        return column
    if log:
        with np.errstate(divide="ignore"):
            return np.log(column)
    return np.exp(column)


def log_r_value(k: int, weights: WeightsLike, log_space: Optional[bool] = None) -> float:
    if k < 0 or k > len(_weight_vector(weights)):
        return -np.inf
    return float(r_values(k, weights, log_space, log=True)[k])


def r_value(k: int, weights: WeightsLike, log_space: Optional[bool] = None) -> float:
    """
    Evaluate R(k, A) by the two-term tabulation.

    Args:
        k: Subset size
        weights: Bernoulli weights over A

    Returns:
        R(k, A); 1 for k = 0 and 0 for k < 0 or k > |A|
    """
    if k < 0 or k > len(_weight_vector(weights)):
        return 0.0
    return float(r_values(k, weights, log_space)[k])


def r_value_power_sum(k: int, weights: WeightsLike) -> float:
    """
    Evaluate R(k, A) with the power-sum recurrence.

    R(k) = (1/k) * sum_{i=1..k} (-1)^(i+1) T(i) R(k-i), T(i) = sum_j w_j^i.
    Numerically unstable for large sets; kept as a cross-check only.

    Raises:
        OverflowException: If a power sum leaves the floating point range
    """
    w = _weight_vector(weights)
    if k < 0 or k > w.size:
        return 0.0
    with np.errstate(over="ignore"):
        T = np.array([np.sum(w ** i) for i in range(1, k + 1)])
    if not np.all(np.isfinite(T)):
        raise OverflowException(f"power sums overflow for k={k} over {w.size} weights")
    R = np.zeros(k + 1)
    R[0] = 1.0
    for n in range(1, k + 1):
        signs = (-1.0) ** np.arange(2, n + 2)
        R[n] = np.dot(signs * T[:n], R[n - 1::-1]) / n
    if not np.isfinite(R[k]):
        raise OverflowException(f"power-sum recurrence overflowed at k={k}")
    return float(R[k])


def r_table(k: int, weights: WeightsLike, with_gradients: bool = False,
            log_space: Optional[bool] = None) -> RTable:
    """Build the full table c(n, j) for n = 0..k, optionally with co-tabulated gradients."""
    w = _weight_vector(weights)
    m = w.size
    in_log = _resolve_log_space(w, log_space) and not with_gradients
    if in_log:
        values = np.full((k + 1, m + 1), -np.inf)
        values[0, :] = 0.0
        log_w = np.log(w)
        for n in range(1, k + 1):
            values[n, 1:] = np.logaddexp.accumulate(log_w + values[n - 1, :-1])
        return RTable(values=values, log_space=True)

    values = np.zeros((k + 1, m + 1))
    values[0, :] = 1.0
    gradients = np.zeros((k + 1, m + 1, m)) if with_gradients else None
    eye = np.eye(m)
    for n in range(1, k + 1):
        values[n, 1:] = np.cumsum(w * values[n - 1, :-1])
        if with_gradients:
            increments = w[:, None] * gradients[n - 1, :-1] + values[n - 1, :-1, None] * eye
            gradients[n, 1:] = np.cumsum(increments, axis=0)
    return RTable(values=values, gradients=gradients, log_space=False)


def r_gradient(k: int, weights: WeightsLike) -> np.ndarray:
    """
    Gradient of R(k, A) with respect to w by co-tabulation.

    c'(n, j) = c'(n, j-1) + w_j c'(n-1, j-1) + c(n-1, j-1) e_j with
    c'(0, .) = 0. Two rows of values and gradients are kept.
    """
    w = _weight_vector(weights)
    m = w.size
    if k <= 0 or k > m:
        return np.zeros(m)
    row = np.ones(m + 1)
    grad_row = np.zeros((m + 1, m))
    eye = np.eye(m)
    for _ in range(k):
        increments = w[:, None] * grad_row[:-1] + row[:-1, None] * eye
        nxt = np.zeros(m + 1)
        nxt[1:] = np.cumsum(w * row[:-1])
        grad_nxt = np.zeros((m + 1, m))
        grad_nxt[1:] = np.cumsum(increments, axis=0)
        row, grad_row = nxt, grad_nxt
    return grad_row[-1]


def _leave_one_out_matrix(w: np.ndarray) -> np.ndarray:
    W = np.tile(w, (w.size, 1))
    np.fill_diagonal(W, 0.0)
    return W


def leave_one_out_r(k: int, weights: WeightsLike, log_space: Optional[bool] = None,
                    log: bool = False) -> np.ndarray:
    """
    Evaluate R(k, A\\{i}) for every i in one vectorized sweep.

    Args:
        k: Subset size
        weights: Bernoulli weights over A
        log: Return log R values

    Returns:
        Vector of length |A|
    """
    w = _weight_vector(weights)
    m = w.size
    if k < 0 or k > m - 1:
        return np.full(m, -np.inf if log else 0.0)
    in_log = _resolve_log_space(w, log_space)
    column = _tabulate_last_column(k, _leave_one_out_matrix(w), in_log)[:, k]
    if log == in_log:
        return column
    if log:
        with np.errstate(divide="ignore"):
            return np.log(column)
    return np.exp(column)


def _leave_two_out_r(k: int, w: np.ndarray, in_log: bool) -> np.ndarray:
    """
    R(k, A\\{i, j}) for all pairs, shape (|A|, |A|); diagonal is meaningless.

    Rows i are tabulated in blocks of at most PAIR_BLOCK_ELEMENTS weights, so
    memory stays O(|A|^2) for large |A|.
    """
    m = w.size
    out = np.full((m, m), -np.inf if in_log else 0.0)
    if k < 0 or k > m - 2:
        return out
    idx = np.arange(m)
    block = max(1, PAIR_BLOCK_ELEMENTS // (m * m))
    for start in range(0, m, block):
        rows = idx[start:start + block]
        # W[a, j] is w with both rows[a] and j removed
        W = np.tile(w, (rows.size, m, 1))
        W[np.arange(rows.size), :, rows] = 0.0
        W[:, idx, idx] = 0.0
        column = _tabulate_last_column(k, W.reshape(rows.size * m, m), in_log)[:, k]
        out[rows] = column.reshape(rows.size, m)
    return out


def r_log_gradient(k: int, weights: WeightsLike, log_space: Optional[bool] = None) -> np.ndarray:
    """Gradient of log R(k, A) with respect to w, i.e. R(k-1, A\\{i}) / R(k, A)."""
    w = _weight_vector(weights)
    if k < 0 or k > w.size:
        raise DomainException(f"log R({k}, A) is undefined over {w.size} weights")
    if k == 0:
        return np.zeros(w.size)
    log_total = log_r_value(k, w, log_space)
    return np.exp(leave_one_out_r(k - 1, w, log_space, log=True) - log_total)


def r_gradient_via_inclusion(k: int, weights: WeightsLike) -> np.ndarray:
    """Gradient of R(k, A) from first-order inclusion probabilities, pi_i R / w_i."""
    w = _weight_vector(weights)
    if k < 1:
        raise DomainException("the inclusion route needs k >= 1")
    if k > w.size:
        return np.zeros(w.size)
    pi = inclusion_first(k, w).first_order
    return pi * r_value(k, w) / w


def r_hessian(k: int, weights: WeightsLike, space: str = "w") -> np.ndarray:
    """
    Second derivatives of R(k, A).

    R is multilinear in w, so the w-space Hessian has R(k-2, A\\{i,j}) off the
    diagonal and zeros on it. In p-space the chain rule scales off-diagonal
    entries by (1+w_i)^2 (1+w_j)^2 and puts 2 (1+w_i)^3 R(k-1, A\\{i}) on the
    diagonal.
    """
    if space not in ("w", "p"):
        raise DomainException(f"unknown derivative space: {space}")
    w = _weight_vector(weights)
    H = _leave_two_out_r(k - 2, w, False)
    np.fill_diagonal(H, 0.0)
    if space == "p":
        scale = (1.0 + w) ** 2
        H = H * np.outer(scale, scale)
        H[np.diag_indices(w.size)] = 2.0 * (1.0 + w) ** 3 * leave_one_out_r(k - 1, w)
    return H


def inclusion_first(z: int, weights: WeightsLike, method: str = "leave_one_out",
                    log_space: Optional[bool] = None) -> InclusionProbabilities:
    """
    First-order inclusion probabilities pi_i = w_i R(z-1, A\\{i}) / R(z, A).

    Args:
        z: Budget, 0 <= z <= |A|
        weights: Bernoulli weights over A
        method: 'leave_one_out' (reduced tables) or 'gradient' (co-tabulation)

    Returns:
        InclusionProbabilities over the weight positions
    """
    w = _weight_vector(weights)
    if z < 0 or z > w.size:
        raise DomainException(f"budget {z} outside [0, {w.size}]")
    if method == "leave_one_out":
        if z == 0:
            pi = np.zeros(w.size)
        else:
            pi = w * r_log_gradient(z, w, log_space)
    elif method == "gradient":
        pi = w * r_gradient(z, w) / r_value(z, w, log_space=False)
    else:
        raise DomainException(f"unknown inclusion method: {method}")
    return InclusionProbabilities(first_order=pi, budget=z)


def inclusion_second(z: int, weights: WeightsLike, i: int, j: int,
                     log_space: Optional[bool] = None) -> float:
    """
    Second-order inclusion probability pi_ij = w_i w_j R(z-2, A\\{i,j}) / R(z, A).

    Raises:
        DomainException: If i == j
    """
    if i == j:
        raise DomainException(f"second-order inclusion needs distinct indices, got {i} twice")
    w = _weight_vector(weights)
    if z < 2 or z > w.size:
        return 0.0
    reduced = w.copy()
    reduced[[i, j]] = 0.0
    in_log = _resolve_log_space(w, log_space)
    pair = _tabulate_last_column(z - 2, reduced[None, :], in_log)[0, z - 2]
    if in_log:
        log_pair = pair
    else:
        log_pair = np.log(pair) if pair > 0 else -np.inf
    return float(np.exp(np.log(w[i]) + np.log(w[j]) + log_pair - log_r_value(z, w, log_space)))


def inclusion_second_matrix(z: int, weights: WeightsLike,
                            log_space: Optional[bool] = None) -> np.ndarray:
    """Symmetric matrix of all pi_ij, zero on the diagonal."""
    w = _weight_vector(weights)
    m = w.size
    if z < 2 or z > m:
        return np.zeros((m, m))
    in_log = _resolve_log_space(w, log_space)
    pair = _leave_two_out_r(z - 2, w, in_log)
    log_w = np.log(w)
    with np.errstate(divide="ignore"):
        log_pair = pair if in_log else np.log(pair)
    P = np.exp(log_w[:, None] + log_w[None, :] + log_pair - log_r_value(z, w, log_space))
    np.fill_diagonal(P, 0.0)
    return P


def inclusion_derivatives(z: int, weights: WeightsLike, order: str = "first",
                          space: str = "w") -> Union[np.ndarray, InclusionDerivatives]:
    """
    Derivatives of the inclusion probabilities.

    Args:
        z: Budget
        weights: Non-degenerate Bernoulli weights
        order: 'first' for the matrix d pi_i / d x_j, 'second' for pi_ij derivatives
        space: 'w' for weight space, 'p' for success-probability space

    Returns:
        Matrix for order 'first', InclusionDerivatives for order 'second'
    """
    if space not in ("w", "p"):
        raise DomainException(f"unknown derivative space: {space}")
    w = _weight_vector(weights)
    pi = inclusion_first(z, w).first_order
    pij = inclusion_second_matrix(z, w)
    scale = (1.0 + w) ** 2 if space == "p" else np.ones(w.size)

    if order == "first":
        D = (pij - np.outer(pi, pi)) / w[None, :]
        D[np.diag_indices(w.size)] = (pi - pi ** 2) / w
        return D * scale[None, :]

    if order == "second":
        wrt_first = pij * (1.0 - pi)[:, None] / w[:, None]
        wrt_second = pij * (1.0 - pi)[None, :] / w[None, :]
        covariance = pij - np.outer(pi, pi)
        mixed = pij / np.outer(w, w) * (np.outer(1.0 - pi, 1.0 - pi) - covariance)
        for matrix in (wrt_first, wrt_second, mixed):
            np.fill_diagonal(matrix, 0.0)
        return InclusionDerivatives(
            wrt_first=wrt_first * scale[:, None],
            wrt_second=wrt_second * scale[None, :],
            mixed=mixed * np.outer(scale, scale)
        )

    raise DomainException(f"unknown derivative order: {order}")
