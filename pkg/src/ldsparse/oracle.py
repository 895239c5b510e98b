"""Sparse-direction oracles.

Given a set of vectors (either explicit points or pair differences of a
dataset) the oracles look for a k-sparse unit ``v`` maximising
``sum_x <v, x>^t``.  For ``t = 2`` the maximum over each support is the top
eigenvalue of the restricted second-moment matrix, so enumerating supports is
exact.  For ``t >= 4`` a projected power ascent with restarts gives a feasible
lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import MomentParams, ParameterError, SparseDirection, supports

DEFAULT_BUDGET = 10**6


class BudgetError(ParameterError):
    """Support enumeration would exceed the configured budget."""


BOUNDED = "bounded"
VIOLATION = "violation"


@dataclass(frozen=True)
class DirectionCertificate:
    kind: str
    direction: SparseDirection | None
    value: float
    exact: bool

    def __post_init__(self):
        if self.kind not in (BOUNDED, VIOLATION):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if (self.kind == VIOLATION) != (self.direction is not None):
            raise ValueError("a direction is present exactly for violations")

    @property
    def is_violation(self) -> bool:
        return self.kind == VIOLATION


def _enumerate(n: int, k: int, budget: int) -> np.ndarray:
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    count = math.comb(n, k)
    if count > budget:
        raise BudgetError(f"C({n},{k}) = {count} supports exceeds the enumeration budget {budget}")
    return supports(n, k)


def _canonical_sign(vals: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(vals)))
    return -vals if vals[j] < 0 else vals


def _direction(n: int, support: np.ndarray, vals: np.ndarray, value: float) -> SparseDirection:
    if value <= 0.0 or not np.any(vals):
        vals = np.zeros(support.shape[0])
        vals[0] = 1.0
    vals = _canonical_sign(np.asarray(vals, dtype=np.float64))
    vals = vals / np.linalg.norm(vals)
    return SparseDirection(tuple(support.tolist()), vals, n)


def _as_pairs(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    N = P.shape[0]
    X = np.vstack([P, np.zeros((1, P.shape[1]))])
    return X, np.arange(N, dtype=np.int64), np.full(N, N, dtype=np.int64)


def gram_sparse_max(gram: np.ndarray, k: int, budget: int = DEFAULT_BUDGET) -> tuple[float, SparseDirection]:
    """Max over k-sparse unit v of ``v^T gram v``, with its maximiser.

    Ties between supports go to the lexicographically first one.
    """
    n = gram.shape[0]
    S = _enumerate(n, k, budget)
    vals, vecs = kernels.support_top_eig(gram, S)
    best = int(np.argmax(vals))
    value = max(float(vals[best]), 0.0)
    return value, _direction(n, S[best], vecs[best], value)


class ExactT2Oracle:
    """Exact oracle for ``t = 2`` by support enumeration."""

    exact = True

    def __init__(self, budget: int = DEFAULT_BUDGET):
        self.budget = int(budget)

    def supports_t(self, t: int) -> bool:
        return t == 2

    def maximize_pairs(self, X, I, J, k, t=2, seed=0, gram=None):
        if t != 2:
            raise ParameterError("the exact oracle only handles t = 2")
        if gram is None:
            gram = kernels.pair_gram(X, I, J)
        return gram_sparse_max(gram, k, self.budget)


class AscentOracle:
    """Per-support power ascent with restarts for even ``t >= 4``.

    Restart 0 starts at the top eigenvector of the restricted second-moment
    matrix; later restarts draw Gaussian starts from a stream keyed by
    ``(seed, support index)``, so more restarts never lower the result.
    """

    exact = False

    def __init__(self, restarts: int = 8, iters: int = 100, budget: int = DEFAULT_BUDGET):
        if restarts < 1:
            raise ParameterError("restarts must be >= 1")
        self.restarts = int(restarts)
        self.iters = int(iters)
        self.budget = int(budget)

    def supports_t(self, t: int) -> bool:
        return t >= 2 and t % 2 == 0

    def maximize_pairs(self, X, I, J, k, t, seed=0, gram=None):
        n = X.shape[1]
        S = _enumerate(n, k, self.budget)
        D = X[I] - X[J]
        if D.shape[0] == 0:
            return 0.0, _direction(n, S[0], np.zeros(k), 0.0)
        if gram is None:
            gram = D.T @ D
        _, init = kernels.support_top_eig(gram, S)
        best_val, best_s, best_v = -1.0, 0, init[0]
        for s in range(S.shape[0]):
            P = np.ascontiguousarray(D[:, S[s]])
            rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, s])
            for r in range(self.restarts):
                v0 = init[s] if r == 0 else rng.standard_normal(k)
                if not np.any(v0):
                    v0 = np.eye(k)[0]
                v, val = kernels.power_ascent(P, v0, t, self.iters)
                if val > best_val:
                    best_val, best_s, best_v = val, s, v
        value = max(best_val, 0.0)
        return value, _direction(n, S[best_s], best_v, value)


def default_oracle(t: int, budget: int = DEFAULT_BUDGET, restarts: int = 8):
    return ExactT2Oracle(budget) if t == 2 else AscentOracle(restarts=restarts, budget=budget)


def sparse_moment_max_exact_t2(points, k: int, budget: int = DEFAULT_BUDGET) -> tuple[float, SparseDirection]:
    """Exact ``max_v sum_x <v, x>^2`` over k-sparse unit v."""
    X, I, J = _as_pairs(points)
    return ExactT2Oracle(budget).maximize_pairs(X, I, J, k, 2)


def sparse_moment_ascent(
    points,
    k: int,
    t: int,
    restarts: int = 8,
    seed: int = 0,
    iters: int = 100,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, SparseDirection]:
    """Lower bound on ``max_v sum_x <v, x>^t`` attained at the returned direction."""
    if t < 4 or t % 2:
        raise ParameterError(f"ascent oracle needs even t >= 4, got {t}")
    X, I, J = _as_pairs(points)
    return AscentOracle(restarts, iters, budget).maximize_pairs(X, I, J, k, t, seed)


def certify_pairs(oracle, X, I, J, k, t, threshold, seed=0, gram=None) -> DirectionCertificate:
    """Bounded/Violation decision for the difference vectors ``X[I] - X[J]``."""
    if not threshold > 0:
        raise ParameterError("threshold must be positive")
    if len(I) == 0:
        return DirectionCertificate(BOUNDED, None, 0.0, True)
    value, direction = oracle.maximize_pairs(X, I, J, k, t, seed, gram=gram)
    if value > threshold:
        return DirectionCertificate(VIOLATION, direction, value, oracle.exact)
    return DirectionCertificate(BOUNDED, None, value, oracle.exact)


def certify_or_violate(points, params: MomentParams, threshold: float, seed: int = 0, oracle=None) -> DirectionCertificate:
    """Violation iff the oracle finds ``sum_x <v, x>^t > threshold``."""
    P = np.asarray(points, dtype=np.float64)
    if P.size == 0:
        if not threshold > 0:
            raise ParameterError("threshold must be positive")
        return DirectionCertificate(BOUNDED, None, 0.0, True)
    if oracle is None:
        oracle = default_oracle(params.t)
    X, I, J = _as_pairs(P)
    params.check_dimension(X.shape[1])
    return certify_pairs(oracle, X, I, J, params.k, params.t, threshold, seed)
