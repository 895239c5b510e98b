"""Pair graph, overlap graph, pruning and randomized rounding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Dataset, DifferenceSet, PairGraph, ParameterError

DELTA_CONSTANT = 4608.0


def build_pair_graph(T_prime: DifferenceSet) -> PairGraph:
    m = T_prime.parent.m
    A = np.zeros((m, m), dtype=bool)
    A[T_prime.I, T_prime.J] = True
    A[T_prime.J, T_prime.I] = True
    return PairGraph(m, A)


def overlap_adjacency(A: np.ndarray, gamma: float) -> np.ndarray:
    """Adjacency of the overlap graph of ``A``: ``|N(x) & N(y)| >= gamma * m``."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    m = A.shape[0]
    C = kernels.common_neighbors(A)
    R = C >= gamma * m
    np.fill_diagonal(R, False)
    return R


def overlap_graph(G: PairGraph, gamma: float) -> PairGraph:
    """Connect x != y when they share at least ``gamma * m`` neighbours in G.

    x and y need not be adjacent in G.
    """
    return PairGraph(G.vertex_count, overlap_adjacency(G.adjacency, gamma))


def prune(G: PairGraph, W) -> np.ndarray:
    """Peel vertices of ``W`` with fewer than ``2|W|/3`` neighbours left in ``W'``.

    ``|W|`` is the original size throughout; the lowest index is removed first.
    Returns the surviving vertices in increasing order (possibly empty).
    """
    W = np.unique(np.asarray(W, dtype=np.int64))
    if W.size == 0:
        raise ParameterError("W must be non-empty")
    if W[0] < 0 or W[-1] >= G.vertex_count:
        raise ParameterError("W must be a subset of the vertices")
    keep = kernels.prune_mask(G.adjacency, W, 2.0 * W.size / 3.0)
    return W[keep]


def nonadjacent_pairs(A: np.ndarray, W) -> int:
    """Number of unordered pairs ``{y, z}``, ``y != z`` in W with no edge in A."""
    W = np.asarray(W, dtype=np.int64)
    w = W.size
    if w < 2:
        return 0
    edges = int(np.triu(A[np.ix_(W, W)], 1).sum())
    return w * (w - 1) // 2 - edges


@dataclass(frozen=True)
class RoundingOutcome:
    estimate: np.ndarray | None
    center: int
    neighborhood: int
    nonadjacent: int
    kept: int
    reason: str = ""

    @property
    def failed(self) -> bool:
        return self.estimate is None


def round_once(
    data: Dataset,
    G: PairGraph,
    alpha: float,
    seed: int,
    delta_constant: float = DELTA_CONSTANT,
) -> RoundingOutcome:
    """One draw of the rounding procedure with its diagnostics.

    FAIL when ``|W| <= (alpha/4) m`` or when more than ``(8 delta / alpha) m^2``
    pairs of ``W`` are non-adjacent in the overlap graph ``R_delta(G)``, with
    ``delta = alpha^3 / delta_constant``.  Otherwise the mean of the pruned W.
    """
    if not 0 < alpha < 0.5:
        raise ParameterError(f"alpha must lie in (0, 1/2), got {alpha}")
    if G.vertex_count != data.m:
        raise ParameterError("graph and dataset disagree on m")
    m = data.m
    delta = alpha**3 / delta_constant
    rng = np.random.default_rng(int(seed))
    x = int(rng.integers(m))
    W = G.neighbors(x)
    if W.size <= (alpha / 4.0) * m:
        return RoundingOutcome(None, x, int(W.size), -1, 0, "neighbourhood too small")
    # only the overlap edges inside W are ever looked at
    AW = G.adjacency[W].astype(np.float64)
    common = np.rint(AW @ AW.T)
    RW = common >= delta * m
    np.fill_diagonal(RW, False)
    bad = nonadjacent_pairs(RW, np.arange(W.size))
    if bad > (8.0 * delta / alpha) * m * m:
        return RoundingOutcome(None, x, int(W.size), bad, 0, "neighbourhood not dense in overlap graph")
    keep = kernels.prune_mask(RW, np.arange(W.size), 2.0 * W.size / 3.0)
    Wp = W[keep]
    if Wp.size == 0:
        return RoundingOutcome(None, x, int(W.size), bad, 0, "pruning emptied the neighbourhood")
    return RoundingOutcome(data.samples[Wp].mean(axis=0), x, int(W.size), bad, int(Wp.size))


def rounding(data: Dataset, G: PairGraph, alpha: float, seed: int, delta_constant: float = DELTA_CONSTANT):
    """Candidate mean, or ``None`` for FAIL."""
    return round_once(data, G, alpha, seed, delta_constant).estimate
