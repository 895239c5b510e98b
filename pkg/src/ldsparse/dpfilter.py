"""Difference-of-pairs construction and the randomized moment filter."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import Dataset, DifferenceSet, MomentParams, ParameterError
from .oracle import DirectionCertificate, certify_pairs, default_oracle

log = logging.getLogger(__name__)


class FilterAbort(RuntimeError):
    """The filter exceeded its soft iteration cap."""


def difference_pairs(data: Dataset) -> DifferenceSet:
    """All ``m(m-1)/2`` unordered pairs of distinct sample indices."""
    if data.m < 2:
        raise ParameterError(f"need at least 2 samples, got m={data.m}")
    I, J = np.triu_indices(data.m, 1)
    return DifferenceSet(data, I, J)


def inlier_pairs(data: Dataset) -> DifferenceSet:
    """Pairs whose both endpoints are flagged inliers."""
    if data.inlier_mask is None:
        raise ParameterError("dataset has no inlier mask")
    idx = np.flatnonzero(data.inlier_mask)
    a, b = np.triu_indices(idx.size, 1)
    return DifferenceSet(data, idx[a], idx[b])


def effective_moment(params: MomentParams) -> float:
    """Moment bound of the inlier differences: ``2^t * 8 * M``.

    ``8 M`` is the empirical slack on the inliers' own moments and ``2^t`` the
    triangle-inequality factor for their pairwise differences.
    """
    return 2.0**params.t * 8.0 * params.M


def filter_potential(T_current: DifferenceSet, T_good: DifferenceSet, T_initial_size: int, alpha: float) -> float:
    """``(|T_good & T_current| - alpha^2/6 * |T_current|) / |T_initial|``."""
    if T_initial_size <= 0:
        raise ParameterError("initial size must be positive")
    overlap = int(np.isin(T_current.keys(), T_good.keys(), assume_unique=True).sum())
    return (overlap - alpha**2 / 6.0 * len(T_current)) / T_initial_size


@dataclass
class FilterConfig:
    moment_bound: float | None = None  # overrides effective_moment(params)
    soft_cap: int | None = None
    trace_path: str | None = None


@dataclass
class FilterResult:
    retained: DifferenceSet
    iterations: int
    threshold: float
    final: DirectionCertificate
    trace: list[dict] = field(default_factory=list)
    potentials: list[float] = field(default_factory=list)


def _seed_words(seed: int) -> list[int]:
    seed = int(seed)
    if seed < 0:
        raise ParameterError("seeds must be non-negative")
    return [seed & 0xFFFFFFFF, seed >> 32]


def run_filter(
    T: DifferenceSet,
    params: MomentParams,
    oracle=None,
    seed: int = 0,
    config: FilterConfig | None = None,
    good: DifferenceSet | None = None,
) -> FilterResult:
    """Filter ``T`` until the oracle certifies ``sum <v,x>^t <= 6 M_eff |T|``.

    Every round finds a violating direction ``v``, weighs each retained pair by
    ``w = <v, x_i - x_j>^t`` and drops it with probability ``w / max w``; the
    heaviest pair always goes.  ``good`` (harness only) enables the potential
    diagnostic.
    """
    config = config or FilterConfig()
    data = T.parent
    params.check_dimension(data.n)
    if oracle is None:
        oracle = default_oracle(params.t)
    if not oracle.supports_t(params.t):
        raise ParameterError(f"oracle {type(oracle).__name__} cannot handle t={params.t}")
    M_eff = effective_moment(params) if config.moment_bound is None else float(config.moment_bound)
    if not M_eff > 0:
        raise ParameterError("moment bound must be positive")

    X = data.samples
    I_all, J_all = T.I, T.J
    N0 = len(T)
    threshold = 6.0 * M_eff * N0
    cap = N0 if config.soft_cap is None else min(N0, int(config.soft_cap))
    words = _seed_words(seed)
    use_gram = params.t == 2
    pos = np.arange(N0)
    gram = kernels.pair_gram(X, I_all, J_all) if use_gram else None

    trace: list[dict] = []
    potentials: list[float] = []
    good_keys = good.keys() if good is not None else None
    all_keys = T.keys()

    def potential(p):
        overlap = int(np.isin(all_keys[p], good_keys, assume_unique=True).sum())
        return (overlap - params.alpha**2 / 6.0 * p.size) / N0

    if good_keys is not None:
        potentials.append(potential(pos))

    it = 0
    while True:
        oseed = (int(seed) * 1_000_003 + it) & 0xFFFFFFFF
        cert = certify_pairs(oracle, X, I_all[pos], J_all[pos], params.k, params.t, threshold, oseed, gram=gram)
        if not cert.is_violation and use_gram and pos.size:
            # the running Gram matrix is updated by subtraction; confirm on a fresh one
            gram = kernels.pair_gram(X, I_all[pos], J_all[pos])
            cert = certify_pairs(oracle, X, I_all[pos], J_all[pos], params.k, params.t, threshold, oseed, gram=gram)
        if not cert.is_violation:
            break
        if it >= cap:
            raise FilterAbort(f"filter did not terminate within {cap} iterations ({pos.size} pairs left)")

        p = X @ cert.direction.dense()
        w = kernels.pair_powers(p, I_all[pos], J_all[pos], params.t)
        top = int(np.argmax(w))
        rng = np.random.default_rng(words + [it])
        u = rng.random(pos.size)
        remove = u < w / w[top]
        remove[top] = True
        gone = pos[remove]
        if use_gram:
            gram = gram - kernels.pair_gram(X, I_all[gone], J_all[gone])
        pos = pos[~remove]
        it += 1

        rec = {
            "iteration": it,
            "support": list(cert.direction.support),
            "value": cert.value,
            "removed": int(gone.size),
            "remaining": int(pos.size),
        }
        if good_keys is not None:
            potentials.append(potential(pos))
            rec["delta"] = potentials[-1]
        trace.append(rec)

    log.debug("filter stopped after %d rounds, %d of %d pairs kept", it, pos.size, N0)
    if config.trace_path:
        with open(config.trace_path, "a") as fh:
            for rec in trace:
                fh.write(json.dumps(rec) + "\n")
    retained = DifferenceSet(data, I_all[pos], J_all[pos])
    return FilterResult(retained, it, threshold, cert, trace, potentials)


def dp_filter(T: DifferenceSet, params: MomentParams, oracle=None, seed: int = 0, config: FilterConfig | None = None) -> DifferenceSet:
    return run_filter(T, params, oracle, seed, config).retained
