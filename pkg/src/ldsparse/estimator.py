"""End-to-end pipeline and list construction by repetition."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .core import Dataset, EstimateList, MomentParams, ParameterError, hk_truncate
from .dpfilter import FilterConfig, difference_pairs, run_filter
from .graph import DELTA_CONSTANT, build_pair_graph, round_once
from .oracle import DEFAULT_BUDGET, default_oracle


@dataclass(frozen=True)
class PipelineConfig:
    moment_bound: float | None = None
    delta_constant: float = DELTA_CONSTANT
    enum_budget: int = DEFAULT_BUDGET
    restarts: int = 8
    soft_cap: int | None = None
    trace_path: str | None = None
    merge_radius: float | None = None

    def filter_config(self) -> FilterConfig:
        return FilterConfig(self.moment_bound, self.soft_cap, self.trace_path)


def _pipeline(data, params, oracle, seed, config):
    T = difference_pairs(data)
    res = run_filter(T, params, oracle, seed, config.filter_config())
    G = build_pair_graph(res.retained)
    # the rounding draw gets its own stream so it is not correlated with the filter's
    out = round_once(data, G, params.alpha, seed + 0x9E3779B1, config.delta_constant)
    if out.failed:
        return None
    return hk_truncate(out.estimate, params.k)


def ld_sparse_mean(
    data: Dataset,
    params: MomentParams,
    oracle=None,
    seed: int = 0,
    config: PipelineConfig | None = None,
) -> np.ndarray | None:
    """Filter the pair differences, round the surviving pair graph, keep the top k.

    Returns ``None`` when rounding FAILs.
    """
    config = config or PipelineConfig()
    params.check_dimension(data.n)
    if data.m < 2:
        raise ParameterError("need at least 2 samples")
    if oracle is None:
        oracle = default_oracle(params.t, config.enum_budget, config.restarts)
    return _pipeline(data, params, oracle, int(seed), config)


def default_rounds(alpha: float) -> int:
    """Repetitions so that ``1 - (1 - alpha/24)^r >= 0.9`` (via ``ln 10``)."""
    return math.ceil(24.0 / alpha * math.log(10.0))


def merge_radius(params: MomentParams) -> float:
    return params.M ** (1.0 / params.t) * params.alpha ** (-1.0 / params.t)


def _dedup(outputs, seeds, radius):
    kept, kept_seeds = [], []
    for s, c in zip(seeds, outputs):
        if c is None:
            continue
        if any(np.linalg.norm(c - u) < radius for u in kept):
            continue
        kept.append(c)
        kept_seeds.append(s)
    return kept, kept_seeds


def run_rounds(data, params, oracle, seeds, config, workers=1):
    """``ld_sparse_mean`` for every seed, in seed order."""
    if oracle is None:
        oracle = default_oracle(params.t, config.enum_budget, config.restarts)
    fn = partial(_pipeline_seed, data, params, oracle, config)
    if workers <= 1:
        return [fn(s) for s in seeds]
    chunk = max(1, len(seeds) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, seeds, chunksize=chunk))


def _pipeline_seed(data, params, oracle, config, seed):
    return _pipeline(data, params, oracle, seed, config)


def estimate_list(
    data: Dataset,
    params: MomentParams,
    oracle=None,
    rounds: int | None = None,
    seed: int = 0,
    config: PipelineConfig | None = None,
    workers: int = 1,
) -> EstimateList:
    """Run the pipeline with seeds ``seed+1 .. seed+rounds`` and merge near-duplicates.

    A candidate within ``merge_radius`` of an earlier one is dropped.
    """
    config = config or PipelineConfig()
    if rounds is None:
        rounds = default_rounds(params.alpha)
    if int(rounds) != rounds or rounds < 1:
        raise ParameterError(f"rounds must be a positive integer, got {rounds}")
    params.check_dimension(data.n)
    seeds = [int(seed) + i for i in range(1, int(rounds) + 1)]
    outputs = run_rounds(data, params, oracle, seeds, config, workers)
    radius = merge_radius(params) if config.merge_radius is None else config.merge_radius
    kept, kept_seeds = _dedup(outputs, seeds, radius)
    fails = sum(o is None for o in outputs)
    return EstimateList(kept, kept_seeds, fails)


def min_list_error(lst: EstimateList, mu_true: np.ndarray) -> float:
    if not lst.candidates:
        return math.inf
    mu = np.asarray(mu_true, dtype=np.float64)
    return float(min(np.linalg.norm(c - mu) for c in lst.candidates))


def with_overrides(config: PipelineConfig, **kw) -> PipelineConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
