import json
import math

import numpy as np
import pytest

from ldsparse.core import Dataset, EstimateList, MomentParams, ParameterError
from ldsparse.estimator import (
    PipelineConfig,
    default_rounds,
    estimate_list,
    ld_sparse_mean,
    merge_radius,
    min_list_error,
    with_overrides,
)
from ldsparse.harness.scenarios import ScenarioConfig, gen_corrupted


def degenerate(c, m=40):
    return Dataset(np.tile(np.asarray(c, float), (m, 1)))


def test_identical_points_return_the_point():
    c = np.array([0.0, 3.0, 0.0, -1.0, 0.0])
    out = ld_sparse_mean(degenerate(c), MomentParams(t=2, k=2, M=2.0, alpha=0.2), seed=4)
    np.testing.assert_allclose(out, c)


@pytest.mark.parametrize("seed", range(3))
def test_output_is_k_sparse(seed):
    cfg = ScenarioConfig(n=10, m=80, k=2, alpha=0.25, seed=seed)
    data, _ = gen_corrupted(cfg)
    out = ld_sparse_mean(data, cfg.params(), seed=seed)
    assert out is None or np.count_nonzero(out) <= 2


def test_single_round_on_degenerate_data():
    lst = estimate_list(degenerate([1.0, 0.0]), MomentParams(t=2, k=1, M=2.0, alpha=0.2), rounds=1)
    assert len(lst) == 1 and lst.fail_count == 0 and lst.seeds == [1]


def test_all_rounds_fail_gives_empty_list():
    # a vanishing moment bound lets the filter strip every pair, so G has no edges
    data = Dataset(np.arange(10, dtype=float)[:, None] * 1e3)
    params = MomentParams(t=2, k=1, M=2.0, alpha=0.45)
    cfg = PipelineConfig(moment_bound=1e-12)
    lst = estimate_list(data, params, rounds=7, config=cfg)
    assert lst.candidates == [] and lst.fail_count == 7
    assert min_list_error(lst, np.zeros(1)) == math.inf


def test_default_rounds():
    assert default_rounds(0.2) == 277
    assert default_rounds(0.1) == 553
    a = 0.2
    r = default_rounds(a)
    assert 1 - (1 - a / 24) ** r >= 0.9


def test_min_list_error_examples():
    lst = EstimateList([np.array([3.0, 4.0]), np.array([1.0, 0.0])], [1, 2], 0)
    assert min_list_error(lst, np.zeros(2)) == pytest.approx(1.0)
    assert min_list_error(lst, np.array([3.0, 4.0])) == 0.0


def test_fail_count_plus_candidates_accounts_for_rounds():
    cfg = ScenarioConfig(n=8, m=60, k=2, alpha=0.25, seed=2)
    data, _ = gen_corrupted(cfg)
    pc = PipelineConfig(merge_radius=0.0)  # no merging, so every success is listed
    lst = estimate_list(data, cfg.params(), rounds=12, seed=9, config=pc)
    assert len(lst) + lst.fail_count == 12
    assert all(10 <= s <= 21 for s in lst.seeds)


def test_merge_keeps_earliest():
    params = MomentParams(t=2, k=1, M=2.0, alpha=0.2)
    assert merge_radius(params) == pytest.approx(math.sqrt(2 / 0.2))
    lst = estimate_list(degenerate([2.0]), params, rounds=5, seed=100)
    assert lst.seeds == [101] and lst.fail_count == 0


def test_estimate_list_is_deterministic_and_serializable():
    cfg = ScenarioConfig(n=8, m=60, k=2, alpha=0.25, seed=1)
    data, _ = gen_corrupted(cfg)
    a = estimate_list(data, cfg.params(), rounds=6, seed=3)
    b = estimate_list(data, cfg.params(), rounds=6, seed=3)
    assert a.to_json() == b.to_json()
    back = EstimateList.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    assert set(json.loads(a.to_json())) == {"candidates", "seeds", "fail_count"}


def test_parallel_matches_serial():
    cfg = ScenarioConfig(n=8, m=60, k=2, alpha=0.25, seed=6)
    data, _ = gen_corrupted(cfg)
    a = estimate_list(data, cfg.params(), rounds=6, seed=0, workers=1)
    b = estimate_list(data, cfg.params(), rounds=6, seed=0, workers=3)
    assert a.to_json() == b.to_json()


@pytest.mark.parametrize("rounds", [0, -3, 2.5])
def test_bad_rounds(rounds):
    with pytest.raises(ParameterError):
        estimate_list(degenerate([1.0]), MomentParams(t=2, k=1, M=2.0, alpha=0.2), rounds=rounds)


def test_dimension_and_size_checks():
    with pytest.raises(ParameterError):
        ld_sparse_mean(degenerate([1.0]), MomentParams(t=2, k=2, M=2.0, alpha=0.2))
    with pytest.raises(ParameterError):
        ld_sparse_mean(Dataset(np.zeros((1, 2))), MomentParams(t=2, k=1, M=2.0, alpha=0.2))


def test_with_overrides_ignores_none():
    c = with_overrides(PipelineConfig(), moment_bound=None, delta_constant=10.0)
    assert c.moment_bound is None and c.delta_constant == 10.0


def test_t4_pipeline_runs():
    cfg = ScenarioConfig(n=5, m=40, k=2, t=4, alpha=0.25, seed=0)
    data, _ = gen_corrupted(cfg)
    out = ld_sparse_mean(data, cfg.params(), seed=0)
    assert out is None or np.count_nonzero(out) <= 2
