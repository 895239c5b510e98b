import json
import math
from itertools import combinations

import numpy as np
import pytest

from ldsparse.core import Dataset, DifferenceSet, MomentParams, ParameterError
from ldsparse.dpfilter import (
    FilterAbort,
    FilterConfig,
    difference_pairs,
    dp_filter,
    effective_moment,
    filter_potential,
    inlier_pairs,
    run_filter,
)
from ldsparse.harness.scenarios import ScenarioConfig, gen_corrupted


def naive_sparse_max_t2(D, k):
    n = D.shape[1]
    return max(np.linalg.eigvalsh(D[:, S].T @ D[:, S])[-1] for S in combinations(range(n), k))


@pytest.mark.parametrize("m, count", [(2, 1), (3, 3), (100, 4950)])
def test_difference_pairs_counts(m, count):
    T = difference_pairs(Dataset(np.zeros((m, 2))))
    assert len(T) == count
    if m == 2:
        assert T.pairs == {(0, 1)}


def test_difference_pairs_needs_two_points():
    with pytest.raises(ParameterError):
        difference_pairs(Dataset(np.zeros((1, 2))))


def test_effective_moment():
    assert effective_moment(MomentParams(t=2, k=1, M=1.0, alpha=0.2)) == 32.0
    assert effective_moment(MomentParams(t=4, k=1, M=3.0, alpha=0.2)) == 16 * 8 * 3.0


def test_already_bounded_set_is_unchanged(rng):
    data = Dataset(rng.normal(size=(20, 3)))
    T = difference_pairs(data)
    res = run_filter(T, MomentParams(t=2, k=2, M=1.0, alpha=0.2), seed=1)
    assert res.iterations == 0
    np.testing.assert_array_equal(res.retained.I, T.I)
    one = DifferenceSet(data, [0], [1])
    assert len(dp_filter(one, MomentParams(t=2, k=1, M=1.0, alpha=0.2))) == 1


def test_single_huge_pair_is_removed_first(rng):
    # x0 = 0, x1 = 100 e1, then 49 pairs with tiny differences
    tiny = rng.normal(size=(49, 2))
    tiny /= np.linalg.norm(tiny, axis=1, keepdims=True)
    base = rng.normal(size=(49, 2))
    rows = [np.zeros(2), np.array([100.0, 0.0])]
    for b, d in zip(base, tiny):
        rows += [b, b + 0.01 * d]
    data = Dataset(np.array(rows))
    I = [0] + [2 + 2 * i for i in range(49)]
    J = [1] + [3 + 2 * i for i in range(49)]
    T = DifferenceSet(data, I, J)
    params = MomentParams(t=2, k=1, M=1.0, alpha=0.2)
    # threshold 6 * 32 * 50 = 9600 < 100^2
    res = run_filter(T, params, seed=5)
    assert res.threshold == 9600.0
    assert res.trace[0]["support"] == [0]
    assert res.trace[0]["value"] == pytest.approx(10000.0, rel=1e-6)
    assert res.iterations in (1, 2)
    assert (0, 1) not in res.retained.pairs
    assert len(res.retained) == 49


@pytest.mark.parametrize(
    "n_init, n_cur, n_overlap, alpha, expected",
    [(100, 60, 8, 0.3, 0.071), (50, 50, 50, 0.2, 1 - 0.04 / 6), (40, 0, 0, 0.3, 0.0)],
)
def test_filter_potential_examples(n_init, n_cur, n_overlap, alpha, expected):
    data = Dataset(np.zeros((30, 1)))
    Iall, Jall = np.triu_indices(30, 1)
    cur = np.arange(n_cur)
    good = np.concatenate([np.arange(n_overlap), np.arange(n_cur, n_cur + 10)])
    Tc = DifferenceSet(data, Iall[cur], Jall[cur])
    Tg = DifferenceSet(data, Iall[good], Jall[good])
    assert filter_potential(Tc, Tg, n_init, alpha) == pytest.approx(expected, abs=1e-12)


def active_scenario(seed, m=120):
    """Scenario small enough to run often, with a bound the filter actually hits."""
    cfg = ScenarioConfig(n=8, m=m, k=2, t=2, alpha=0.25, M=1.0, mu_norm=6.0, adversary="sparse_mixture", seed=seed)
    data, mu = gen_corrupted(cfg)
    return data, mu, cfg.params()


def test_filter_invariants_on_active_run():
    data, _, params = active_scenario(0)
    T = difference_pairs(data)
    res = run_filter(T, params, seed=3, config=FilterConfig(moment_bound=2.0), good=inlier_pairs(data))
    assert res.iterations > 0
    sizes = [len(T)] + [r["remaining"] for r in res.trace]
    assert all(b < a for a, b in zip(sizes, sizes[1:]))
    assert res.iterations <= len(T)
    assert set(res.retained.pairs) <= set(T.pairs)
    # post-condition holds for every k-sparse direction (independent eigensolve)
    D = res.retained.differences()
    assert naive_sparse_max_t2(D, params.k) <= res.threshold * (1 + 1e-12)


def test_filter_is_deterministic():
    data, _, params = active_scenario(1)
    T = difference_pairs(data)
    cfg = FilterConfig(moment_bound=2.0)
    a = dp_filter(T, params, seed=9, config=cfg)
    b = dp_filter(T, params, seed=9, config=cfg)
    np.testing.assert_array_equal(a.I, b.I)
    np.testing.assert_array_equal(a.J, b.J)


def test_soft_cap_aborts():
    data, _, params = active_scenario(2)
    with pytest.raises(FilterAbort):
        run_filter(difference_pairs(data), params, config=FilterConfig(moment_bound=2.0, soft_cap=1))


def test_trace_written_as_jsonl(tmp_path):
    data, _, params = active_scenario(3)
    path = tmp_path / "trace.jsonl"
    res = run_filter(difference_pairs(data), params, seed=1, config=FilterConfig(moment_bound=2.0, trace_path=str(path)), good=inlier_pairs(data))
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(recs) == res.iterations
    assert {"iteration", "support", "value", "removed", "remaining", "delta"} <= set(recs[0])


def test_t4_filter_uses_ascent():
    cfg = ScenarioConfig(n=4, m=40, k=1, t=4, alpha=0.25, M=3.0, mu_norm=5.0, adversary="far_cluster", seed=4)
    data, _ = gen_corrupted(cfg)
    res = run_filter(difference_pairs(data), cfg.params(), seed=2, config=FilterConfig(moment_bound=12.0))
    D = res.retained.differences()
    assert res.iterations > 0
    assert not res.final.exact
    assert np.max(np.sum(D**4, axis=0)) <= res.threshold


def test_inlier_retention_and_potential_drift():
    """Retention of half the inlier pairs in most runs; the potential does not drift down."""
    kept, increments = [], []
    for trial in range(30):
        data, _, params = active_scenario(100 + trial)
        Tg = inlier_pairs(data)
        res = run_filter(difference_pairs(data), params, seed=trial, config=FilterConfig(moment_bound=2.0), good=Tg)
        overlap = np.isin(Tg.keys(), res.retained.keys()).sum()
        kept.append(overlap >= len(Tg) / 2)
        increments.extend(np.diff(res.potentials))
    assert np.mean(kept) >= 2 / 3
    inc = np.asarray(increments)
    se = inc.std(ddof=1) / math.sqrt(inc.size)
    assert inc.mean() >= -3 * se
