import csv
import json
import math

import numpy as np
import pytest

from ldsparse.core import ParameterError, load_dataset, supports
from ldsparse.harness import verify
from ldsparse.harness.cli import main, read_config, trial_seed
from ldsparse.harness.scenarios import (
    ADVERSARIES,
    ScenarioConfig,
    gaussian_moment_bound,
    gen_corrupted,
    random_signed_permutation,
    signed_permutation_bilinear,
    sparse_mean,
)


@pytest.mark.parametrize("adversary", ADVERSARIES)
def test_mask_counts_and_shape(adversary):
    cfg = ScenarioConfig(n=6, m=50, k=2, alpha=0.2, adversary=adversary, seed=1)
    data, mu = gen_corrupted(cfg)
    assert data.samples.shape == (50, 6)
    assert int(data.inlier_mask.sum()) == 10
    assert np.count_nonzero(mu) == 2
    assert np.linalg.norm(mu) == pytest.approx(cfg.mu_norm)


def test_sparse_mixture_decoys():
    cfg = ScenarioConfig(n=6, m=200, k=2, alpha=0.25, mu_norm=50.0, seed=3)
    data, _ = gen_corrupted(cfg)
    bad = data.samples[~data.inlier_mask]
    # decoy coordinates are 0 or +-50/sqrt(2); unit noise does not move the rounded pattern
    patterns = np.round(bad / (50.0 / math.sqrt(2)))
    assert len({tuple(r) for r in patterns}) == math.floor(1 / 0.25) - 1 == 3


def test_far_cluster_small_example():
    cfg = ScenarioConfig(n=3, m=10, k=1, alpha=0.49, adversary="far_cluster", seed=0)
    data, mu = gen_corrupted(cfg)
    assert int(data.inlier_mask.sum()) == 4
    bad = data.samples[~data.inlier_mask]
    assert bad.shape[0] == 6 and np.all(bad == bad[0])
    assert np.linalg.norm(bad[0] - mu) == pytest.approx(10 * cfg.mu_norm)


def test_mirror_shift_reflects_through_minus_mu():
    cfg = ScenarioConfig(n=4, m=40, k=2, alpha=0.25, adversary="mirror_shift", seed=2)
    data, mu = gen_corrupted(cfg)
    good = data.samples[data.inlier_mask]
    bad = data.samples[~data.inlier_mask]
    reflected = {tuple(np.round(-2 * mu - b, 9)) for b in bad}
    assert reflected == {tuple(np.round(g, 9)) for g in good}


def test_generation_is_deterministic():
    cfg = ScenarioConfig(seed=11)
    (a, mu_a), (b, mu_b) = gen_corrupted(cfg), gen_corrupted(cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(mu_a, mu_b)
    c, _ = gen_corrupted(ScenarioConfig(seed=12))
    assert not np.array_equal(a.samples, c.samples)


def test_inlier_sparse_covariance_is_moderate():
    cfg = ScenarioConfig(n=8, m=1000, k=2, alpha=0.4, seed=0)
    data, mu = gen_corrupted(cfg)
    Y = data.samples[data.inlier_mask] - mu
    C = Y.T @ Y / Y.shape[0]
    top = max(np.linalg.eigvalsh(C[np.ix_(S, S)])[-1] for S in supports(8, 2))
    assert top <= 8.0


def test_scenario_validation():
    assert ScenarioConfig(t=4).M == gaussian_moment_bound(4) == 16.0
    for bad in (dict(adversary="nope"), dict(k=20, n=4), dict(trials=0), dict(alpha=0.6), dict(mu_norm=-1)):
        with pytest.raises(ParameterError):
            ScenarioConfig(**bad)
    with pytest.raises(ParameterError):
        gen_corrupted(ScenarioConfig(m=5, alpha=0.2))


def test_sparse_mean_shape(rng):
    mu = sparse_mean(10, 3, 6.0, rng)
    assert np.count_nonzero(mu) == 3
    assert np.allclose(np.abs(mu[mu != 0]), 6.0 / math.sqrt(3))


def test_signed_permutation_structure():
    for seed in range(5):
        assert random_signed_permutation(1, seed)[0, 0] in (-1.0, 1.0)
        A = random_signed_permutation(7, seed)
        assert np.all(np.count_nonzero(A, axis=0) == 1)
        assert np.all(np.count_nonzero(A, axis=1) == 1)
        assert set(np.unique(A)) <= {-1.0, 0.0, 1.0}


def test_bilinear_matches_explicit_matrices():
    u = np.array([1.0, -2.0, 0.5])
    v = np.array([0.3, 0.0, 4.0])
    z = signed_permutation_bilinear(u, v, 2000, seed=0)
    assert z.shape == (2000,)
    # every value must be attainable by some signed permutation
    from itertools import permutations, product

    attainable = {
        round(sum(s[i] * u[i] * v[p[i]] for i in range(3)), 9)
        for p in permutations(range(3))
        for s in product((-1, 1), repeat=3)
    }
    assert {round(x, 9) for x in z} <= attainable


def test_bilinear_variance_small_case():
    u = np.array([1.0, 2.0])
    v = np.array([3.0, -1.0])
    z = signed_permutation_bilinear(u, v, 200_000, seed=1)
    expected = np.dot(u, u) * np.dot(v, v) / 2
    assert z.var() == pytest.approx(expected, rel=0.02)


def test_verify_rejects_zero_instances():
    with pytest.raises(ParameterError):
        verify.verify_lemmas(0, instances=0)


def test_verify_report_shape():
    rep = verify.verify_lemmas(3, instances=10)
    assert rep["passed"] is True
    assert set(verify.LEMMAS) <= set(rep)


def test_trial_seeds_are_distinct():
    seeds = {trial_seed(0, t) for t in range(100)}
    assert len(seeds) == 100


# --- CLI ---------------------------------------------------------------------


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# scenario\nn = 6\nm: 40\nmu-norm = 2.5  # trailing\nadversary = far_cluster\n")
    assert read_config(str(p)) == {"n": 6, "m": 40, "mu_norm": 2.5, "adversary": "far_cluster"}
    p.write_text("bogus = 1\n")
    with pytest.raises(ParameterError):
        read_config(str(p))


SMALL = ["--n", "6", "--m", "40", "--k", "2", "--alpha", "0.25", "--mu-norm", "4"]


def test_cli_generate_estimate_roundtrip(tmp_path, capsys):
    assert main(["generate", *SMALL, "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    data = load_dataset(tmp_path / "data.csv")
    assert data.m == 40 and int(data.inlier_mask.sum()) == 10
    meta = json.loads((tmp_path / "mu_true.json").read_text())
    assert len(meta["mu_true"]) == 6 and meta["scenario"]["m"] == 40

    out, met = tmp_path / "list.json", tmp_path / "metrics.json"
    rc = main([
        "estimate", "--k", "2", "--alpha", "0.25", "--rounds", "5", "--data", str(tmp_path / "data.csv"),
        "--mu-true", str(tmp_path / "mu_true.json"), "--out", str(out), "--metrics", str(met),
    ])
    assert rc == 0
    lst = json.loads(out.read_text())
    metrics = json.loads(met.read_text())
    assert len(lst["candidates"]) + lst["fail_count"] <= 5
    assert metrics["rounds"] == 5 and "min_list_error" in metrics


def test_cli_generate_jsonl_and_config(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("n = 5\nm = 30\nk = 1\nalpha = 0.3\n")
    assert main(["generate", "--config", str(cfg), "--n", "4", "--format", "jsonl", "--out-dir", str(tmp_path)]) == 0
    data = load_dataset(tmp_path / "data.jsonl")
    assert data.samples.shape == (30, 4)


def test_cli_trace(tmp_path):
    main(["generate", *SMALL, "--out-dir", str(tmp_path)])
    trace = tmp_path / "trace.jsonl"
    rc = main([
        "estimate", "--k", "2", "--alpha", "0.25", "--rounds", "2", "--moment-bound", "0.5",
        "--data", str(tmp_path / "data.csv"), "--out", str(tmp_path / "l.json"), "--trace", str(trace),
    ])
    assert rc == 0
    lines = trace.read_text().splitlines()
    assert lines and {"iteration", "support", "value", "removed", "remaining"} <= set(json.loads(lines[0]))


def test_cli_verify(tmp_path, capsys):
    rep = tmp_path / "rep.json"
    assert main(["verify", "--instances", "5", "--out", str(rep)]) == 0
    assert json.loads(rep.read_text())["passed"]
    assert "PASS clique_mean" in capsys.readouterr().out


def test_cli_verify_graph(tmp_path):
    main(["generate", *SMALL, "--out-dir", str(tmp_path)])
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"vertex_count": 40, "edges": [[i, j] for i in range(10) for j in range(i + 1, 10)]}))
    rc = main(["verify", "--graph", str(g), "--data", str(tmp_path / "data.csv"), "--k", "2"])
    assert rc == 0


def test_cli_bench(tmp_path):
    out = tmp_path / "b.csv"
    rc = main([*["bench"], *SMALL, "--rounds", "2", "--trials", "2", "--alphas", "0.2,0.3",
               "--adversaries", "far_cluster,uniform_noise", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 8
    assert {r["adversary"] for r in rows} == {"far_cluster", "uniform_noise"}


def test_cli_parameter_error_exit_code(tmp_path, capsys):
    rc = main(["generate", "--alpha", "0.7", "--out-dir", str(tmp_path)])
    assert rc == 2 and "error:" in capsys.readouterr().err


def test_cli_seed_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LDSPARSE_SEED", "7")
    main(["generate", *SMALL, "--out-dir", str(tmp_path / "a")])
    main(["generate", *SMALL, "--seed", "7", "--out-dir", str(tmp_path / "b")])
    assert (tmp_path / "a" / "data.csv").read_text() == (tmp_path / "b" / "data.csv").read_text()
