"""Command line entry point: ``generate``, ``estimate``, ``verify``, ``bench``.

Settings come from an optional ``--config`` key/value file (``key = value``,
``#`` comments) and are overridden by flags.  ``LDSPARSE_SEED`` supplies the
default seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .. import _accel
from ..core import MomentParams, ParameterError, load_dataset, write_csv, write_jsonl, PairGraph
from ..estimator import PipelineConfig, default_rounds, estimate_list, min_list_error
from .scenarios import ADVERSARIES, ScenarioConfig, gaussian_moment_bound, gen_corrupted
from .verify import check_graph_instance, verify_lemmas

log = logging.getLogger("ldsparse")

_TYPES = {
    "n": int,
    "m": int,
    "k": int,
    "t": int,
    "alpha": float,
    "M": float,
    "mu_norm": float,
    "adversary": str,
    "trials": int,
    "seed": int,
    "rounds": int,
    "trace": str,
    "enum_budget": int,
    "workers": int,
    "moment_bound": float,
    "delta_constant": float,
    "instances": int,
}


def read_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, val = (s.strip() for s in line.split(sep, 1))
                break
        else:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _TYPES[key](val)
    return out


def _settings(args) -> dict:
    s = read_config(getattr(args, "config", None))
    for key in _TYPES:
        val = getattr(args, key, None)
        if val is not None:
            s[key] = val
    if "seed" not in s:
        s["seed"] = int(os.environ.get("LDSPARSE_SEED", "0"))
    return s


def _scenario(s: dict) -> ScenarioConfig:
    keys = ("n", "m", "k", "t", "alpha", "M", "mu_norm", "adversary", "trials", "seed")
    return ScenarioConfig(**{k: s[k] for k in keys if k in s})


def _params(s: dict) -> MomentParams:
    missing = [k for k in ("k", "alpha") if k not in s]
    if missing:
        raise ParameterError(f"missing settings: {', '.join(missing)}")
    t = s.get("t", 2)
    return MomentParams(t=t, k=s["k"], M=s.get("M", gaussian_moment_bound(t)), alpha=s["alpha"])


def _pipeline_config(s: dict) -> PipelineConfig:
    kw = {}
    if "moment_bound" in s:
        kw["moment_bound"] = s["moment_bound"]
    if "delta_constant" in s:
        kw["delta_constant"] = s["delta_constant"]
    if "enum_budget" in s:
        kw["enum_budget"] = s["enum_budget"]
    if s.get("trace"):
        kw["trace_path"] = s["trace"]
    return PipelineConfig(**kw)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    s = _settings(args)
    cfg = _scenario(s)
    data, mu = gen_corrupted(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "jsonl":
        write_jsonl(data, out / "data.jsonl")
    else:
        write_csv(data, out / "data.csv")
    (out / "mu_true.json").write_text(json.dumps({"mu_true": mu.tolist(), "scenario": cfg.to_dict()}, indent=2))
    print(f"wrote {data.m} samples ({int(data.inlier_mask.sum())} inliers) to {out}")
    return 0


def _load_mu(path: str | None):
    if not path:
        return None
    obj = json.loads(Path(path).read_text())
    return np.asarray(obj["mu_true"] if isinstance(obj, dict) else obj, dtype=np.float64)


def cmd_estimate(args) -> int:
    s = _settings(args)
    data = load_dataset(args.data)
    params = _params(s)
    config = _pipeline_config(s)
    rounds = s.get("rounds") or default_rounds(params.alpha)
    t0 = time.perf_counter()
    lst = estimate_list(data, params, rounds=rounds, seed=s["seed"], config=config, workers=s.get("workers", 1))
    elapsed = time.perf_counter() - t0
    Path(args.out).write_text(lst.to_json())
    metrics = {
        "rounds": rounds,
        "list_size": len(lst),
        "fail_count": lst.fail_count,
        "seconds": elapsed,
        "backend": _accel.backend(),
    }
    mu = _load_mu(args.mu_true)
    if mu is not None:
        metrics["min_list_error"] = min_list_error(lst, mu)
        metrics["sample_mean_error"] = float(np.linalg.norm(data.samples.mean(axis=0) - mu))
    if args.metrics:
        Path(args.metrics).write_text(json.dumps(metrics, indent=2))
    print(json.dumps(metrics))
    return 0


def cmd_verify(args) -> int:
    s = _settings(args)
    if args.graph:
        if not args.data:
            raise ParameterError("--graph needs --data")
        data = load_dataset(args.data)
        G = PairGraph.from_json(json.loads(Path(args.graph).read_text()))
        report = check_graph_instance(data, G, s.get("t", 2), s.get("k", 1), args.gamma, s["seed"])
    else:
        report = verify_lemmas(s["seed"], s.get("instances", 200))
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    for name, entry in report.items():
        if isinstance(entry, dict):
            print(f"{'PASS' if entry['passed'] else 'FAIL'} {name}: {entry['checks']} checks, {entry['failures']} failures")
    return 0 if report["passed"] else 1


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def run_trial(cfg: ScenarioConfig, rounds: int | None, config: PipelineConfig, workers: int = 1) -> dict:
    data, mu = gen_corrupted(cfg)
    params = cfg.params()
    t0 = time.perf_counter()
    lst = estimate_list(data, params, rounds=rounds, seed=cfg.seed, config=config, workers=workers)
    return {
        "min_list_error": min_list_error(lst, mu),
        "sample_mean_error": float(np.linalg.norm(data.samples.mean(axis=0) - mu)),
        "list_size": len(lst),
        "fail_count": lst.fail_count,
        "seconds": time.perf_counter() - t0,
    }


def cmd_bench(args) -> int:
    s = _settings(args)
    base = _scenario(s)
    config = _pipeline_config(s)
    alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else [base.alpha]
    advs = args.adversaries.split(",") if args.adversaries else [base.adversary]
    fields = ["alpha", "adversary", "trial", "seed", "min_list_error", "sample_mean_error", "list_size", "fail_count", "seconds"]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=fields)
        w.writeheader()
        for alpha in alphas:
            for adv in advs:
                for trial in range(base.trials):
                    cfg = ScenarioConfig(**{**base.to_dict(), "alpha": alpha, "adversary": adv, "M": base.M if "M" in s else None, "seed": trial_seed(base.seed, trial)})
                    row = run_trial(cfg, s.get("rounds"), config, s.get("workers", 1))
                    w.writerow({"alpha": alpha, "adversary": adv, "trial": trial, "seed": cfg.seed, **row})
                    out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--mu-norm", dest="mu_norm", type=float)
    p.add_argument("--adversary", choices=ADVERSARIES)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--trace", help="append filter trace JSON-lines here")
    p.add_argument("--enum-budget", dest="enum_budget", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--moment-bound", dest="moment_bound", type=float, help="override the filter's per-pair moment bound")
    p.add_argument("--delta-constant", dest="delta_constant", type=float, help="denominator in delta = alpha^3 / c (default 4608)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldsparse", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a corrupted scenario to disk")
    _common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="build a candidate list for a dataset")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--mu-true", help="JSON with the true mean, enables error metrics")
    p.add_argument("--out", required=True, help="EstimateList JSON path")
    p.add_argument("--metrics", help="metrics JSON path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="run the lemma checks")
    _common(p)
    p.add_argument("--instances", type=int)
    p.add_argument("--graph", help="JSON edge list to check instead of random instances")
    p.add_argument("--data", help="dataset for --graph")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="sweep scenarios and write a CSV of errors")
    _common(p)
    p.add_argument("--alphas", help="comma-separated alpha values")
    p.add_argument("--adversaries", help="comma-separated adversaries")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
