"""Brute-force checks of the graph/rounding inequalities on small random instances.

Every check compares two independently computed numbers and records the worst
slack.  Failures become report entries carrying a JSON-serialisable
counterexample; nothing here raises on a failed inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..core import Dataset, PairGraph, ParameterError, supports
from ..graph import overlap_graph, prune

TOL = 1e-9

LEMMAS = (
    "clique_mean",  # clique in a bounded-moment graph has a close mean
    "overlap_moments",  # overlap graph inherits bounded moments
    "overlap_density",  # few non-overlap pairs in a random neighbourhood
    "overlap_identity",  # triple-count identity behind the density bound
    "pruning",  # pruning a nearly-complete W yields a big clique of the overlap graph
    "subset_mean",  # large subset has a close mean
    "submartingale",  # min of a bounded submartingale stays high
)


@dataclass
class LemmaResult:
    name: str
    checks: int = 0
    failures: int = 0
    worst_slack: float = math.inf
    counterexamples: list = field(default_factory=list)

    def record(self, lhs: float, rhs: float, dump=None, max_dumps: int = 3) -> bool:
        self.checks += 1
        slack = rhs - lhs
        self.worst_slack = min(self.worst_slack, slack / max(1.0, abs(rhs)))
        ok = lhs <= rhs + TOL * max(1.0, abs(rhs))
        if not ok:
            self.failures += 1
            if dump is not None and len(self.counterexamples) < max_dumps:
                entry = dict(dump() if callable(dump) else dump)
                entry.update(lhs=float(lhs), rhs=float(rhs))
                self.counterexamples.append(entry)
        return ok

    @property
    def passed(self) -> bool:
        return self.checks > 0 and self.failures == 0

    def to_dict(self) -> dict:
        return {
            "checks": self.checks,
            "failures": self.failures,
            "passed": self.passed,
            "worst_relative_slack": None if math.isinf(self.worst_slack) else self.worst_slack,
            "counterexamples": self.counterexamples,
        }


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    X: np.ndarray
    A: np.ndarray
    clique: np.ndarray
    t: int
    k: int

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def dump(self) -> dict:
        return {
            "points": self.X.tolist(),
            "graph": PairGraph(self.m, self.A).to_json(),
            "clique": self.clique.tolist(),
            "t": self.t,
            "k": self.k,
        }


def random_instance(rng: np.random.Generator, max_m: int = 40, max_n: int = 8, max_k: int = 3) -> Instance:
    m = int(rng.integers(6, max_m + 1))
    n = int(rng.integers(2, max_n + 1))
    k = int(rng.integers(1, min(max_k, n) + 1))
    t = int(rng.choice([2, 4]))
    centers = rng.normal(scale=3.0, size=(int(rng.integers(1, 4)), n))
    X = centers[rng.integers(centers.shape[0], size=m)] + rng.standard_normal((m, n))
    p = rng.uniform(0.05, 0.6)
    A = np.triu(rng.random((m, m)) < p, 1)
    size = int(rng.integers(2, max(3, m // 2) + 1))
    clique = np.sort(rng.choice(m, size=size, replace=False))
    A[np.ix_(clique, clique)] = True
    A = np.triu(A, 1)
    A = A | A.T
    return Instance(X, A, clique, t, k)


def directions(rng: np.random.Generator, n: int, k: int, extra=(), per_support: int = 3) -> np.ndarray:
    """Unit vectors on every size-k support: random ones plus ``extra`` restricted to it."""
    out = []
    for S in supports(n, k):
        for _ in range(per_support):
            v = np.zeros(n)
            v[S] = rng.standard_normal(k)
            out.append(v / np.linalg.norm(v))
        for e in extra:
            v = np.zeros(n)
            v[S] = e[S]
            nv = np.linalg.norm(v)
            if nv > 0:
                out.append(v / nv)
    return np.array(out)


def edge_moments(X: np.ndarray, A: np.ndarray, V: np.ndarray, t: int) -> np.ndarray:
    """``(1/m^2) sum_{i<j, A_ij} <v, x_i - x_j>^t`` for every row v of V."""
    m = X.shape[0]
    I, J = np.nonzero(np.triu(A, 1))
    P = X @ V.T
    return np.sum((P[I] - P[J]) ** t, axis=0) / m**2


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------


def check_clique_mean(inst: Instance, rng, res: LemmaResult) -> None:
    C = inst.clique
    g = int(rng.integers(1, C.size + 1))
    Cg = np.sort(rng.choice(C, size=g, replace=False))
    alpha = Cg.size / inst.m
    diff = inst.X[C].mean(axis=0) - inst.X[Cg].mean(axis=0)
    V = directions(rng, inst.n, inst.k, extra=[diff])
    gm = edge_moments(inst.X, inst.A, V, inst.t)
    lhs = (V @ diff) ** inst.t
    rhs = 2.0 * gm / alpha**2
    for i in range(V.shape[0]):
        res.record(lhs[i], rhs[i], lambda: {**inst.dump(), "good": Cg.tolist(), "direction": V[i].tolist()})


def check_overlap_moments(inst: Instance, gamma: float, rng, res: LemmaResult) -> None:
    R = overlap_graph(PairGraph(inst.m, inst.A), gamma).adjacency
    V = directions(rng, inst.n, inst.k)
    g_G = edge_moments(inst.X, inst.A, V, inst.t)
    g_R = edge_moments(inst.X, R, V, inst.t)
    rhs = 2.0 * 2.0**inst.t * g_G / gamma
    for i in range(V.shape[0]):
        res.record(g_R[i], rhs[i], lambda: {**inst.dump(), "gamma": gamma, "direction": V[i].tolist()})


def _neighborhood_nonadjacent_counts(A: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Per vertex x: unordered pairs {y, z} of G-neighbours of x that are not R-adjacent."""
    m = A.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for x in range(m):
        nb = np.flatnonzero(A[x])
        sub = R[np.ix_(nb, nb)]
        out[x] = nb.size * (nb.size - 1) // 2 - int(np.triu(sub, 1).sum())
    return out


def _triple_count_bruteforce(A: np.ndarray, R: np.ndarray) -> int:
    """Sum over non-R-adjacent pairs {y, z} of their common G-neighbours, by plain loops."""
    m = A.shape[0]
    nbrs = [set(np.flatnonzero(A[i]).tolist()) for i in range(m)]
    total = 0
    for y, z in combinations(range(m), 2):
        if not R[y, z]:
            total += len(nbrs[y] & nbrs[z])
    return total


def check_overlap_density(inst: Instance, gamma: float, res: LemmaResult, ident: LemmaResult) -> None:
    R = overlap_graph(PairGraph(inst.m, inst.A), gamma).adjacency
    per_vertex = _neighborhood_nonadjacent_counts(inst.A, R)
    avg = per_vertex.mean()
    res.record(avg, gamma * inst.m**2, lambda: {**inst.dump(), "gamma": gamma})
    brute = _triple_count_bruteforce(inst.A, R)
    total = int(per_vertex.sum())
    # identity: both sides count the same triples; record |difference| <= 0
    ident.record(abs(total - brute), 0.0, lambda: {**inst.dump(), "gamma": gamma, "lhs_sum": total, "rhs_sum": brute})


def near_clique_instance(rng: np.random.Generator, max_m: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Graph plus a vertex set W that is complete except for at most |W|^2/36 missing pairs.

    Missing pairs are concentrated on a few vertices so pruning has work to do.
    """
    m = int(rng.integers(8, max_m + 1))
    A = np.triu(rng.random((m, m)) < rng.uniform(0.0, 0.5), 1)
    w = int(rng.integers(6, m + 1))
    W = np.sort(rng.choice(m, size=w, replace=False))
    A[np.ix_(W, W)] = True
    A = np.triu(A, 1)
    A = A | A.T
    budget = int(rng.integers(0, w * w // 36 + 1))
    hubs = rng.choice(W, size=int(rng.integers(1, 3)), replace=False)
    removed = 0
    for h in hubs:
        others = rng.permutation(W[W != h])
        for o in others:
            if removed >= budget:
                break
            if A[h, o]:
                A[h, o] = A[o, h] = False
                removed += 1
    return A, W


def check_pruning(A: np.ndarray, W: np.ndarray, res: LemmaResult) -> bool:
    """Returns False when the instance violates the lemma's hypothesis (check skipped)."""
    m = A.shape[0]
    beta = W.size / m
    sub = A[np.ix_(W, W)]
    missing = W.size * (W.size - 1) // 2 - int(np.triu(sub, 1).sum())
    gamma = missing / m**2
    if gamma > beta**2 / 36.0:
        return False
    G = PairGraph(m, A)
    Wp = prune(G, W)
    dump = lambda: {"graph": G.to_json(), "W": W.tolist(), "W_pruned": Wp.tolist()}  # noqa: E731
    res.record(W.size - (6.0 * gamma / beta) * m, float(Wp.size), dump)
    # clique in R_{beta/3}(G): every pair in W' shares >= (beta/3) m neighbours in G
    if Wp.size >= 2:
        common = A[Wp].astype(np.int64) @ A[Wp].T.astype(np.int64)
        iu = np.triu_indices(Wp.size, 1)
        worst = float(common[iu].min())
        res.record((beta / 3.0) * m, worst, dump)
    return True


def check_subset_mean(rng: np.random.Generator, res: LemmaResult, max_m: int = 40, max_n: int = 8, max_k: int = 3) -> None:
    m = int(rng.integers(2, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    k = int(rng.integers(1, min(max_k, n) + 1))
    t = int(rng.choice([2, 4]))
    S = rng.standard_normal((m, n)) * rng.uniform(0.5, 3.0, size=n) + rng.normal(size=n)
    alpha = float(rng.uniform(0.05, 1.0))
    size = max(1, math.ceil(alpha * m))
    T = rng.choice(m, size=size, replace=False)
    mu_S = S.mean(axis=0)
    mu_T = S[T].mean(axis=0)
    V = directions(rng, n, k, extra=[mu_S - mu_T])
    M_v = np.mean(((S - mu_S) @ V.T) ** t, axis=0)
    lhs = ((mu_S - mu_T) @ V.T) ** t
    rhs = M_v / alpha
    for i in range(V.shape[0]):
        res.record(lhs[i], rhs[i], lambda: {"points": S.tolist(), "subset": T.tolist(), "alpha": alpha, "t": t, "direction": V[i].tolist()})


# ---------------------------------------------------------------------------
# bounded submartingales
# ---------------------------------------------------------------------------


def grid_walk_min(x0: int, levels: int, p_up: float, steps: int, trials: int, rng) -> np.ndarray:
    """Minimum over ``steps`` of a +-1 walk on {0..levels} absorbed at both ends, scaled to [0, 1].

    With ``p_up >= 1/2`` the scaled walk is a submartingale bounded in [0, 1].
    """
    pos = np.full(trials, x0, dtype=np.int64)
    lo = pos.copy()
    for _ in range(steps - 1):
        live = (pos > 0) & (pos < levels)
        step = np.where(rng.random(trials) < p_up, 1, -1)
        pos = np.where(live, pos + step, pos)
        lo = np.minimum(lo, pos)
    return lo / levels


def check_submartingale(rng: np.random.Generator, res: LemmaResult, trials: int = 4000) -> None:
    # constant process: P[min >= t] = 1
    res.record((0.9 - 0.5) / (1 - 0.5), 1.0, {"process": "constant 0.9", "t": 0.5})
    levels = int(rng.integers(4, 21))
    x0 = int(rng.integers(1, levels))
    p_up = float(rng.uniform(0.5, 0.65))
    steps = int(rng.integers(2, 60))
    thr = float(rng.uniform(0.05, 0.95))
    lows = grid_walk_min(x0, levels, p_up, steps, trials, rng)
    hit = lows >= thr
    p_hat = hit.mean()
    se = math.sqrt(max(p_hat * (1 - p_hat), 1.0 / trials) / trials)
    bound = (x0 / levels - thr) / (1 - thr)
    res.record(bound - 3 * se, p_hat, {"process": "grid walk", "levels": levels, "x0": x0, "p_up": p_up, "steps": steps, "t": thr, "p_hat": p_hat})


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def verify_lemmas(seed: int = 0, instances: int = 200, max_m: int = 40, max_n: int = 8, max_k: int = 3) -> dict:
    """Run every check on ``instances`` random instances; returns a JSON-ready report."""
    if instances < 1:
        raise ParameterError("instances must be >= 1")
    results = {name: LemmaResult(name) for name in LEMMAS}
    skipped_pruning = 0
    for i in range(int(instances)):
        rng = np.random.default_rng([int(seed), i])
        inst = random_instance(rng, max_m, max_n, max_k)
        check_clique_mean(inst, rng, results["clique_mean"])
        gamma = float(rng.uniform(0.01, 0.5))
        check_overlap_moments(inst, gamma, rng, results["overlap_moments"])
        check_overlap_density(inst, gamma, results["overlap_density"], results["overlap_identity"])
        A, W = near_clique_instance(rng, max_m)
        if not check_pruning(A, W, results["pruning"]):
            skipped_pruning += 1
        check_subset_mean(rng, results["subset_mean"], max_m, max_n, max_k)
        check_submartingale(rng, results["submartingale"])
    report = {name: r.to_dict() for name, r in results.items()}
    report["pruning"]["skipped_instances"] = skipped_pruning
    report["instances"] = int(instances)
    report["seed"] = int(seed)
    report["passed"] = all(r.passed for r in results.values())
    return report


def check_graph_instance(data: Dataset, G: PairGraph, t: int, k: int, gamma: float, seed: int = 0) -> dict:
    """Overlap-graph checks on a user-supplied dataset and graph."""
    if G.vertex_count != data.m:
        raise ParameterError("graph and dataset disagree on m")
    rng = np.random.default_rng(seed)
    inst = Instance(data.samples, G.adjacency, np.arange(0), t, k)
    results = {name: LemmaResult(name) for name in ("overlap_moments", "overlap_density", "overlap_identity")}
    check_overlap_moments(inst, gamma, rng, results["overlap_moments"])
    check_overlap_density(inst, gamma, results["overlap_density"], results["overlap_identity"])
    report = {name: r.to_dict() for name, r in results.items()}
    report["passed"] = all(r.passed for r in results.values())
    return report
