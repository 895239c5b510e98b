"""Domain types, sparse-vector helpers and the pair-graph moment."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ParameterError(ValueError):
    """An argument is outside its documented range."""


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """``m`` points in ``R^n`` (rows), with optional ground-truth inlier flags."""

    samples: np.ndarray
    inlier_mask: np.ndarray | None = None

    def __post_init__(self):
        X = np.array(self.samples, dtype=np.float64, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ParameterError(f"samples must be a non-empty m x n matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ParameterError("samples contain non-finite entries")
        X.setflags(write=False)
        object.__setattr__(self, "samples", X)
        if self.inlier_mask is not None:
            mask = np.asarray(self.inlier_mask, dtype=bool).copy()
            if mask.shape != (X.shape[0],):
                raise ParameterError(f"inlier_mask must have length {X.shape[0]}, got {mask.shape}")
            mask.setflags(write=False)
            object.__setattr__(self, "inlier_mask", mask)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class MomentParams:
    """Moment order ``t``, sparsity ``k``, moment bound ``M`` and inlier fraction ``alpha``.

    ``d`` is the degree of the sum-of-squares certificate the bound is meant to
    have; nothing here consumes it.
    """

    t: int
    k: int
    M: float
    alpha: float
    d: int | None = None

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 2 or self.t % 2:
            raise ParameterError(f"t must be an even integer >= 2, got {self.t}")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k}")
        if not self.M > 0:
            raise ParameterError(f"M must be positive, got {self.M}")
        if not 0 < self.alpha < 0.5:
            raise ParameterError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "k", int(self.k))

    def check_dimension(self, n: int) -> None:
        if self.k > n:
            raise ParameterError(f"k={self.k} exceeds dimension n={n}")


@dataclass(frozen=True, eq=False)
class SparseDirection:
    """A unit vector stored by its support and the values on it."""

    support: tuple[int, ...]
    values: np.ndarray
    n: int

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (len(support),):
            raise ParameterError("values must align with support")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ParameterError("support indices must be strictly increasing")
        if support and (support[0] < 0 or support[-1] >= self.n):
            raise ParameterError(f"support indices must lie in [0, {self.n})")
        if abs(np.linalg.norm(values) - 1.0) > 1e-12:
            raise ParameterError(f"direction must have unit norm, got {np.linalg.norm(values)!r}")
        values.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_dense(cls, v: np.ndarray) -> "SparseDirection":
        v = np.asarray(v, dtype=np.float64)
        support = np.flatnonzero(v)
        vals = v[support] / np.linalg.norm(v[support])
        return cls(tuple(support.tolist()), vals, v.shape[0])

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[list(self.support)] = self.values
        return out

    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True, eq=False)
class DifferenceSet:
    """Unordered index pairs ``{i, j}`` into ``parent``; stands for ``x_i - x_j``.

    Pairs are kept canonical (``i < j``) and sorted lexicographically.
    """

    parent: Dataset
    I: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        I = np.asarray(self.I, dtype=np.int64)
        J = np.asarray(self.J, dtype=np.int64)
        if I.shape != J.shape or I.ndim != 1:
            raise ParameterError("pair index arrays must be 1-d and equal length")
        lo, hi = np.minimum(I, J), np.maximum(I, J)
        if np.any(lo == hi):
            raise ParameterError("self-pairs are not allowed")
        if lo.size and (lo.min() < 0 or hi.max() >= self.parent.m):
            raise ParameterError("pair index out of range")
        key = lo * self.parent.m + hi
        order = np.argsort(key, kind="stable")
        key = key[order]
        if np.any(key[1:] == key[:-1]):
            raise ParameterError("duplicate pairs")
        lo, hi = lo[order].copy(), hi[order].copy()
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "I", lo)
        object.__setattr__(self, "J", hi)

    def __len__(self) -> int:
        return int(self.I.shape[0])

    @property
    def pairs(self) -> set[tuple[int, int]]:
        return set(zip(self.I.tolist(), self.J.tolist()))

    def subset(self, keep: np.ndarray) -> "DifferenceSet":
        return DifferenceSet(self.parent, self.I[keep], self.J[keep])

    def differences(self) -> np.ndarray:
        X = self.parent.samples
        return X[self.I] - X[self.J]

    def keys(self) -> np.ndarray:
        return self.I * self.parent.m + self.J


@dataclass(frozen=True, eq=False)
class PairGraph:
    """Simple undirected graph on ``range(vertex_count)`` held as a boolean matrix."""

    vertex_count: int
    adjacency: np.ndarray

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=bool, copy=True)
        m = int(self.vertex_count)
        if A.shape != (m, m):
            raise ParameterError(f"adjacency must be {m}x{m}")
        if np.any(np.diag(A)):
            raise ParameterError("self-loops are not allowed")
        if not np.array_equal(A, A.T):
            raise ParameterError("adjacency must be symmetric")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "vertex_count", m)

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[Sequence[int]]) -> "PairGraph":
        A = np.zeros((m, m), dtype=bool)
        for a, b in edges:
            if a == b:
                raise ParameterError("self-loops are not allowed")
            A[a, b] = A[b, a] = True
        return cls(m, A)

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of edges ``(i, j)`` with ``i < j``, lexicographic."""
        I, J = np.nonzero(np.triu(self.adjacency, 1))
        return np.stack([I, J], axis=1)

    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def neighbors(self, x: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[x])

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def to_json(self) -> dict:
        return {"vertex_count": self.vertex_count, "edges": self.edges().tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "PairGraph":
        return cls.from_edges(int(obj["vertex_count"]), obj["edges"])


@dataclass
class EstimateList:
    """Candidate means (each k-sparse), the seed that produced each, and the FAIL count."""

    candidates: list[np.ndarray] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    fail_count: int = 0

    def __len__(self) -> int:
        return len(self.candidates)

    def to_json(self) -> str:
        obj = {
            "candidates": [[float(x) for x in c] for c in self.candidates],
            "seeds": [int(s) for s in self.seeds],
            "fail_count": int(self.fail_count),
        }
        return json.dumps(obj, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "EstimateList":
        obj = json.loads(text)
        return cls(
            [np.asarray(c, dtype=np.float64) for c in obj["candidates"]],
            [int(s) for s in obj["seeds"]],
            int(obj["fail_count"]),
        )


# ---------------------------------------------------------------------------
# sparse-vector helpers
# ---------------------------------------------------------------------------


def _check_k(k: int, n: int) -> None:
    if int(k) != k or not 1 <= k <= n:
        raise ParameterError(f"k must be an integer in [1, {n}], got {k}")


def top_k_indices(x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest |x_i|; ties go to the lower index."""
    x = np.asarray(x, dtype=np.float64)
    _check_k(k, x.shape[0])
    # stable sort on -|x| keeps the lower index first among equal magnitudes
    return np.sort(np.argsort(-np.abs(x), kind="stable")[:k])


def hk_truncate(x: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries of ``x`` and zero the rest."""
    x = np.asarray(x, dtype=np.float64)
    idx = top_k_indices(x, k)
    out = np.zeros_like(x)
    out[idx] = x[idx]
    return out


def two_k_norm(x: np.ndarray, k: int) -> float:
    """sup of <v, x> over k-sparse unit v, i.e. the l2 norm of the top-k magnitudes."""
    x = np.asarray(x, dtype=np.float64)
    idx = top_k_indices(x, k)
    return float(np.linalg.norm(x[idx]))


def supports(n: int, k: int) -> np.ndarray:
    """All size-k supports of ``range(n)`` in lexicographic order, shape (C(n,k), k)."""
    _check_k(k, n)
    return np.array(list(combinations(range(n), k)), dtype=np.int64).reshape(-1, k)


def graph_moment(G: PairGraph, data: Dataset, v: SparseDirection | np.ndarray, t: int) -> float:
    """``(1/m^2) * sum over edges {i,j} of <v, x_i - x_j>^t``, each edge once."""
    if t % 2:
        raise ParameterError("t must be even")
    if G.vertex_count != data.m:
        raise ParameterError("graph and dataset disagree on m")
    vec = v.dense() if isinstance(v, SparseDirection) else np.asarray(v, dtype=np.float64)
    p = data.samples @ vec
    E = G.edges()
    if E.shape[0] == 0:
        return 0.0
    return float(np.sum((p[E[:, 0]] - p[E[:, 1]]) ** t) / data.m**2)


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path: str | Path) -> Dataset:
    """One row per sample; optional header; a column named ``inlier`` becomes the mask."""
    text = Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParameterError(f"{path}: no rows")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    mask = None
    if header is not None and "inlier" in header:
        col = header.index("inlier")
        mask = data[:, col] != 0
        data = np.delete(data, col, axis=1)
    return Dataset(data, mask)


def write_csv(data: Dataset, path: str | Path, with_mask: bool = True) -> None:
    header = [f"x{i}" for i in range(data.n)]
    include = with_mask and data.inlier_mask is not None
    if include:
        header.append("inlier")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, row in enumerate(data.samples):
            out = [repr(float(x)) for x in row]
            if include:
                out.append(str(int(data.inlier_mask[i])))
            w.writerow(out)


def read_jsonl(path: str | Path) -> Dataset:
    """Each line is either a JSON array or ``{"x": [...], "inlier": 0|1}``."""
    rows, flags = [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if isinstance(obj, dict):
            rows.append(obj["x"])
            flags.append(obj.get("inlier"))
        else:
            rows.append(obj)
            flags.append(None)
    mask = None
    if flags and all(f is not None for f in flags):
        mask = np.array([bool(f) for f in flags])
    return Dataset(np.array(rows, dtype=np.float64), mask)


def write_jsonl(data: Dataset, path: str | Path) -> None:
    with open(path, "w") as fh:
        for i, row in enumerate(data.samples):
            rec: dict = {"x": [float(x) for x in row]}
            if data.inlier_mask is not None:
                rec["inlier"] = int(data.inlier_mask[i])
            fh.write(json.dumps(rec) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    p = Path(path)
    if p.suffix in (".jsonl", ".ndjson"):
        return read_jsonl(p)
    return read_csv(p)
