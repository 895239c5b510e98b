"""Synthetic corrupted datasets and the random signed permutation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..core import Dataset, MomentParams, ParameterError

ADVERSARIES = ("far_cluster", "sparse_mixture", "mirror_shift", "uniform_noise")


def gaussian_moment_bound(t: int) -> float:
    """``t^(t/2)``, a bound on the t-th moment of a standard Gaussian."""
    return float(t) ** (t / 2)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 16
    m: int = 300
    k: int = 3
    t: int = 2
    alpha: float = 0.2
    M: float | None = None
    mu_norm: float = 8.0
    adversary: str = "sparse_mixture"
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.M is None:
            object.__setattr__(self, "M", gaussian_moment_bound(self.t))
        self.params()  # validates t, k, M, alpha
        if self.n < 1 or self.m < 1:
            raise ParameterError("n and m must be positive")
        if self.k > self.n:
            raise ParameterError(f"k={self.k} exceeds n={self.n}")
        if not self.mu_norm >= 0:
            raise ParameterError("mu_norm must be non-negative")
        if self.adversary not in ADVERSARIES:
            raise ParameterError(f"unknown adversary {self.adversary!r}; choose from {ADVERSARIES}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    def params(self) -> MomentParams:
        return MomentParams(t=self.t, k=self.k, M=self.M, alpha=self.alpha)

    @property
    def inlier_count(self) -> int:
        return math.floor(self.alpha * self.m)

    def to_dict(self) -> dict:
        return asdict(self)


def sparse_mean(n: int, k: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    """Random support, random signs, equal magnitudes ``norm / sqrt(k)``."""
    mu = np.zeros(n)
    idx = rng.choice(n, size=k, replace=False)
    mu[idx] = rng.choice([-1.0, 1.0], size=k) * norm / math.sqrt(k)
    return mu


def _outliers(cfg: ScenarioConfig, inliers: np.ndarray, mu: np.ndarray, count: int, rng) -> np.ndarray:
    n = cfg.n
    if count == 0:
        return np.zeros((0, n))
    if cfg.adversary == "far_cluster":
        u = rng.choice([-1.0, 1.0], size=n) / math.sqrt(n)
        point = mu + 10.0 * cfg.mu_norm * u
        return np.tile(point, (count, 1))
    if cfg.adversary == "sparse_mixture":
        decoys = max(1, math.floor(1.0 / cfg.alpha) - 1)
        means = np.stack([sparse_mean(n, cfg.k, cfg.mu_norm, rng) for _ in range(decoys)])
        labels = np.arange(count) % decoys
        return means[labels] + rng.standard_normal((count, n))
    if cfg.adversary == "mirror_shift":
        src = inliers[np.arange(count) % inliers.shape[0]]
        return -2.0 * mu - src
    # uniform_noise
    width = 10.0 * max(cfg.mu_norm, 1.0)
    return rng.uniform(-width, width, size=(count, n))


def gen_corrupted(cfg: ScenarioConfig) -> tuple[Dataset, np.ndarray]:
    """Inliers from ``N(mu, I)`` plus ``m - floor(alpha m)`` adversarial points.

    Rows are shuffled; the returned dataset carries the inlier mask.
    """
    g = cfg.inlier_count
    if g < 2:
        raise ParameterError(f"floor(alpha*m) = {g} < 2 inliers")
    rng = np.random.default_rng([cfg.seed, 0x5CE7])
    mu = sparse_mean(cfg.n, cfg.k, cfg.mu_norm, rng)
    inliers = mu + rng.standard_normal((g, cfg.n))
    bad = _outliers(cfg, inliers, mu, cfg.m - g, rng)
    X = np.vstack([inliers, bad])
    mask = np.zeros(cfg.m, dtype=bool)
    mask[:g] = True
    perm = rng.permutation(cfg.m)
    return Dataset(X[perm], mask[perm]), mu


def random_signed_permutation(n: int, seed) -> np.ndarray:
    """Uniform permutation matrix with each row multiplied by an independent random sign."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    perm = rng.permutation(n)
    signs = rng.choice([-1.0, 1.0], size=n)
    A = np.zeros((n, n))
    A[np.arange(n), perm] = signs
    return A


def signed_permutation_bilinear(u, v, draws: int, seed) -> np.ndarray:
    """``draws`` samples of ``<u, A v>`` for independent random signed permutations A.

    Row i of A has its single nonzero in column perm[i], so
    ``<u, A v> = sum_i sign_i u_i v[perm_i]``.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n = u.shape[0]
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(np.arange(n), (draws, 1)), axis=1)
    signs = rng.choice([-1.0, 1.0], size=(draws, n))
    return np.sum(signs * u[None, :] * v[perms], axis=1)
