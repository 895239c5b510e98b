"""Time each hot kernel under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

The first numba call (compilation) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from ldsparse import _accel, kernels
from ldsparse.core import supports


def cases(scale: float):
    rng = np.random.default_rng(0)
    m = int(300 * scale)
    n = 16
    X = rng.normal(size=(m, n))
    I, J = np.triu_indices(m, 1)
    p = X @ rng.normal(size=n)
    G = (X[I] - X[J]).T @ (X[I] - X[J])
    S = np.array(supports(n, 3), dtype=np.int64)
    A = np.triu(rng.random((m, m)) < 0.3, 1)
    A = A | A.T
    W = np.flatnonzero(A[0])
    P = rng.normal(size=(2000, 3))
    v0 = np.ones(3) / np.sqrt(3)
    return {
        f"pair_gram (m={m}, n={n})": lambda: kernels.pair_gram(X, I, J),
        f"pair_powers (t=4, {I.size} pairs)": lambda: kernels.pair_powers(p, I, J, 4),
        f"support_top_eig ({len(S)} supports, k=3)": lambda: kernels.support_top_eig(G, S),
        f"common_neighbors (m={m})": lambda: kernels.common_neighbors(A),
        f"prune_mask (|W|={W.size})": lambda: kernels.prune_mask(A, W, 2 * W.size / 3),
        "power_ascent (2000 points, t=4)": lambda: kernels.power_ascent(P, v0, 4),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    work = cases(args.scale)
    print(f"{'kernel':44s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fn in work.items():
        times = {}
        for backend in ("numba", "numpy"):
            _accel.set_backend(backend)
            fn()  # warm-up / compile
            times[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:44s} {times['numba']:10.3f} {times['numpy']:10.3f} {times['numpy'] / times['numba']:8.2f}x")
    _accel.set_backend("numba")


if __name__ == "__main__":
    main()
