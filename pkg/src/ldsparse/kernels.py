"""Hot numeric kernels, each with a numba and a numpy implementation.

The public names at the bottom dispatch on :func:`ldsparse._accel.use_numba`.
Both paths must agree to floating point round-off; ``tests/test_kernels.py``
holds them to that.
"""

from __future__ import annotations

import numpy as np

from ._accel import njit, use_numba

# ---------------------------------------------------------------------------
# sum of outer products of pair differences
# ---------------------------------------------------------------------------


def _pair_gram_numpy(X, I, J):
    D = X[I] - X[J]
    return D.T @ D


@njit
def _pair_gram_numba(X, I, J):
    n = X.shape[1]
    G = np.zeros((n, n))
    d = np.empty(n)
    for p in range(I.shape[0]):
        a = I[p]
        b = J[p]
        for r in range(n):
            d[r] = X[a, r] - X[b, r]
        for r in range(n):
            dr = d[r]
            if dr == 0.0:
                continue
            for c in range(r, n):
                G[r, c] += dr * d[c]
    for r in range(n):
        for c in range(r):
            G[r, c] = G[c, r]
    return G


# ---------------------------------------------------------------------------
# t-th powers of projected pair differences
# ---------------------------------------------------------------------------


def _pair_powers_numpy(p, I, J, t):
    return (p[I] - p[J]) ** t


@njit
def _pair_powers_numba(p, I, J, t):
    out = np.empty(I.shape[0])
    for q in range(I.shape[0]):
        d = p[I[q]] - p[J[q]]
        acc = 1.0
        for _ in range(t):
            acc *= d
        out[q] = acc
    return out


# ---------------------------------------------------------------------------
# top eigenpair of every principal submatrix indexed by a support
# ---------------------------------------------------------------------------


def _support_top_eig_numpy(G, supports):
    sub = G[supports[:, :, None], supports[:, None, :]]
    w, V = np.linalg.eigh(sub)
    return w[:, -1].copy(), V[:, :, -1].copy()


@njit
def _support_top_eig_numba(G, supports):
    c, k = supports.shape
    vals = np.empty(c)
    vecs = np.empty((c, k))
    sub = np.empty((k, k))
    for s in range(c):
        for a in range(k):
            for b in range(k):
                sub[a, b] = G[supports[s, a], supports[s, b]]
        w, V = np.linalg.eigh(sub)
        vals[s] = w[k - 1]
        for a in range(k):
            vecs[s, a] = V[a, k - 1]
    return vals, vecs


# ---------------------------------------------------------------------------
# common-neighbour counts
# ---------------------------------------------------------------------------


def _common_neighbors_numpy(A):
    Af = A.astype(np.float64)
    return np.rint(Af @ Af).astype(np.int64)


@njit
def _common_neighbors_numba(A):
    # every vertex a adds one to C[x, y] for each pair of its neighbours
    m = A.shape[0]
    C = np.zeros((m, m), dtype=np.int64)
    nb = np.empty(m, dtype=np.int64)
    for a in range(m):
        d = 0
        for x in range(m):
            if A[a, x]:
                nb[d] = x
                d += 1
        for i in range(d):
            row = C[nb[i]]
            for j in range(d):
                row[nb[j]] += 1
    return C


# ---------------------------------------------------------------------------
# low-degree peeling inside a vertex subset
# ---------------------------------------------------------------------------


def _prune_numpy(A, W, threshold):
    sub = A[np.ix_(W, W)].astype(np.int64)
    alive = np.ones(W.shape[0], dtype=np.bool_)
    deg = sub.sum(axis=1)
    while True:
        bad = np.flatnonzero(alive & (deg < threshold))
        if bad.size == 0:
            break
        x = bad[0]
        alive[x] = False
        deg -= sub[x]
    return alive


@njit
def _prune_numba(A, W, threshold):
    w = W.shape[0]
    alive = np.ones(w, dtype=np.bool_)
    deg = np.zeros(w, dtype=np.int64)
    for a in range(w):
        for b in range(w):
            if A[W[a], W[b]]:
                deg[a] += 1
    while True:
        x = -1
        for a in range(w):
            if alive[a] and deg[a] < threshold:
                x = a
                break
        if x < 0:
            break
        alive[x] = False
        for b in range(w):
            if A[W[x], W[b]]:
                deg[b] -= 1
    return alive


# ---------------------------------------------------------------------------
# power ascent of sum_x <v, x>^t on the sphere
# ---------------------------------------------------------------------------


def _ascent_numpy(P, v0, t, iters, tol):
    v = v0 / np.linalg.norm(v0)
    proj = P @ v
    best = float(np.sum(proj**t))
    best_v = v.copy()
    for _ in range(iters):
        g = (proj ** (t - 1)) @ P
        norm = np.linalg.norm(g)
        if norm == 0.0:
            break
        nv = g / norm
        proj = P @ nv
        val = float(np.sum(proj**t))
        step = np.linalg.norm(nv - v)
        v = nv
        if val > best:
            best = val
            best_v = v.copy()
        if step < tol:
            break
    return best_v, best


@njit
def _ascent_numba(P, v0, t, iters, tol):
    N, k = P.shape
    v = v0 / np.sqrt(np.sum(v0 * v0))
    proj = np.empty(N)
    g = np.empty(k)

    def objective(vec):
        s = 0.0
        for i in range(N):
            d = 0.0
            for a in range(k):
                d += P[i, a] * vec[a]
            proj[i] = d
            acc = 1.0
            for _ in range(t):
                acc *= d
            s += acc
        return s

    best = objective(v)
    best_v = v.copy()
    for _ in range(iters):
        for a in range(k):
            g[a] = 0.0
        for i in range(N):
            acc = 1.0
            for _ in range(t - 1):
                acc *= proj[i]
            for a in range(k):
                g[a] += acc * P[i, a]
        norm = np.sqrt(np.sum(g * g))
        if norm == 0.0:
            break
        nv = g / norm
        step = np.sqrt(np.sum((nv - v) ** 2))
        v = nv
        val = objective(v)
        if val > best:
            best = val
            best_v = v.copy()
        if step < tol:
            break
    return best_v, best


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _as_index(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def pair_gram(X, I, J):
    """``sum_p (X[I[p]] - X[J[p]]) (X[I[p]] - X[J[p]])^T``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    I, J = _as_index(I), _as_index(J)
    if use_numba():
        return _pair_gram_numba(X, I, J)
    return _pair_gram_numpy(X, I, J)


def pair_powers(p, I, J, t):
    p = np.ascontiguousarray(p, dtype=np.float64)
    I, J = _as_index(I), _as_index(J)
    if use_numba():
        return _pair_powers_numba(p, I, J, int(t))
    return _pair_powers_numpy(p, I, J, int(t))


def support_top_eig(G, supports):
    """Largest eigenvalue and its eigenvector for each ``G[S, S]``."""
    G = np.ascontiguousarray(G, dtype=np.float64)
    supports = _as_index(supports)
    if use_numba():
        return _support_top_eig_numba(G, supports)
    return _support_top_eig_numpy(G, supports)


def common_neighbors(A):
    A = np.ascontiguousarray(A, dtype=np.bool_)
    if use_numba():
        return _common_neighbors_numba(A)
    return _common_neighbors_numpy(A)


def prune_mask(A, W, threshold):
    """Boolean mask over ``W`` of the vertices that survive peeling."""
    A = np.ascontiguousarray(A, dtype=np.bool_)
    W = _as_index(W)
    if use_numba():
        return _prune_numba(A, W, float(threshold))
    return _prune_numpy(A, W, float(threshold))


def power_ascent(P, v0, t, iters=100, tol=1e-13):
    P = np.ascontiguousarray(P, dtype=np.float64)
    v0 = np.ascontiguousarray(v0, dtype=np.float64)
    if use_numba():
        v, val = _ascent_numba(P, v0, int(t), int(iters), float(tol))
    else:
        v, val = _ascent_numpy(P, v0, int(t), int(iters), float(tol))
    return v, float(val)
