"""nu-one-class SVM with an RBF kernel, solved by SMO.

Dual (libsvm scaling)::

    min_a  1/2 a^T K a
    s.t.   0 <= a_i <= 1,  sum_i a_i = nu * n

Decision value ``f(x) = sum_i a_i K(x_i, x) - rho``; ``f(x) >= 0`` is a member.
At most ``nu * n`` training points sit at the upper bound, and only those can
fall strictly outside the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    aa = np.einsum("ij,ij->i", A, A)[:, None]
    bb = np.einsum("ij,ij->i", B, B)[None, :]
    return np.maximum(aa + bb - 2.0 * A @ B.T, 0.0)


def median_gamma(X: np.ndarray) -> float:
    """RBF width from the median squared pairwise distance: ``1 / median(d^2)``."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 2:
        return 1.0 / max(X.shape[1], 1)
    d2 = sq_distances(X, X)[np.triu_indices(n, k=1)]
    d2 = d2[d2 > 0]
    if d2.size == 0:
        return 1.0 / max(X.shape[1], 1)
    return 1.0 / float(np.median(d2))


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    return np.exp(-gamma * sq_distances(np.asarray(A, float), np.asarray(B, float)))


@dataclass
class OneClassModel:
    support_vectors: np.ndarray
    coef: np.ndarray
    rho: float
    gamma: float
    n_iter: int = 0

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"vector dimension {X.shape[1]} != model dimension {self.dim}")
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.coef - self.rho

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) >= 0.0


def _solve(K: np.ndarray, nu: float, eps: float, max_iter: int):
    n = len(K)
    total = nu * n
    a = np.zeros(n)
    n_full = min(int(np.floor(total)), n)
    a[:n_full] = 1.0
    if n_full < n:
        a[n_full] = total - n_full
    G = K @ a
    diag = np.diag(K)
    it = 0
    for it in range(1, max_iter + 1):
        # maximal violating pair, second-order choice of j (Fan, Chen & Lin 2005)
        up = a < 1.0
        low = a > 0.0
        if not up.any() or not low.any():
            break
        minus_g = -G
        i = int(np.flatnonzero(up)[np.argmax(minus_g[up])])
        gmax = minus_g[i]
        gmin = minus_g[low].min()
        if gmax - gmin < eps:
            break
        cand = np.flatnonzero(low & (minus_g < gmax))
        b = gmax - minus_g[cand]
        quad = diag[i] + diag[cand] - 2.0 * K[i, cand]
        quad = np.where(quad > 1e-12, quad, 1e-12)
        j = int(cand[np.argmax(b * b / quad)])
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        step = (G[j] - G[i]) / eta
        step = min(step, 1.0 - a[i], a[j])
        if step <= 0:
            break
        a[i] += step
        a[j] -= step
        G += step * (K[:, i] - K[:, j])
    return a, G, it


def _rho(a: np.ndarray, G: np.ndarray) -> float:
    free = (a > 0.0) & (a < 1.0)
    if free.any():
        # free vectors lie on the boundary up to eps; the smallest keeps them all inside
        return float(G[free].min())
    at_upper = a >= 1.0
    lb = G[at_upper].max() if at_upper.any() else -np.inf
    ub = G[~at_upper].min() if (~at_upper).any() else np.inf
    if not np.isfinite(lb):
        return float(ub)
    if not np.isfinite(ub):
        return float(lb)
    return float(0.5 * (lb + ub))


def fit_one_class(X, nu: float = 0.1, bandwidth="median", eps: float = 1e-10,
                  max_iter: int = 100_000) -> OneClassModel:
    """Fit the boundary around ``X``; ``bandwidth`` is an RBF gamma or ``"median"``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("cannot fit a one-class model on an empty set")
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must be in (0, 1], got {nu}")
    gamma = median_gamma(X) if bandwidth in (None, "median") else float(bandwidth)
    if gamma <= 0:
        raise ValueError("RBF gamma must be positive")
    K = rbf_kernel(X, X, gamma)
    a, _, it = _solve(K, nu, eps, max_iter)
    sv = a > 0.0
    # recompute the gradient the way decision_function does, so boundary
    # points are not pushed outside by the drift of the incremental updates
    G = rbf_kernel(X, X[sv], gamma) @ a[sv]
    rho = _rho(a, G)
    rho -= 1e-12 * max(abs(rho), 1.0)  # boundary points count as members
    return OneClassModel(X[sv].copy(), a[sv].copy(), rho, gamma, it)


def score_membership(model: OneClassModel, vectors) -> np.ndarray:
    """Boolean member flag per vector."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return model.predict(v)
