"""Density-based clustering (DBSCAN) on a dense distance matrix."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .oneclass import sq_distances

NOISE = -1


@dataclass
class DbscanParams:
    epsilon: float
    min_pts: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.min_pts) < 1:
            raise ValueError("min_pts must be >= 1")
        self.min_pts = int(self.min_pts)


@dataclass
class DbscanResult:
    labels: np.ndarray
    core: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    @property
    def noise(self) -> np.ndarray:
        return self.labels == NOISE

    @property
    def border(self) -> np.ndarray:
        return ~self.core & ~self.noise


def pairwise_distances(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    return np.sqrt(sq_distances(X, X))


def dbscan(points, params: DbscanParams) -> DbscanResult:
    """Cluster ``points``; label ``-1`` marks noise.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``epsilon``. Clusters are numbered in order of their lowest core
    point, and a border point reachable from several clusters joins the
    lowest-numbered one.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("no points to cluster")
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite")
    D = pairwise_distances(X)
    neigh = D <= params.epsilon
    core = neigh.sum(axis=1) >= params.min_pts
    labels = np.full(len(X), NOISE, dtype=int)
    cluster = 0
    for start in range(len(X)):
        if not core[start] or labels[start] != NOISE:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in np.flatnonzero(neigh[p]):
                if labels[q] != NOISE:
                    continue
                labels[q] = cluster
                if core[q]:
                    queue.append(q)
        cluster += 1
    return DbscanResult(labels, core)


def k_distances(points, k: int) -> np.ndarray:
    """Distance from every point to its ``k``-th nearest point (itself counted first)."""
    D = pairwise_distances(points)
    k = min(max(int(k), 1), D.shape[0])
    return np.sort(D, axis=1)[:, k - 1]


def knee_distance(values) -> float:
    """Knee of the sorted curve: the value furthest below the min-max chord."""
    s = np.sort(np.asarray(values, dtype=float))
    if len(s) < 3 or s[-1] <= s[0]:
        return float(s[-1])
    x = np.linspace(0.0, 1.0, len(s))
    y = (s - s[0]) / (s[-1] - s[0])
    return float(s[np.argmax(x - y)])


def default_params(points, rule="knee", min_pts: int | None = None) -> DbscanParams:
    """Heuristic parameters from the k-distance curve.

    ``min_pts = max(5, dim + 1)``. ``rule="knee"`` puts epsilon at the knee of
    the sorted ``min_pts``-distances; a number is read as a percentile of them.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if min_pts is None:
        min_pts = max(5, X.shape[1] + 1)
    min_pts = min(min_pts, len(X))
    kd = k_distances(X, min_pts)
    eps = knee_distance(kd) if rule == "knee" else float(np.percentile(kd, float(rule)))
    return DbscanParams(max(eps, 1e-12), min_pts)
