"""Plot-ready data: 2-D projections of enriched gradients and selection histograms."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import HypothesisSpec
from .expansion import ExpandedBatch
from .oneclass import sq_distances

CORRECT, INCORRECT, GROUND = "correct", "potentially-incorrect", "ground"


@dataclass
class ProjectedCloud:
    coords: np.ndarray
    row_ids: np.ndarray
    class_ids: np.ndarray
    labels: np.ndarray
    density: np.ndarray
    variances: np.ndarray
    degenerate: bool = False

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "row_id", "class_id", "label", "density"])
            for (x, y), r, c, lab, d in zip(self.coords, self.row_ids, self.class_ids,
                                            self.labels, self.density):
                w.writerow([f"{x:.8g}", f"{y:.8g}", int(r), int(c), lab, int(d)])


def power_iteration_pca(X: np.ndarray, n_components: int = 2, max_iter: int = 10_000,
                        tol: float = 1e-13):
    """Leading eigenvectors of the covariance of ``X`` by deflated power iteration.

    Start vectors are fixed, and each component is signed so that its
    largest-magnitude loading is positive.
    """
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / max(len(X), 1)
    d = C.shape[0]
    comps, vals = [], []
    for k in range(min(n_components, d)):
        v = np.cos(np.arange(1, d + 1) * (k + 1.0))  # fixed, generic start
        for c in comps:
            v -= (v @ c) * c
        if np.linalg.norm(v) == 0:
            v = np.eye(d)[k]
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = C @ v
            for c in comps:
                w -= (w @ c) * c
            nw = np.linalg.norm(w)
            if nw == 0:
                break
            w /= nw
            done = min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol
            v = w
            if done:
                break
        lam = float(v @ C @ v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        comps.append(v)
        vals.append(lam)
    while len(comps) < n_components:
        comps.append(np.zeros(d))
        vals.append(0.0)
    return np.array(comps), np.array(vals)


def project_2d(vectors, row_ids=None, class_ids=None, labels=None) -> ProjectedCloud:
    """Top-two principal-component coordinates plus a neighbour-count density.

    Density is the number of other points within the median pairwise
    distance of the projected cloud.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    n = len(V)
    if n < 2:
        raise ValueError("need at least two vectors to project")
    ids = np.arange(n) if row_ids is None else np.asarray(row_ids)
    cls = np.full(n, -1) if class_ids is None else np.asarray(class_ids)
    labs = np.full(n, "", dtype=object) if labels is None else np.asarray(labels, dtype=object)
    if np.all(V == V[0]):
        return ProjectedCloud(np.zeros((n, 2)), ids, cls, labs, np.full(n, n - 1),
                              np.zeros(2), degenerate=True)
    comps, vals = power_iteration_pca(V, 2)
    coords = (V - V.mean(axis=0)) @ comps.T
    D = np.sqrt(sq_distances(coords, coords))
    med = np.median(D[np.triu_indices(n, k=1)])
    density = (D <= med).sum(axis=1) - 1
    return ProjectedCloud(coords, ids, cls, labs, density, vals)


def oracle_label(batch: ExpandedBatch, true_values, spec: HypothesisSpec | None = None) -> np.ndarray:
    """Correct flag per hypothesis: its class is the nearest class to the true value.

    ``true_values`` are the unmasked values (original units) of the
    hypothesis column, indexed by source row id.
    """
    truth = np.asarray(true_values, dtype=float)[batch.hyp_source]
    spec = spec or HypothesisSpec(0, batch.class_values)
    return spec.nearest_class(truth) == batch.hyp_class


def selection_histogram(frequencies, correct, bins: int = 10, eligible=None):
    """Counts of correct and potentially-incorrect hypotheses per frequency bin.

    Bins split [0, 1] evenly; the last bin is closed on the right.
    """
    f = np.asarray(frequencies, dtype=float)
    ok = np.asarray(correct, dtype=bool)
    if eligible is not None:
        keep = np.asarray(eligible, dtype=bool)
        f, ok = f[keep], ok[keep]
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.searchsorted(edges, f, side="right") - 1, 0, bins - 1)
    c_ok = np.bincount(idx[ok], minlength=bins)
    c_bad = np.bincount(idx[~ok], minlength=bins)
    return edges, c_ok, c_bad


def write_histogram_csv(path, edges, count_correct, count_incorrect) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count_correct", "count_incorrect"])
        for lo, hi, a, b in zip(edges[:-1], edges[1:], count_correct, count_incorrect):
            w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(a), int(b)])


def tightness(vectors, is_ground, correct) -> dict:
    """Mean distance to the ground centroid for correct vs potentially-incorrect vectors."""
    V = np.asarray(vectors, dtype=float)
    g = np.asarray(is_ground, dtype=bool)
    ok = np.asarray(correct, dtype=bool)
    centre = V[g].mean(axis=0)
    d = np.linalg.norm(V - centre, axis=1)
    hyp = ~g
    return {
        "correct": float(d[hyp & ok].mean()) if (hyp & ok).any() else float("nan"),
        "incorrect": float(d[hyp & ~ok].mean()) if (hyp & ~ok).any() else float("nan"),
        "ground": float(d[g].mean()),
    }
