"""Enriched gradient vectors: gradient ++ inputs (++ loss), optionally decoupled and normalised."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PerSampleGradients

GROUND_CLASS = -1


@dataclass
class EnrichedGradientSet:
    vectors: np.ndarray
    row_ids: np.ndarray
    class_ids: np.ndarray
    epoch: int
    grad_dim: int
    input_dim: int
    loss_included: bool

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array")
        expected = self.grad_dim + self.input_dim + int(self.loss_included)
        if self.vectors.shape[1] != expected:
            raise ValueError(f"vector dimension {self.vectors.shape[1]} != layout {expected}")
        self.row_ids = np.asarray(self.row_ids)
        self.class_ids = np.asarray(self.class_ids, dtype=int)
        if not (len(self.row_ids) == len(self.class_ids) == len(self.vectors)):
            raise ValueError("row_ids, class_ids and vectors must align")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def groups(self) -> dict[int, np.ndarray]:
        return {int(c): np.flatnonzero(self.class_ids == c) for c in np.unique(self.class_ids)}

    def subset(self, idx) -> "EnrichedGradientSet":
        return EnrichedGradientSet(self.vectors[idx], self.row_ids[idx], self.class_ids[idx],
                                   self.epoch, self.grad_dim, self.input_dim, self.loss_included)


def decouple_signal(grads, group_ids) -> np.ndarray:
    """Subtract each group's mean gradient from its members.

    ``group_ids`` holds the source row of every hypothesis; singleton groups
    pass through unchanged.
    """
    g = np.asarray(grads.penultimate_grads if isinstance(grads, PerSampleGradients) else grads,
                   dtype=float)
    groups = np.asarray(group_ids)
    if len(groups) != len(g):
        raise ValueError("one group id per gradient required")
    out = g.copy()
    if len(g) == 0:
        return out
    uniq, inv, counts = np.unique(groups, return_inverse=True, return_counts=True)
    sums = np.zeros((len(uniq), g.shape[1]))
    np.add.at(sums, inv, g)
    means = sums / counts[:, None]
    multi = counts[inv] > 1
    out[multi] -= means[inv[multi]]
    return out


def build_enriched(grads, inputs, losses, epoch: int, tau: float, *,
                   row_ids=None, class_ids=None) -> EnrichedGradientSet:
    """Concatenate gradient, inputs and, once ``epoch >= tau``, the loss."""
    if isinstance(grads, PerSampleGradients):
        if row_ids is not None and not np.array_equal(np.asarray(row_ids), grads.row_ids):
            raise ValueError("row ids of inputs and gradients are misaligned")
        row_ids = grads.row_ids
        g = grads.penultimate_grads
    else:
        g = np.asarray(grads, dtype=float)
    X = np.asarray(inputs, dtype=float)
    L = np.asarray(losses, dtype=float).reshape(-1)
    n = len(g)
    if X.shape[0] != n or L.shape[0] != n:
        raise ValueError(f"misaligned sources: {n} gradients, {X.shape[0]} inputs, {L.shape[0]} losses")
    include_loss = epoch >= tau
    parts = [g.reshape(n, -1), X.reshape(n, -1)]
    if include_loss:
        parts.append(L[:, None])
    vecs = np.hstack(parts)
    ids = np.arange(n) if row_ids is None else np.asarray(row_ids)
    cls = np.full(n, GROUND_CLASS) if class_ids is None else np.asarray(class_ids)
    return EnrichedGradientSet(vecs, ids, cls, epoch, g.reshape(n, -1).shape[1],
                               X.reshape(n, -1).shape[1], include_loss)


def _zscore_stats(v: np.ndarray):
    mu = v.mean(axis=0)
    sd = v.std(axis=0)
    # constant (or singleton) dimensions collapse to zero
    scale = np.where(sd > 1e-12 * np.maximum(1.0, np.abs(mu)), sd, np.inf)
    return mu, scale


def normalize_per_class(es: EnrichedGradientSet, stats: str = "class") -> EnrichedGradientSet:
    """Z-score every dimension within each class group.

    ``stats="class"`` uses each group's own statistics. ``stats="ground"``
    normalises the ground group by itself and maps every hypothesis vector
    through the ground statistics, so a model fit on ground vectors and the
    hypotheses it scores live in one space.
    """
    if stats not in ("class", "ground"):
        raise ValueError(f"unknown stats mode {stats!r}")
    out = es.vectors.copy()
    groups = es.groups()
    if stats == "ground" and GROUND_CLASS in groups and len(groups[GROUND_CLASS]):
        mu, scale = _zscore_stats(es.vectors[groups[GROUND_CLASS]])
        out = (es.vectors - mu) / scale
    else:
        for idx in groups.values():
            mu, scale = _zscore_stats(es.vectors[idx])
            out[idx] = (es.vectors[idx] - mu) / scale
    return EnrichedGradientSet(out, es.row_ids, es.class_ids, es.epoch, es.grad_dim,
                               es.input_dim, es.loss_included)
