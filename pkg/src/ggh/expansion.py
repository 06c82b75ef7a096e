"""Expand incomplete training rows into one candidate row per class value."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, DataMatrix, HypothesisSpec, SplitPlan


@dataclass
class ExpandedBatch:
    """Ground rows (G) plus hypothesis rows (H).

    Hypothesis ``h`` is identified by its position; that index is stable for
    the lifetime of the batch and keys the selection history. Inputs are the
    feature columns of the (standardized) data matrix.
    """

    ground_ids: np.ndarray
    ground_inputs: np.ndarray
    ground_targets: np.ndarray
    hyp_source: np.ndarray
    hyp_class: np.ndarray
    hyp_value: np.ndarray
    hyp_inputs: np.ndarray
    hyp_targets: np.ndarray
    excluded: np.ndarray
    feature_position: int
    class_values: tuple[float, ...]

    @property
    def n_ground(self) -> int:
        return len(self.ground_ids)

    @property
    def n_hypotheses(self) -> int:
        return len(self.hyp_source)

    @property
    def hyp_ids(self) -> np.ndarray:
        return np.arange(self.n_hypotheses)

    @property
    def eligible(self) -> np.ndarray:
        return ~self.excluded

    @property
    def incomplete_sources(self) -> np.ndarray:
        """Source row ids of incomplete rows, sorted."""
        return np.unique(self.hyp_source[~self.excluded])


def expand_hypotheses(data: DataMatrix, spec: HypothesisSpec,
                      include_ground_expansion: bool = True,
                      plan: SplitPlan | None = None) -> ExpandedBatch:
    """Build G and H from the training rows of ``data``.

    Incomplete rows contribute one row per class. With
    ``include_ground_expansion`` every complete row also contributes its
    wrong-class copies, flagged as excluded; the copy matching the row's own
    (nearest) class is dropped since the original row already trains.
    """
    rows = np.arange(data.n_rows) if plan is None else np.asarray(plan.train)
    j = spec.column_index
    if j == data.target_index:
        raise DataError("hypothesis column cannot be the target")
    feats = data.feature_indices
    pos = feats.index(j)
    mask = data.missing_mask[rows]
    other = np.delete(mask, j, axis=1)
    if other.any():
        raise DataError("only the hypothesis column may contain missing training cells")

    col_missing = mask[:, j]
    ground = rows[~col_missing]
    incomplete = rows[col_missing]
    if len(incomplete) and not len(ground):
        raise DataError("hypothesis column has no observed training cell")

    std_classes = data.to_standard(spec.class_values, j)
    k = spec.n_classes
    X = data.values[:, feats]
    y = data.target

    src = [np.repeat(incomplete, k)]
    cls = [np.tile(np.arange(k), len(incomplete))]
    exc = [np.zeros(len(incomplete) * k, dtype=bool)]
    if include_ground_expansion and len(ground):
        observed = data.to_raw(data.values[ground, j], j)
        own = spec.nearest_class(observed)
        g_src = np.repeat(ground, k)
        g_cls = np.tile(np.arange(k), len(ground))
        keep = g_cls != np.repeat(own, k)
        src.append(g_src[keep])
        cls.append(g_cls[keep])
        exc.append(np.ones(keep.sum(), dtype=bool))
    hyp_source = np.concatenate(src).astype(int)
    hyp_class = np.concatenate(cls).astype(int)
    excluded = np.concatenate(exc)
    hyp_inputs = X[hyp_source].copy()
    hyp_value = std_classes[hyp_class] if len(hyp_class) else np.zeros(0)
    hyp_inputs[:, pos] = hyp_value

    return ExpandedBatch(
        ground_ids=ground,
        ground_inputs=X[ground].copy(),
        ground_targets=y[ground].copy(),
        hyp_source=hyp_source,
        hyp_class=hyp_class,
        hyp_value=np.asarray(hyp_value, dtype=float),
        hyp_inputs=hyp_inputs.reshape(len(hyp_source), len(feats)),
        hyp_targets=y[hyp_source].copy(),
        excluded=excluded,
        feature_position=pos,
        class_values=spec.class_values,
    )
