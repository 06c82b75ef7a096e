"""Unsupervised noisy-row filtering on enriched gradients.

Stage 1 clusters the enriched gradients of every training row with DBSCAN
and flags density noise. Stage 2 retrains on all rows and re-admits flagged
rows whose enriched gradients move into the clean cluster: rare but correct
rows (outliers) get there quickly, erroneous rows do not.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .dbscan import DbscanParams, dbscan, default_params, k_distances
from .enrichment import _zscore_stats, build_enriched, normalize_per_class
from .model import MlpModel, forward_batch, init_model
from .selection import GGHConfig, ground_only_batch, train_on_batch, train_regressor

CLEAN, NOISY, OUTLIER = "clean", "noise", "outlier-readmitted"


class NoiseFilterError(RuntimeError):
    pass


@dataclass
class NoiseVerdict:
    row_ids: np.ndarray
    stage1: np.ndarray
    final: np.ndarray
    cluster: np.ndarray
    trajectories: dict = field(default_factory=dict)
    radius: list = field(default_factory=list)
    params: DbscanParams | None = None

    @property
    def flagged(self) -> np.ndarray:
        """Row ids flagged as noise in stage 1."""
        return self.row_ids[self.stage1 == NOISY]

    @property
    def kept(self) -> np.ndarray:
        """Row ids used for the final model."""
        return self.row_ids[self.final != NOISY]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row_id", "stage1_label", "final_label", "cluster",
                        "dist_first", "dist_last", "dist_min"])
            for i, r in enumerate(self.row_ids):
                tr = self.trajectories.get(int(r))
                summ = ["", "", ""] if not tr else [f"{tr[0]:.6g}", f"{tr[-1]:.6g}", f"{min(tr):.6g}"]
                w.writerow([int(r), self.stage1[i], self.final[i], int(self.cluster[i]), *summ])


def enriched_rows(model: MlpModel, inputs, targets, reference=None) -> np.ndarray:
    """Normalised gradient ++ input ++ loss vectors for plain training rows.

    With ``reference`` (a boolean mask) every row is z-scored with the
    statistics of the reference rows only, otherwise with those of all rows.
    """
    pg = forward_batch(model, inputs, targets)
    es = build_enriched(pg, inputs, pg.losses, epoch=0, tau=0)
    if reference is None:
        return normalize_per_class(es).vectors
    mu, scale = _zscore_stats(es.vectors[reference])
    return (es.vectors - mu) / scale


def label_noise(model: MlpModel, inputs, targets, row_ids=None,
                params: DbscanParams | None = None, rule="knee") -> NoiseVerdict:
    """Stage 1: DBSCAN noise points of the enriched gradients become candidates.

    Without explicit ``params`` they come from the k-distance curve of the
    vectors (see :func:`ggh.dbscan.default_params`).
    """
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    ids = np.arange(len(X)) if row_ids is None else np.asarray(row_ids)
    V = enriched_rows(model, X, y)
    if params is None:
        params = default_params(V, rule=rule)
    res = dbscan(V, params)
    if res.noise.all():
        kd = k_distances(V, params.min_pts)
        pct = {p: round(float(np.percentile(kd, p)), 4) for p in (10, 50, 90, 99)}
        raise NoiseFilterError(
            f"every point is noise at epsilon={params.epsilon:.4g}, min_pts={params.min_pts}; "
            f"{params.min_pts}-distance percentiles {pct}")
    labels = np.where(res.noise, NOISY, CLEAN).astype(object)
    return NoiseVerdict(ids, labels, labels.copy(), res.labels.copy(), params=params)


def disambiguate_outliers(model: MlpModel, inputs, targets, stage1: NoiseVerdict,
                          cfg: GGHConfig, extra_epochs: int = 50,
                          radius_percentile: float = 90.0) -> NoiseVerdict:
    """Stage 2: train on all rows and track flagged rows against the clean cluster.

    Each epoch the vectors are z-scored with the clean rows' statistics, so
    distances are in clean-cluster units and do not shift when the flagged
    rows' losses fall. The clean centroid and ``radius_percentile`` radius
    are recomputed per epoch; a flagged row whose distance drops inside
    that radius is re-admitted as an outlier.
    """
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    flagged = stage1.stage1 == NOISY
    verdict = NoiseVerdict(stage1.row_ids, stage1.stage1.copy(), stage1.stage1.copy(),
                           stage1.cluster.copy(), {}, [], stage1.params)
    if not flagged.any() or extra_epochs <= 0:
        return verdict
    clean = ~flagged
    traj = {int(r): [] for r in stage1.row_ids[flagged]}
    inside = np.zeros(len(X), dtype=bool)

    def measure(m):
        V = enriched_rows(m, X, y, reference=clean)
        centre = V[clean].mean(axis=0)
        d = np.linalg.norm(V - centre, axis=1)
        rad = float(np.percentile(d[clean], radius_percentile))
        verdict.radius.append(rad)
        for i in np.flatnonzero(flagged):
            traj[int(stage1.row_ids[i])].append(float(d[i]))
        inside[flagged & (d <= rad)] = True

    measure(model)
    all_cfg = GGHConfig.from_dict({**cfg.to_dict(), "alpha": 1.0, "epochs": extra_epochs,
                                   "patience": None, "eta": 0, "tau": 0})
    train_on_batch(ground_only_batch(X, y), all_cfg, model=model.copy(),
                   on_epoch=lambda e, m, h: measure(m))
    verdict.trajectories = traj
    verdict.final = np.where(flagged & inside, OUTLIER, verdict.stage1).astype(object)
    return verdict


@dataclass
class NoiseFilterResult:
    model: MlpModel
    verdict: NoiseVerdict
    metrics: dict


def noise_filtered_train(train_inputs, train_targets, val_inputs, val_targets, cfg: GGHConfig,
                         params: DbscanParams | None = None, warmup_epochs: int = 50,
                         extra_epochs: int = 50, row_ids=None,
                         dbscan_rule="knee") -> NoiseFilterResult:
    """Warm up on all rows, flag noise, train on the rest, re-admit outliers, retrain."""
    X = np.asarray(train_inputs, dtype=float)
    y = np.asarray(train_targets, dtype=float)
    ids = np.arange(len(X)) if row_ids is None else np.asarray(row_ids)
    warm_cfg = GGHConfig.from_dict({**cfg.to_dict(), "epochs": warmup_epochs, "patience": None})
    model = init_model((X.shape[1], *cfg.hidden, 1), cfg.seed)
    model = train_regressor(X, y, warm_cfg, model=model).model
    stage1 = label_noise(model, X, y, ids, params, rule=dbscan_rule)
    keep = stage1.stage1 != NOISY
    filtered = train_regressor(X[keep], y[keep], cfg, val_inputs, val_targets, model=model.copy())
    verdict = disambiguate_outliers(filtered.model, X, y, stage1, cfg, extra_epochs)
    final = filtered
    readmit = verdict.final == OUTLIER
    if readmit.any():
        keep = verdict.final != NOISY
        final = train_regressor(X[keep], y[keep], cfg, val_inputs, val_targets,
                                model=filtered.model.copy())
    metrics = {
        "n_rows": int(len(X)),
        "n_flagged": int((stage1.stage1 == NOISY).sum()),
        "n_readmitted": int(readmit.sum()),
        "epsilon": stage1.params.epsilon,
        "min_pts": stage1.params.min_pts,
        "best_epoch": final.best_epoch,
    }
    return NoiseFilterResult(final.model, verdict, metrics)


def confusion(flagged_ids, true_noisy_ids, all_ids) -> dict:
    """Confusion counts and rates of flagged-vs-true noise."""
    all_ids = np.asarray(all_ids)
    pred = np.isin(all_ids, flagged_ids)
    true = np.isin(all_ids, true_noisy_ids)
    tp = int((pred & true).sum())
    fp = int((pred & ~true).sum())
    fn = int((~pred & true).sum())
    tn = int((~pred & ~true).sum())
    n = max(len(all_ids), 1)
    return {
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
        "precision": tp / (tp + fp) if tp + fp else float("nan"),
        "recall": tp / (tp + fn) if tp + fn else float("nan"),
        "accuracy": (tp + tn) / n,
    }


def write_confusion_json(path, conf: dict) -> None:
    with open(path, "w") as fh:
        json.dump(conf, fh, indent=2)
