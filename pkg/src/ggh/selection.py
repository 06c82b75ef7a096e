"""The GGH training loop: warmup, one-class selection of hypotheses, high-pass filter."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import DataMatrix, HypothesisSpec, SplitPlan
from .enrichment import GROUND_CLASS, EnrichedGradientSet, build_enriched, decouple_signal, normalize_per_class
from .expansion import ExpandedBatch, expand_hypotheses
from .model import MlpModel, batch_loss, forward_batch, init_model, mean_gradient, minibatches, sgd_step
from .oneclass import fit_one_class, score_membership


@dataclass
class GGHConfig:
    """Hyper-parameters of a GGH run.

    eta : warmup epochs during which every hypothesis is backpropagated.
    alpha : weight of ground-row gradients relative to hypothesis gradients.
    tau : first epoch at which the per-sample loss joins the enriched vector.
    gamma : minimum post-warmup selection ratio (high-pass filter).
    nu : one-class boundary fraction.
    """

    eta: int = 10
    alpha: float = 10.0
    tau: float = 30
    gamma: float = 0.5
    nu: float = 0.1
    kernel_bandwidth: float | str = "median"
    decouple: bool = False
    normalize: bool = True
    scoring_stats: str = "ground"
    include_ground_expansion: bool = True
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int | None = 32
    hidden: tuple[int, ...] = (32,)
    patience: int | None = 20
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must be in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.tau < self.eta:
            raise ValueError("tau must be >= eta")
        if self.alpha < 1.0:
            raise ValueError("alpha must be >= 1")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("need epochs >= 0 and a positive learning rate")
        if self.scoring_stats not in ("ground", "class"):
            raise ValueError("scoring_stats must be 'ground' or 'class'")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be positive or None")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        if d["tau"] == float("inf"):
            d["tau"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GGHConfig":
        d = dict(d)
        if "tau" in d and d["tau"] is None:
            d["tau"] = float("inf")
        return cls(**d)


@dataclass
class SelectionHistory:
    excluded: np.ndarray
    eligible: np.ndarray = None
    selected: np.ndarray = None
    selected_now: np.ndarray = None
    warmup_selected: np.ndarray = None
    epochs: list[dict] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.excluded)
        self.excluded = np.asarray(self.excluded, dtype=bool)
        for name, dtype in (("eligible", int), ("selected", int),
                            ("selected_now", bool), ("warmup_selected", int)):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(n, dtype=dtype))

    @classmethod
    def for_batch(cls, batch: ExpandedBatch) -> "SelectionHistory":
        return cls(batch.excluded.copy())

    @property
    def frequency(self) -> np.ndarray:
        """Post-warmup selection ratio; zero where never eligible."""
        with np.errstate(invalid="ignore", divide="ignore"):
            f = self.selected / self.eligible
        return np.where(self.eligible > 0, f, 0.0)

    def record_warmup(self, epoch: int) -> None:
        self.selected_now = ~self.excluded
        self.warmup_selected += self.selected_now
        self.epochs.append({"epoch": epoch, "phase": "warmup",
                            "members": int(self.selected_now.sum()),
                            "survivors": int(self.selected_now.sum())})

    def record_selection(self, epoch: int, members: np.ndarray, survivors: int) -> None:
        members = np.asarray(members, dtype=bool) & ~self.excluded
        self.eligible += ~self.excluded
        self.selected += members
        self.selected_now = members
        self.epochs.append({"epoch": epoch, "phase": "selection",
                            "members": int(members.sum()), "survivors": int(survivors)})

    def to_csv(self, path, class_ids=None, correct=None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["hypothesis_id", "class_id", "eligible", "selected", "frequency", "excluded"]
            if correct is not None:
                head.append("correct")
            w.writerow(head)
            freq = self.frequency
            for h in range(len(self.excluded)):
                row = [h, -1 if class_ids is None else int(class_ids[h]), int(self.eligible[h]),
                       int(self.selected[h]), f"{freq[h]:.6g}", int(self.excluded[h])]
                if correct is not None:
                    row.append(int(correct[h]))
                w.writerow(row)


def high_pass_filter(history: SelectionHistory, gamma: float) -> np.ndarray:
    """Ids selected this epoch whose running selection ratio reaches ``gamma``."""
    ok = history.selected_now & ~history.excluded & (history.eligible > 0)
    ok &= history.selected >= gamma * history.eligible
    return np.flatnonzero(ok)


def enriched_vectors(model: MlpModel, batch: ExpandedBatch, cfg: GGHConfig,
                     epoch: int) -> tuple[EnrichedGradientSet, np.ndarray]:
    """Enriched vectors of ground rows followed by eligible hypotheses.

    Returns the set and the hypothesis ids of its hypothesis part.
    """
    hyp = np.flatnonzero(~batch.excluded)
    pg = forward_batch(model, batch.ground_inputs, batch.ground_targets, row_ids=batch.ground_ids)
    ph = forward_batch(model, batch.hyp_inputs[hyp], batch.hyp_targets[hyp], row_ids=hyp)
    h_grads = ph.penultimate_grads
    if cfg.decouple:
        h_grads = decouple_signal(h_grads, batch.hyp_source[hyp])
    grads = np.vstack([pg.penultimate_grads, h_grads])
    inputs = np.vstack([batch.ground_inputs, batch.hyp_inputs[hyp]])
    losses = np.concatenate([pg.losses, ph.losses])
    classes = np.concatenate([np.full(batch.n_ground, GROUND_CLASS), batch.hyp_class[hyp]])
    ids = np.concatenate([batch.ground_ids, hyp])
    es = build_enriched(grads, inputs, losses, epoch, cfg.tau, row_ids=ids, class_ids=classes)
    if cfg.normalize:
        es = normalize_per_class(es, stats=cfg.scoring_stats)
    return es, hyp


def select_hypotheses(model: MlpModel, batch: ExpandedBatch, cfg: GGHConfig,
                      epoch: int) -> np.ndarray:
    """One-class membership flag for every hypothesis id (excluded ones are False)."""
    members = np.zeros(batch.n_hypotheses, dtype=bool)
    if batch.n_hypotheses == 0 or batch.n_ground == 0:
        return members
    es, hyp = enriched_vectors(model, batch, cfg, epoch)
    g = es.class_ids == GROUND_CLASS
    occ = fit_one_class(es.vectors[g], nu=cfg.nu, bandwidth=cfg.kernel_bandwidth)
    members[hyp] = score_membership(occ, es.vectors[~g])
    return members


def _update(model, X, y, w, cfg, rng):
    """One pass of mini-batch SGD over weighted rows."""
    if len(X) == 0:
        return model
    for idx in minibatches(len(X), cfg.batch_size, rng):
        grad = mean_gradient(model, X[idx], y[idx], weights=w[idx])
        model = sgd_step(model, grad, cfg.learning_rate)
    return model


def ggh_train_epoch(model: MlpModel, batch: ExpandedBatch, cfg: GGHConfig,
                    history: SelectionHistory, epoch: int, rng: np.random.Generator):
    """Run one epoch; returns the updated model and the ids that were backpropagated.

    ``history`` is updated in place.
    """
    if epoch < cfg.eta:
        history.record_warmup(epoch)
        chosen = np.flatnonzero(~batch.excluded)
    else:
        members = select_hypotheses(model, batch, cfg, epoch)
        history.record_selection(epoch, members, 0)
        chosen = high_pass_filter(history, cfg.gamma)
        history.epochs[-1]["survivors"] = int(len(chosen))
    X = np.vstack([batch.ground_inputs, batch.hyp_inputs[chosen]])
    y = np.concatenate([batch.ground_targets, batch.hyp_targets[chosen]])
    w = np.concatenate([np.full(batch.n_ground, float(cfg.alpha)), np.ones(len(chosen))])
    return _update(model, X, y, w, cfg, rng), chosen


@dataclass
class TrainResult:
    model: MlpModel
    history: SelectionHistory
    epoch_metrics: list[dict]
    batch: ExpandedBatch
    best_epoch: int
    final_model: MlpModel | None = None


def train_on_batch(batch: ExpandedBatch, cfg: GGHConfig, val_inputs=None, val_targets=None,
                   model: MlpModel | None = None, on_epoch=None) -> TrainResult:
    """Core loop with early stopping on validation MSE.

    With ``cfg.patience=None`` (or no validation rows) all epochs run and the
    final model is returned.
    """
    n_in = batch.ground_inputs.shape[1]
    if model is None:
        model = init_model((n_in, *cfg.hidden, 1), cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    history = SelectionHistory.for_batch(batch)
    use_val = val_inputs is not None and len(val_inputs) > 0
    best_model, best_loss, best_epoch, since = model.copy(), np.inf, -1, 0
    metrics = []
    for epoch in range(cfg.epochs):
        model, chosen = ggh_train_epoch(model, batch, cfg, history, epoch, rng)
        row = dict(history.epochs[-1]) if history.epochs else {"epoch": epoch}
        if batch.n_ground:
            row["ground_mse"] = batch_loss(model, batch.ground_inputs, batch.ground_targets)
        if use_val:
            v = batch_loss(model, val_inputs, val_targets)
            row["val_mse"] = v
            if v < best_loss:
                best_model, best_loss, best_epoch, since = model.copy(), v, epoch, 0
            else:
                since += 1
        metrics.append(row)
        if on_epoch is not None:
            on_epoch(epoch, model, history)
        if use_val and cfg.patience is not None and since >= cfg.patience:
            break
    if not use_val or cfg.patience is None:
        best_model, best_epoch = model, len(metrics) - 1
    return TrainResult(best_model, history, metrics, batch, best_epoch, model)


def ggh_train(data: DataMatrix, spec: HypothesisSpec, cfg: GGHConfig,
              plan: SplitPlan | None = None, on_epoch=None) -> TrainResult:
    """Expand the training rows of ``data`` and train with hypothesis selection.

    ``data`` should already be standardized; validation rows (if a plan is
    given) must be complete.
    """
    batch = expand_hypotheses(data, spec, cfg.include_ground_expansion, plan=plan)
    Xv = yv = None
    if plan is not None and len(plan.validation):
        Xv = data.features(plan.validation)
        yv = data.target[plan.validation]
        if np.isnan(Xv).any():
            raise ValueError("validation rows must be complete")
    return train_on_batch(batch, cfg, Xv, yv, on_epoch=on_epoch)


def ground_only_batch(inputs, targets, row_ids=None) -> ExpandedBatch:
    """Batch with no hypotheses: training on it is plain SGD."""
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    ids = np.arange(len(X)) if row_ids is None else np.asarray(row_ids)
    empty_i = np.zeros(0, dtype=int)
    return ExpandedBatch(ids, X, y, empty_i, empty_i, np.zeros(0), np.zeros((0, X.shape[1])),
                         np.zeros(0), np.zeros(0, dtype=bool), 0, ())


def train_regressor(inputs, targets, cfg: GGHConfig, val_inputs=None, val_targets=None,
                    model: MlpModel | None = None) -> TrainResult:
    """Plain SGD regression with the same loop, early stopping included."""
    plain = GGHConfig.from_dict({**cfg.to_dict(), "alpha": 1.0})
    return train_on_batch(ground_only_batch(inputs, targets), plain, val_inputs, val_targets,
                          model=model)
