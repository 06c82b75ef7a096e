"""Multi-seed experiments comparing GGH with the reference methods.

One run = split with ``base_seed + run_index``, simulate missingness or
label noise on the training rows, fit every method in the roster with early
stopping on validation MSE, score on the test rows. Metrics are reported in
the target's original units.
"""
from __future__ import annotations

import csv
import json
import logging
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .data import (AIRFOIL_CHORD_CLASSES, DataError, DataMatrix, derive_hypothesis_classes,
                   inject_noise, load_airfoil, load_csv, mask_column, split_dataset, standardize)
from .dbscan import DbscanParams
from .metrics import Metrics, compute_metrics
from .model import predict
from .noise import confusion, noise_filtered_train
from .selection import GGHConfig, ggh_train, train_regressor
from .synthetic import DEFAULT_CLASSES, make_hypothesis_data, make_noise_data

log = logging.getLogger(__name__)

IMPUTE_ROSTER = ["complete-columns", "complete-rows", "best-imputation", "ggh", "complete-data"]
NOISE_ROSTER = ["complete+noise", "ggh-noise-filter", "clean-data"]
BASELINE_ROSTER = ["complete-columns", "complete-rows", "impute:mean", "impute:knn", "impute:mf",
                   "impute:softimpute", "impute:mice", "best-imputation"]
MICE_NOTE = ("mice is a single deterministic chain of least-squares refits; "
             "no multiple imputation or pooling")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str
    target: str | None = None
    masked_column: str | None = None
    missing_rate: float | None = None
    class_values: list | None = None
    class_bins: int | None = None
    noise_fraction: float | None = None
    noise_levels: tuple = (0.4, 0.6)
    methods: list | None = None
    imputers: list = field(default_factory=lambda: list(baselines.IMPUTERS))
    ggh: GGHConfig = field(default_factory=GGHConfig)
    split: tuple = (0.7, 0.15, 0.15)
    runs: int = 15
    base_seed: int = 0
    warmup_epochs: int = 50
    extra_epochs: int = 50
    dbscan_rule: str | float = "knee"
    dbscan_epsilon: float | None = None
    dbscan_min_pts: int | None = None
    synthetic_rows: int = 1000

    def __post_init__(self):
        if isinstance(self.ggh, dict):
            try:
                self.ggh = GGHConfig.from_dict(self.ggh)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad ggh section: {exc}") from None
        imp = self.missing_rate is not None
        noi = self.noise_fraction is not None
        if imp == noi:
            raise ConfigError("set exactly one of missing_rate (imputation) or noise_fraction (noise)")
        if imp and self.masked_column is None and not self.dataset.startswith("synthetic"):
            raise ConfigError("imputation mode needs masked_column")
        if self.methods is None:
            self.methods = list(IMPUTE_ROSTER if imp else NOISE_ROSTER)
        valid = set(IMPUTE_ROSTER + BASELINE_ROSTER) if imp else set(NOISE_ROSTER)
        bad = [m for m in self.methods if m not in valid]
        if bad:
            raise ConfigError(f"methods {bad} not available in {self.mode} mode")
        unknown = [i for i in self.imputers if i not in baselines.IMPUTERS]
        if unknown:
            raise ConfigError(f"unknown imputers {unknown}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        self.split = tuple(self.split)
        self.noise_levels = tuple(self.noise_levels)

    @property
    def mode(self) -> str:
        return "impute" if self.missing_rate is not None else "noise"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["ggh"] = self.ggh.to_dict()
        d["split"] = list(self.split)
        d["noise_levels"] = list(self.noise_levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "dataset" not in d:
            raise ConfigError("config needs a dataset")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(d)


def load_dataset(cfg: ExperimentConfig) -> DataMatrix:
    """Resolve ``cfg.dataset`` and fill in dataset-specific defaults on ``cfg``.

    Names: ``synthetic:hypothesis``, ``synthetic:noise``, ``airfoil:<path>``,
    or a CSV path (files whose name contains "airfoil" use the Airfoil loader).
    """
    name = cfg.dataset
    if name == "synthetic:hypothesis":
        data = make_hypothesis_data(cfg.synthetic_rows, seed=cfg.base_seed)
        cfg.masked_column = cfg.masked_column or "c"
        if cfg.class_values is None and cfg.class_bins is None:
            cfg.class_values = list(DEFAULT_CLASSES)
        return data
    if name == "synthetic:noise":
        return make_noise_data(cfg.synthetic_rows, seed=cfg.base_seed)[0]
    forced = name.startswith("airfoil:")
    path = Path(name.split(":", 1)[1] if forced else name)
    if not path.exists():
        raise DataError(f"dataset {path} not found")
    if forced or "airfoil" in path.name.lower():
        data = load_airfoil(path)
        if cfg.masked_column == "chord_length" and cfg.class_values is None and cfg.class_bins is None:
            cfg.class_values = list(AIRFOIL_CHORD_CLASSES)
        return data
    if cfg.target is None:
        raise ConfigError("target column required for CSV datasets")
    return load_csv(path, cfg.target)


@dataclass
class MethodResult:
    metrics: Metrics
    info: dict = field(default_factory=dict)


def _train_eval(X, y, Xv, yv, Xt, yt_raw, to_raw, cfg: GGHConfig):
    res = train_regressor(X, y, cfg, Xv, yv)
    val = float(np.mean((predict(res.model, Xv) - yv) ** 2))
    m = compute_metrics(to_raw(predict(res.model, Xt)), yt_raw)
    return MethodResult(m, {"val_mse": val, "best_epoch": res.best_epoch}), res


def _impute_train_rows(d: DataMatrix, plan, name: str, seed: int) -> DataMatrix:
    sub = d.values[plan.train]
    imp = baselines.IMPUTERS[name](sub, seed)
    out = d.copy()
    out.values[plan.train] = imp.values
    out.missing_mask[plan.train] = False
    return out


def run_imputation(cfg: ExperimentConfig, raw: DataMatrix, run: int, keep: bool = False):
    seed = cfg.base_seed + run
    gcfg = GGHConfig.from_dict({**cfg.ggh.to_dict(), "seed": seed})
    plan = split_dataset(raw, cfg.split, seed)
    col = raw.column_index(cfg.masked_column)
    masked = mask_column(raw, col, cfg.missing_rate, seed, plan)
    d = standardize(masked, plan)
    full = standardize(raw, plan)
    t = raw.target_index
    yt_raw = raw.target[plan.test]
    Xv, yv = d.features(plan.validation), d.target[plan.validation]
    Xt = d.features(plan.test)
    tr = plan.train

    def to_raw(p):
        return d.to_raw(p, t)

    results, artifacts = {}, {}
    imputed_cache = {}

    def imputed(name):
        if name not in imputed_cache:
            di = _impute_train_rows(d, plan, name, seed)
            imputed_cache[name] = _train_eval(di.features(tr), di.target[tr], Xv, yv, Xt, yt_raw,
                                              to_raw, gcfg)[0]
            imputed_cache[name].info["imputer"] = name
        return imputed_cache[name]

    for method in cfg.methods:
        if method == "complete-columns":
            cc = baselines.complete_columns(d, plan)
            results[method] = _train_eval(cc.features(tr), cc.target[tr], cc.features(plan.validation),
                                          cc.target[plan.validation], cc.features(plan.test),
                                          yt_raw, to_raw, gcfg)[0]
        elif method == "complete-rows":
            cr, p2 = baselines.complete_rows(d, plan)
            results[method] = _train_eval(cr.features(p2.train), cr.target[p2.train], Xv, yv, Xt,
                                          yt_raw, to_raw, gcfg)[0]
            results[method].info["n_rows"] = int(len(p2.train))
        elif method.startswith("impute:"):
            results[method] = imputed(method.split(":", 1)[1])
        elif method == "best-imputation":
            cands = [imputed(name) for name in cfg.imputers]
            best = min(cands, key=lambda r: r.info["val_mse"])
            results[method] = MethodResult(best.metrics, dict(best.info))
        elif method == "ggh":
            if cfg.class_values is not None:
                spec = derive_hypothesis_classes(d, col, "explicit", values=cfg.class_values)
            else:
                spec = derive_hypothesis_classes(d, col, "quantile", bins=cfg.class_bins, plan=plan)
            res = ggh_train(d, spec, gcfg, plan)
            m = compute_metrics(to_raw(predict(res.model, Xt)), yt_raw)
            results[method] = MethodResult(m, {"best_epoch": res.best_epoch,
                                               "n_hypotheses": int(res.batch.n_hypotheses),
                                               "n_ground": int(res.batch.n_ground)})
            if keep:
                artifacts.update(ggh=res, spec=spec, data=d, plan=plan,
                                 truth=raw.values[:, col])
        elif method == "complete-data":
            results[method] = _train_eval(full.features(tr), full.target[tr],
                                          full.features(plan.validation), full.target[plan.validation],
                                          full.features(plan.test), yt_raw,
                                          lambda p: full.to_raw(p, t), gcfg)[0]
    return results, artifacts


def run_noise(cfg: ExperimentConfig, raw: DataMatrix, run: int, keep: bool = False):
    seed = cfg.base_seed + run
    gcfg = GGHConfig.from_dict({**cfg.ggh.to_dict(), "seed": seed})
    plan = split_dataset(raw, cfg.split, seed)
    lo, hi = cfg.noise_levels
    noisy, noisy_ids = inject_noise(raw, cfg.noise_fraction, lo, hi, seed, plan)
    d = standardize(noisy, plan)
    clean = standardize(raw, plan)
    t = raw.target_index
    yt_raw = raw.target[plan.test]
    tr = plan.train
    Xv, yv, Xt = d.features(plan.validation), d.target[plan.validation], d.features(plan.test)
    results, artifacts = {}, {}
    for method in cfg.methods:
        if method == "complete+noise":
            results[method] = _train_eval(d.features(tr), d.target[tr], Xv, yv, Xt, yt_raw,
                                          lambda p: d.to_raw(p, t), gcfg)[0]
        elif method == "ggh-noise-filter":
            params = None
            if cfg.dbscan_epsilon is not None:
                params = DbscanParams(cfg.dbscan_epsilon, cfg.dbscan_min_pts or 5)
            res = noise_filtered_train(d.features(tr), d.target[tr], Xv, yv, gcfg, params=params,
                                       warmup_epochs=cfg.warmup_epochs,
                                       extra_epochs=cfg.extra_epochs, row_ids=tr,
                                       dbscan_rule=cfg.dbscan_rule)
            m = compute_metrics(d.to_raw(predict(res.model, Xt), t), yt_raw)
            conf = confusion(res.verdict.flagged, noisy_ids, tr)
            results[method] = MethodResult(m, {**res.metrics, "precision": conf["precision"],
                                               "recall": conf["recall"], "accuracy": conf["accuracy"]})
            if keep:
                artifacts.update(verdict=res.verdict, confusion=conf, noisy_ids=noisy_ids)
        elif method == "clean-data":
            results[method] = _train_eval(clean.features(tr), clean.target[tr],
                                          clean.features(plan.validation), clean.target[plan.validation],
                                          clean.features(plan.test), yt_raw,
                                          lambda p: clean.to_raw(p, t), gcfg)[0]
    return results, artifacts


@dataclass
class ReportTable:
    methods: list
    runs: list
    summary: dict
    failures: list
    config: dict
    artifacts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def rows(self):
        for method in self.methods:
            for metric in ("r2", "mse", "mae"):
                s = self.summary[method][metric]
                yield method, metric, s["mean"], s["std"], s["n"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "metric", "mean", "std", "n_runs"])
            for method, metric, mean, std, n in self.rows():
                w.writerow([method, metric, f"{mean:.10g}", f"{std:.10g}", n])

    def to_dict(self) -> dict:
        return {"methods": self.methods, "summary": self.summary, "runs": self.runs,
                "failures": self.failures, "config": self.config, "notes": self.notes}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, default=_jsonable))

    def to_markdown(self) -> str:
        return render_markdown(self.to_dict())

    def mean(self, method: str, metric: str = "r2") -> float:
        return self.summary[method][metric]["mean"]


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def render_markdown(report: dict) -> str:
    """Method table with R2 as percent and mean +- std over runs."""
    lines = ["| Method | R2 (%) | MSE | MAE | runs |", "|---|---|---|---|---|"]
    for method in report["methods"]:
        s = report["summary"][method]
        r2 = s["r2"]
        lines.append(
            f"| {method} | {100 * r2['mean']:.1f} ± {100 * r2['std']:.1f} "
            f"| {s['mse']['mean']:.4g} ± {s['mse']['std']:.2g} "
            f"| {s['mae']['mean']:.4g} ± {s['mae']['std']:.2g} | {s['r2']['n']} |")
    lines += [f"\nnote: {n}" for n in report.get("notes", [])]
    return "\n".join(lines)


def _summarise(methods, runs):
    out = {}
    for method in methods:
        out[method] = {}
        for metric in ("r2", "mse", "mae"):
            vals = np.array([r["methods"][method][metric] for r in runs
                             if method in r["methods"]], dtype=float)
            vals = vals[np.isfinite(vals)]
            out[method][metric] = {
                "mean": float(vals.mean()) if vals.size else float("nan"),
                "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                "n": int(vals.size),
            }
    return out


def run_experiment(cfg: ExperimentConfig, keep_artifacts: bool = False, progress=None) -> ReportTable:
    """Run ``cfg.runs`` seeded runs of every roster method and aggregate."""
    raw = load_dataset(cfg)
    runner = run_imputation if cfg.mode == "impute" else run_noise
    runs, failures, artifacts = [], [], {}
    for i in range(cfg.runs):
        seed = cfg.base_seed + i
        try:
            results, art = runner(cfg, raw, i, keep=keep_artifacts and i == 0)
        except Exception as exc:  # a failed run is recorded, not fatal
            log.warning("run %d failed: %s", i, exc)
            failures.append({"run": i, "seed": seed, "error": repr(exc),
                             "traceback": traceback.format_exc()})
            continue
        if art:
            artifacts[i] = art
        runs.append({"run": i, "seed": seed,
                     "methods": {k: {**v.metrics.as_dict(), **v.info} for k, v in results.items()}})
        if progress is not None:
            progress(i, results)
    return ReportTable(list(cfg.methods), runs, _summarise(cfg.methods, runs), failures,
                       cfg.to_dict(), artifacts, _notes(cfg))


def _notes(cfg: ExperimentConfig) -> list:
    notes = []
    uses_mice = "impute:mice" in cfg.methods or (
        "best-imputation" in cfg.methods and "mice" in cfg.imputers)
    if cfg.mode == "impute" and uses_mice:
        notes.append(MICE_NOTE)
    return notes
