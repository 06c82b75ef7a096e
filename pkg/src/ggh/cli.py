"""Command line entry point: ``ggh <command> --config exp.json [--seed N] [--runs N] [--out-dir D]``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 run failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import DataError, inject_noise, mask_column, split_dataset, standardize, write_csv
from .embedding import oracle_label, project_2d, selection_histogram, tightness, write_histogram_csv
from .enrichment import GROUND_CLASS
from .harness import (BASELINE_ROSTER, ConfigError, ExperimentConfig, ReportTable, load_dataset,
                      render_markdown, run_experiment)
from .noise import write_confusion_json
from .selection import enriched_vectors

log = logging.getLogger("ggh")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUN = 0, 1, 2, 3


def _config(args, mode=None) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.runs is not None:
        if args.runs < 1:
            raise ConfigError("--runs must be >= 1")
        cfg.runs = args.runs
    if mode is not None and cfg.mode != mode:
        raise ConfigError(f"this command needs a {mode}-mode config, got {cfg.mode}")
    return cfg


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(table: ReportTable, out: Path) -> None:
    table.to_csv(out / "report.csv")
    table.to_json(out / "report.json")
    print(table.to_markdown())
    if table.failures:
        for f in table.failures:
            log.error("run %s (seed %s) failed: %s", f["run"], f["seed"], f["error"])


def _progress(i, results):
    parts = ", ".join(f"{k}={100 * v.metrics.r2:.1f}" for k, v in results.items())
    log.info("run %d: %s", i, parts)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    raw = load_dataset(cfg)
    out = _out(args)
    plan = split_dataset(raw, cfg.split, cfg.base_seed)
    plan.save(out / "plan.json")
    if cfg.mode == "impute":
        col = raw.column_index(cfg.masked_column)
        sim = mask_column(raw, col, cfg.missing_rate, cfg.base_seed, plan)
        hidden = np.flatnonzero(sim.missing_mask[:, col] & ~raw.missing_mask[:, col])
        with open(out / "truth.csv", "w") as fh:
            fh.write(f"row_id,{raw.column_names[col]}\n")
            for r in hidden:
                fh.write(f"{r},{float(raw.values[r, col])!r}\n")
    else:
        sim, ids = inject_noise(raw, cfg.noise_fraction, *cfg.noise_levels, cfg.base_seed, plan)
        t = raw.target_index
        with open(out / "truth.csv", "w") as fh:
            fh.write(f"row_id,clean_{raw.column_names[t]},noisy\n")
            noisy = set(ids.tolist())
            for r in plan.train:
                fh.write(f"{r},{float(raw.values[r, t])!r},{int(r in noisy)}\n")
    write_csv(sim, out / "simulated.csv")
    print(f"wrote {out / 'simulated.csv'}, truth.csv and plan.json")
    return EXIT_OK


def cmd_impute_train(args) -> int:
    cfg = _config(args, "impute")
    out = _out(args)
    table = run_experiment(cfg, keep_artifacts=True, progress=_progress)
    _write_report(table, out)
    art = table.artifacts.get(0)
    if art and "ggh" in art:
        res = art["ggh"]
        correct = oracle_label(res.batch, art["truth"], art["spec"])
        res.history.to_csv(out / "history.csv", res.batch.hyp_class, correct)
    return EXIT_RUN if not table.runs else EXIT_OK


def cmd_baseline(args) -> int:
    cfg = _config(args, "impute")
    cfg.methods = list(BASELINE_ROSTER)
    table = run_experiment(cfg, progress=_progress)
    _write_report(table, _out(args))
    return EXIT_RUN if not table.runs else EXIT_OK


def cmd_noise_filter(args) -> int:
    cfg = _config(args, "noise")
    out = _out(args)
    table = run_experiment(cfg, keep_artifacts=True, progress=_progress)
    _write_report(table, out)
    art = table.artifacts.get(0)
    if art and "verdict" in art:
        art["verdict"].to_csv(out / "verdict.csv")
        write_confusion_json(out / "confusion.json", art["confusion"])
    return EXIT_RUN if not table.runs else EXIT_OK


def cmd_export_embeddings(args) -> int:
    cfg = _config(args, "impute")
    cfg.runs = 1
    cfg.methods = ["ggh"]
    out = _out(args)
    table = run_experiment(cfg, keep_artifacts=True)
    if not table.runs:
        for f in table.failures:
            log.error("%s", f["error"])
        return EXIT_RUN
    art = table.artifacts[0]
    res, spec = art["ggh"], art["spec"]
    batch = res.batch
    correct = oracle_label(batch, art["truth"], spec)
    last = res.epoch_metrics[-1]["epoch"] if res.epoch_metrics else 0
    es, hyp = enriched_vectors(res.final_model, batch, cfg.ggh, last)
    is_ground = es.class_ids == GROUND_CLASS
    hyp_ok = np.concatenate([np.zeros(is_ground.sum(), dtype=bool), correct[hyp]])
    labels = np.where(is_ground, "ground", np.where(hyp_ok, "correct", "potentially-incorrect"))
    cloud = project_2d(es.vectors, es.row_ids, es.class_ids, labels)
    cloud.to_csv(out / "embeddings.csv")
    edges, c_ok, c_bad = selection_histogram(res.history.frequency, correct, bins=args.bins,
                                             eligible=~batch.excluded)
    write_histogram_csv(out / "histogram.csv", edges, c_ok, c_bad)
    res.history.to_csv(out / "history.csv", batch.hyp_class, correct)
    tight = tightness(es.vectors, is_ground, hyp_ok)
    (out / "tightness.json").write_text(json.dumps(tight, indent=2))
    print(f"tightness (mean distance to ground centroid): {tight}")
    return EXIT_OK


def cmd_report(args) -> int:
    paths = [Path(p) for p in args.reports] or [Path(args.out_dir) / "report.json"]
    for p in paths:
        try:
            rep = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read report {p}: {exc}") from None
        print(f"## {p}")
        print(render_markdown(rep))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggh", description="Gradient-guided hypothesis experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment config (JSON)")
        sp.add_argument("--seed", type=int, help="base seed (overrides config)")
        sp.add_argument("--runs", type=int, help="number of runs (overrides config)")
        sp.add_argument("--out-dir", default="out", help="output directory")
        return sp

    common(sub.add_parser("simulate", help="write the masked/noised CSV plus truth sidecar")) \
        .set_defaults(func=cmd_simulate)
    common(sub.add_parser("impute-train", help="GGH vs reference methods on masked data")) \
        .set_defaults(func=cmd_impute_train)
    common(sub.add_parser("noise-filter", help="noise-filter benchmark")) \
        .set_defaults(func=cmd_noise_filter)
    common(sub.add_parser("baseline", help="baseline and imputer roster only")) \
        .set_defaults(func=cmd_baseline)
    sp = common(sub.add_parser("export-embeddings", help="projections and selection histograms"))
    sp.add_argument("--bins", type=int, default=10)
    sp.set_defaults(func=cmd_export_embeddings)
    sp = common(sub.add_parser("report", help="render report.json files as a table"))
    sp.add_argument("reports", nargs="*")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # anything else is a failed run
        log.debug("run failure", exc_info=True)
        print(f"run failure: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
