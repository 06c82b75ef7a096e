# What the enriched gradients look like
#
# Project the final-epoch enriched gradients of ground rows and hypotheses
# onto their top two principal components and measure how far each group
# sits from the ground centroid. Correct hypotheses stay close; wrong ones
# scatter. The CSVs can be plotted with any tool.

import json
from pathlib import Path

import numpy as np

from ggh import ExperimentConfig, load_dataset
from ggh.embedding import oracle_label, project_2d, selection_histogram, tightness, write_histogram_csv
from ggh.enrichment import GROUND_CLASS
from ggh.harness import run_imputation
from ggh.selection import enriched_vectors

out = Path("demo_out")
out.mkdir(exist_ok=True)

cfg = ExperimentConfig.from_dict({"dataset": "synthetic:hypothesis", "missing_rate": 0.9,
                                  "methods": ["ggh"], "runs": 1,
                                  "ggh": {"epochs": 150, "patience": None}})
_, art = run_imputation(cfg, load_dataset(cfg), 0, keep=True)
res, spec = art["ggh"], art["spec"]
correct = oracle_label(res.batch, art["truth"], spec)

es, hyp = enriched_vectors(res.final_model, res.batch, cfg.ggh, res.epoch_metrics[-1]["epoch"])
ground = es.class_ids == GROUND_CLASS
ok = np.concatenate([np.zeros(ground.sum(), dtype=bool), correct[hyp]])
labels = np.where(ground, "ground", np.where(ok, "correct", "potentially-incorrect"))

cloud = project_2d(es.vectors, es.row_ids, es.class_ids, labels)
cloud.to_csv(out / "embeddings.csv")
print("explained variance of the two components:", cloud.variances)

print(json.dumps(tightness(es.vectors, ground, ok), indent=2))

edges, c_ok, c_bad = selection_histogram(res.history.frequency, correct, bins=10,
                                         eligible=~res.batch.excluded)
write_histogram_csv(out / "histogram.csv", edges, c_ok, c_bad)
for lo, a, b in zip(edges, c_ok, c_bad):
    print("%.1f  %5d correct  %5d incorrect" % (lo, a, b))
