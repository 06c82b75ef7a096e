# Recovering from a mostly-missing column
#
# A synthetic table where the target depends strongly on a discrete column
# ``c``. We hide ``c`` in 90% of the training rows and compare three ways
# of training a regressor: drop the column, guess it with an imputer, or
# expand every incomplete row into one hypothesis per candidate value and
# let GGH pick the hypotheses whose gradients look like the complete rows.

import numpy as np

from ggh import (ExperimentConfig, GGHConfig, HypothesisSpec, ggh_train, load_dataset,
                 mask_column, run_experiment, split_dataset, standardize)
from ggh.embedding import oracle_label

# ## The data

cfg = ExperimentConfig.from_dict({
    "dataset": "synthetic:hypothesis",
    "missing_rate": 0.9,
    "runs": 3,
    "methods": ["complete-columns", "best-imputation", "ggh", "complete-data"],
    "ggh": {"epochs": 200},
})
raw = load_dataset(cfg)
print(raw.column_names, raw.n_rows)

plan = split_dataset(raw, seed=0)
col = raw.column_index("c")
masked = mask_column(raw, col, 0.9, seed=0, plan=plan)
print("complete training rows:", int((~masked.missing_mask[plan.train, col]).sum()))

# ## One GGH run, looked at from the inside

d = standardize(masked, plan)
spec = HypothesisSpec(col, tuple(cfg.class_values))
res = ggh_train(d, spec, GGHConfig(epochs=200, patience=None, seed=0), plan)
batch = res.batch
print(batch.n_ground, "ground rows,", batch.n_hypotheses, "hypotheses")

# How often was each hypothesis kept after warmup? The oracle knows which
# class value each hidden cell really had.
correct = oracle_label(batch, raw.values[:, col], spec)
seen = ~batch.excluded & (res.history.eligible > 0)
freq = res.history.frequency
print("mean selection frequency, correct:   %.3f" % freq[seen & correct].mean())
print("mean selection frequency, incorrect: %.3f" % freq[seen & ~correct].mean())

# ## Against the reference methods, a few seeded runs

table = run_experiment(cfg)
print(table.to_markdown())
