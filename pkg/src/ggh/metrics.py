"""Regression metrics and early stopping."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    r2: float
    mse: float
    mae: float

    def as_dict(self) -> dict:
        return {"r2": self.r2, "mse": self.mse, "mae": self.mae}


def compute_metrics(predictions, targets) -> Metrics:
    """R2, MSE and MAE; R2 is NaN when the targets have zero variance."""
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if p.shape != t.shape or p.size == 0:
        raise ValueError("predictions and targets must be non-empty and of equal length")
    err = p - t
    sse = float(np.sum(err ** 2))
    sst = float(np.sum((t - t.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else float("nan")
    return Metrics(r2, sse / t.size, float(np.mean(np.abs(err))))


def early_stop(validation_losses, patience: int) -> int:
    """Index of the best epoch, scanning until ``patience`` epochs pass without improvement.

    Only a strictly lower loss counts as an improvement, so ties keep the
    earlier epoch.
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    best, best_i, since = np.inf, -1, 0
    for i, v in enumerate(validation_losses):
        if v < best:
            best, best_i, since = v, i, 0
        else:
            since += 1
            if since >= patience:
                break
    return best_i
