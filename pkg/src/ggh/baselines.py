"""Reference methods for incomplete tables: dropping and light imputers.

Every imputer takes a :class:`~ggh.data.DataMatrix` (or an array with NaN for
missing cells) and returns an :class:`ImputedMatrix`; observed cells are
copied through untouched.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import DataError, DataMatrix, SplitPlan


@dataclass
class ImputedMatrix:
    values: np.ndarray
    method: str
    imputed: np.ndarray
    trace: list = field(default_factory=list)

    def to_csv(self, path, column_names=None) -> None:
        """Write values to ``path`` and the imputed flags to ``<stem>.imputed-mask.csv``."""
        names = column_names or [f"c{j}" for j in range(self.values.shape[1])]
        path = str(path)
        stem = path[:-4] if path.endswith(".csv") else path
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            w.writerows([[repr(float(v)) for v in row] for row in self.values])
        with open(stem + ".imputed-mask.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            w.writerows(self.imputed.astype(int).tolist())


def _unpack(data):
    if isinstance(data, DataMatrix):
        X = data.values.copy()
        mask = data.missing_mask.copy()
    else:
        X = np.array(data, dtype=float)
        mask = np.isnan(X)
    X[mask] = np.nan
    return X, mask


def _finish(X, mask, method, trace=None) -> ImputedMatrix:
    return ImputedMatrix(X, method, mask.copy(), trace or [])


def complete_columns(data: DataMatrix, plan: SplitPlan | None = None) -> DataMatrix:
    """Drop every column with a missing training cell."""
    rows = np.arange(data.n_rows) if plan is None else plan.train
    bad = data.missing_mask[rows].any(axis=0)
    if bad[data.target_index]:
        raise DataError("target column has missing training cells")
    keep = np.flatnonzero(~bad)
    out = data.copy()
    out.column_names = [data.column_names[j] for j in keep]
    out.values = data.values[:, keep]
    out.missing_mask = data.missing_mask[:, keep]
    out.target_index = int(np.flatnonzero(keep == data.target_index)[0])
    if data.mean is not None:
        out.mean, out.std = data.mean[keep], data.std[keep]
    return out


def complete_rows(data: DataMatrix, plan: SplitPlan | None = None):
    """Drop incomplete training rows.

    Returns the reduced matrix and the split plan re-indexed to it (``None``
    when no plan was given).
    """
    rows = np.arange(data.n_rows) if plan is None else plan.train
    drop = rows[data.missing_mask[rows].any(axis=1)]
    if len(drop) == len(rows):
        raise DataError("no complete training row left")
    keep = np.setdiff1d(np.arange(data.n_rows), drop)
    out = data.copy()
    out.values = data.values[keep]
    out.missing_mask = data.missing_mask[keep]
    if plan is None:
        return out, None
    remap = -np.ones(data.n_rows, dtype=int)
    remap[keep] = np.arange(len(keep))
    new_plan = SplitPlan(remap[np.setdiff1d(plan.train, drop, assume_unique=True)],
                         remap[plan.validation], remap[plan.test], plan.seed)
    return out, new_plan


def mean_impute(data) -> ImputedMatrix:
    X, mask = _unpack(data)
    for j in np.flatnonzero(mask.any(axis=0)):
        obs = X[~mask[:, j], j]
        if obs.size == 0:
            raise DataError(f"column {j} has no observed value")
        X[mask[:, j], j] = obs.mean()
    return _finish(X, mask, "mean")


def knn_impute(data, k: int = 5, weighting: str = "distance") -> ImputedMatrix:
    """Weighted k-nearest-neighbour imputation.

    Distances use the features observed in both rows, rescaled to the full
    width (``sqrt(p / shared * sum d^2)``). Ties are broken by row order.
    With ``weighting="distance"`` donors are weighted by inverse distance and
    exact matches (distance 0) take all the weight.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if weighting not in ("distance", "uniform"):
        raise ValueError("weighting must be 'distance' or 'uniform'")
    X, mask = _unpack(data)
    out = X.copy()
    obs = ~mask
    p = X.shape[1]
    Z = np.where(obs, X, 0.0)
    for i in np.flatnonzero(mask.any(axis=1)):
        shared = obs & obs[i]
        diff2 = np.where(shared, (Z - Z[i]) ** 2, 0.0)
        n_shared = shared.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.sqrt(diff2.sum(axis=1) * p / n_shared)
        dist[n_shared == 0] = np.inf
        dist[i] = np.inf
        for j in np.flatnonzero(mask[i]):
            donors = np.flatnonzero(obs[:, j] & np.isfinite(dist))
            if donors.size == 0:
                raise DataError(f"no donor row for cell ({i}, {j})")
            order = donors[np.argsort(dist[donors], kind="stable")[:k]]
            d = dist[order]
            vals = X[order, j]
            if weighting == "uniform":
                out[i, j] = vals.mean()
            elif np.any(d == 0):
                out[i, j] = vals[d == 0].mean()
            else:
                w = 1.0 / d
                out[i, j] = (w * vals).sum() / w.sum()
    return _finish(out, mask, f"knn{k}")


def matrix_factorization_impute(data, rank: int = 2, lr: float = 0.01, epochs: int = 200,
                                reg: float = 0.0, seed: int = 0) -> ImputedMatrix:
    """Fit ``X ~ U V^T`` on observed cells by SGD and fill missing cells from it.

    ``trace`` holds the observed-cell RMSE after every epoch.
    """
    X, mask = _unpack(data)
    n, m = X.shape
    if rank < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    U = rng.normal(0.0, 0.5, size=(n, rank))
    V = rng.normal(0.0, 0.5, size=(m, rank))
    rows, cols = np.nonzero(~mask)
    vals = X[rows, cols]
    trace = []
    for _ in range(epochs):
        for t in rng.permutation(len(rows)):
            i, j = rows[t], cols[t]
            u, v = U[i].copy(), V[j]
            err = u @ v - vals[t]
            U[i] -= lr * (err * v + reg * u)
            V[j] -= lr * (err * u + reg * v)
        resid = np.einsum("ij,ij->i", U[rows], V[cols]) - vals
        trace.append(float(np.sqrt(np.mean(resid ** 2))))
    out = X.copy()
    out[mask] = (U @ V.T)[mask]
    return _finish(out, mask, f"mf{rank}", trace)


def _soft_threshold_svd(M, lam):
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - lam, 0.0)
    return (u * s) @ vt, s


def soft_impute(data, lam: float = 0.1, max_iters: int = 100, tol: float = 1e-5) -> ImputedMatrix:
    """Iterative singular-value soft-thresholding (spectral regularisation).

    ``trace`` holds ``1/2 ||P_obs(X - Z)||^2 + lam ||Z||_*`` per iteration,
    which never increases.
    """
    X, mask = _unpack(data)
    obs = ~mask
    Z = np.zeros_like(X)
    Xo = np.where(obs, X, 0.0)
    trace = []
    for _ in range(max_iters):
        Z_new, s = _soft_threshold_svd(np.where(obs, Xo, Z), lam)
        trace.append(float(0.5 * np.sum((Xo - Z_new)[obs] ** 2) + lam * s.sum()))
        denom = max(np.sum(Z ** 2), 1e-300)
        change = np.sum((Z_new - Z) ** 2) / denom
        Z = Z_new
        if change < tol:
            break
    out = X.copy()
    out[mask] = Z[mask]
    return _finish(out, mask, "softimpute", trace)


def iterative_impute(data, rounds: int = 10) -> ImputedMatrix:
    """Single-chain MICE: regress each incomplete column on all others and refill.

    Starts from the mean fill; ``trace`` holds the largest change of any
    imputed cell per round.
    """
    X, mask = _unpack(data)
    out = mean_impute(X).values
    cols = np.flatnonzero(mask.any(axis=0))
    trace = []
    for _ in range(rounds):
        before = out[mask].copy()
        for j in cols:
            miss = mask[:, j]
            others = np.delete(out, j, axis=1)
            A = np.column_stack([others, np.ones(len(out))])
            coef, *_ = np.linalg.lstsq(A[~miss], out[~miss, j], rcond=None)
            out[miss, j] = A[miss] @ coef
        trace.append(float(np.max(np.abs(out[mask] - before))) if mask.any() else 0.0)
    return _finish(out, mask, "mice", trace)


IMPUTERS = {
    "mean": lambda d, seed: mean_impute(d),
    "knn": lambda d, seed: knn_impute(d, k=5),
    "mf": lambda d, seed: matrix_factorization_impute(d, rank=2, lr=0.01, epochs=100, seed=seed),
    "softimpute": lambda d, seed: soft_impute(d, lam=0.1, max_iters=200),
    "mice": lambda d, seed: iterative_impute(d, rounds=10),
}
