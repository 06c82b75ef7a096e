"""Numeric tables with missingness masks, splits and simulators.

Missing cells are stored as NaN in ``values`` and flagged in
``missing_mask``. Simulators (masking, label noise) only touch training rows;
pass a :class:`SplitPlan` to say which rows those are.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass
class DataMatrix:
    column_names: list[str]
    values: np.ndarray
    missing_mask: np.ndarray
    target_index: int
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        if self.values.shape != self.missing_mask.shape:
            raise DataError("values and missing_mask shapes differ")
        if len(self.column_names) != self.values.shape[1]:
            raise DataError("one column name per column required")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def feature_indices(self) -> list[int]:
        return [j for j in range(self.values.shape[1]) if j != self.target_index]

    @property
    def target(self) -> np.ndarray:
        return self.values[:, self.target_index]

    @property
    def standardized(self) -> bool:
        return self.mean is not None

    def column_index(self, column) -> int:
        if isinstance(column, (int, np.integer)):
            if not 0 <= column < len(self.column_names):
                raise DataError(f"column index {column} out of range")
            return int(column)
        try:
            return self.column_names.index(column)
        except ValueError:
            raise DataError(f"unknown column {column!r}") from None

    def features(self, rows=None) -> np.ndarray:
        v = self.values if rows is None else self.values[rows]
        return v[:, self.feature_indices]

    def copy(self) -> "DataMatrix":
        return replace(
            self,
            column_names=list(self.column_names),
            values=self.values.copy(),
            missing_mask=self.missing_mask.copy(),
            mean=None if self.mean is None else self.mean.copy(),
            std=None if self.std is None else self.std.copy(),
        )

    def to_raw(self, values, column) -> np.ndarray:
        """Map standardized values of ``column`` back to original units."""
        j = self.column_index(column)
        v = np.asarray(values, dtype=float)
        if self.mean is None:
            return v
        return v * self.std[j] + self.mean[j]

    def to_standard(self, values, column) -> np.ndarray:
        j = self.column_index(column)
        v = np.asarray(values, dtype=float)
        if self.mean is None:
            return v
        return (v - self.mean[j]) / self.std[j]


@dataclass
class HypothesisSpec:
    """Candidate values (in original units) for one incomplete column."""

    column_index: int
    class_values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.class_values)
        if not vals:
            raise DataError("at least one hypothesis class value required")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DataError(f"class values must be strictly increasing, got {vals}")
        self.class_values = vals

    @property
    def n_classes(self) -> int:
        return len(self.class_values)

    def nearest_class(self, values) -> np.ndarray:
        """Index of the nearest class value; ties go to the lower class."""
        v = np.asarray(values, dtype=float).reshape(-1, 1)
        d = np.abs(v - np.asarray(self.class_values)[None, :])
        return np.argmin(d, axis=1)  # argmin returns the first (lowest) on ties


@dataclass
class SplitPlan:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.train = np.asarray(self.train, dtype=int)
        self.validation = np.asarray(self.validation, dtype=int)
        self.test = np.asarray(self.test, dtype=int)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "train": self.train.tolist(),
            "validation": self.validation.tolist(),
            "test": self.test.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitPlan":
        return cls(d["train"], d["validation"], d["test"], d.get("seed", 0))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SplitPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _train_rows(data: DataMatrix, plan: SplitPlan | None) -> np.ndarray:
    return np.arange(data.n_rows) if plan is None else plan.train


def from_array(values, column_names, target, missing_mask=None) -> DataMatrix:
    values = np.asarray(values, dtype=float)
    mask = np.isnan(values) if missing_mask is None else np.asarray(missing_mask, dtype=bool)
    names = list(column_names)
    t = names.index(target) if isinstance(target, str) else int(target)
    if mask[:, t].any():
        raise DataError("target column has missing cells")
    values = values.copy()
    values[mask] = np.nan
    return DataMatrix(names, values, mask, t)


def load_csv(path, target_column: str) -> DataMatrix:
    """Read a UTF-8 comma-separated file with a header; empty cells are missing."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for cell in row:
                cell = cell.strip()
                if cell == "":
                    parsed.append(np.nan)
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric cell {cell!r}") from None
            rows.append(parsed)
    if target_column not in header:
        raise DataError(f"{path}: no target column {target_column!r}")
    values = np.array(rows, dtype=float).reshape(len(rows), len(header))
    mask = np.isnan(values)
    t = header.index(target_column)
    if mask[:, t].any():
        bad = int(np.flatnonzero(mask[:, t])[0]) + 2
        raise DataError(f"{path}:{bad}: target column {target_column!r} is empty")
    return DataMatrix(header, values, mask, t)


AIRFOIL_COLUMNS = [
    "frequency",
    "angle_of_attack",
    "chord_length",
    "free_stream_velocity",
    "suction_side_displacement_thickness",
    "scaled_sound_pressure",
]

# distinct chord lengths (m) in the NASA airfoil self-noise measurements
AIRFOIL_CHORD_CLASSES = (0.0254, 0.0508, 0.1016, 0.1524, 0.2286, 0.3048)


def load_airfoil(path) -> DataMatrix:
    """Load the UCI airfoil self-noise table.

    Accepts the original whitespace-separated ``airfoil_self_noise.dat`` (no
    header) or a CSV with a header that contains ``scaled_sound_pressure``.
    """
    path = Path(path)
    first = path.read_text(encoding="utf-8").lstrip().split("\n", 1)[0]
    if "," in first and any(c.isalpha() for c in first):
        return load_csv(path, "scaled_sound_pressure")
    values = np.loadtxt(path, dtype=float)
    if values.ndim != 2 or values.shape[1] != 6:
        raise DataError(f"{path}: expected 6 columns, got shape {values.shape}")
    return from_array(values, AIRFOIL_COLUMNS, "scaled_sound_pressure")


def write_csv(data: DataMatrix, path, raw: bool = True) -> None:
    """Write ``data`` with empty cells for missing values."""
    vals = data.values
    if raw and data.mean is not None:
        vals = vals * data.std + data.mean
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(data.column_names)
        for row, m in zip(vals, data.missing_mask):
            w.writerow(["" if mi else repr(float(v)) for v, mi in zip(row, m)])


def split_dataset(data: DataMatrix, fractions=(0.7, 0.15, 0.15), seed: int = 0) -> SplitPlan:
    fr = np.asarray(fractions, dtype=float)
    if fr.shape != (3,) or np.any(fr <= 0) or abs(fr.sum() - 1.0) > 1e-9:
        raise DataError(f"fractions must be three positive numbers summing to 1, got {fractions}")
    n = data.n_rows
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fr[0] * n))
    n_val = int(round(fr[1] * n))
    parts = order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]
    if any(len(p) == 0 for p in parts):
        raise DataError(f"split of {n} rows by {tuple(fr)} leaves an empty partition")
    return SplitPlan(*parts, seed=seed)


def standardize(data: DataMatrix, plan: SplitPlan | None = None) -> DataMatrix:
    """Z-score every column with training-row, observed-cell statistics."""
    rows = _train_rows(data, plan)
    sub = data.values[rows]
    obs = ~data.missing_mask[rows]
    n_cols = data.values.shape[1]
    mean = np.zeros(n_cols)
    std = np.ones(n_cols)
    for j in range(n_cols):
        col = sub[obs[:, j], j]
        if col.size == 0:
            continue
        mean[j] = col.mean()
        s = col.std()
        std[j] = s if s > 0 else 1.0  # constant column -> zeros
    if data.mean is not None:
        # compose with an earlier standardization so to_raw stays exact
        base = data.copy()
        base.values = base.values * base.std + base.mean
        base.mean = base.std = None
        return standardize(base, plan)
    out = data.copy()
    out.values = (data.values - mean) / std
    out.values[out.missing_mask] = np.nan
    out.mean, out.std = mean, std
    return out


def unstandardize(data: DataMatrix) -> DataMatrix:
    if data.mean is None:
        return data.copy()
    out = data.copy()
    out.values = data.values * data.std + data.mean
    out.mean = out.std = None
    return out


def mask_column(data: DataMatrix, column, missing_rate: float, seed: int = 0,
                plan: SplitPlan | None = None) -> DataMatrix:
    """Hide ``round(missing_rate * n_train)`` training cells of ``column`` at random."""
    j = data.column_index(column)
    if j == data.target_index:
        raise DataError("cannot mask the target column")
    if not 0.0 <= missing_rate < 1.0:
        raise DataError(f"missing_rate must be in [0, 1), got {missing_rate}")
    rows = _train_rows(data, plan)
    n_mask = int(round(missing_rate * len(rows)))
    if n_mask == 0:
        return data.copy()
    already = data.missing_mask[rows, j]
    if n_mask >= len(rows) or (~already).sum() - n_mask <= 0:
        raise DataError("masking would leave no observed training cells")
    candidates = rows[~already]
    rng = np.random.default_rng(seed)
    chosen = rng.choice(candidates, size=min(n_mask, len(candidates)), replace=False)
    out = data.copy()
    out.missing_mask[chosen, j] = True
    out.values[chosen, j] = np.nan
    return out


def inject_noise(data: DataMatrix, fraction: float, level_lo: float, level_hi: float,
                 seed: int = 0, plan: SplitPlan | None = None):
    """Shift the target of a random subset of training rows by ``+-u * range``.

    Returns the noised copy and the sorted ids of the perturbed rows.
    """
    if not 0.0 <= fraction <= 1.0:
        raise DataError("noise fraction must lie in [0, 1]")
    if not 0.0 <= level_lo <= level_hi:
        raise DataError("need 0 <= level_lo <= level_hi")
    rows = _train_rows(data, plan)
    n = int(round(fraction * len(rows)))
    if n == 0:
        return data.copy(), np.array([], dtype=int)
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(rows, size=n, replace=False))
    t = data.values[rows, data.target_index]
    span = t.max() - t.min()
    u = rng.uniform(level_lo, level_hi, size=n)
    sign = rng.choice([-1.0, 1.0], size=n)
    out = data.copy()
    out.values[chosen, data.target_index] += sign * u * span
    return out, chosen


def derive_hypothesis_classes(data: DataMatrix, column, mode: str = "explicit", *,
                              values=None, bins: int | None = None,
                              plan: SplitPlan | None = None) -> HypothesisSpec:
    """Build the class list for ``column``.

    ``mode="explicit"`` takes ``values`` as given (original units).
    ``mode="quantile"`` splits the observed training values into ``bins``
    equal-mass bins and uses each bin's middle quantile.
    """
    j = data.column_index(column)
    if mode == "explicit":
        if values is None:
            raise DataError("explicit mode needs class values")
        return HypothesisSpec(j, tuple(sorted(float(v) for v in values)))
    if mode != "quantile":
        raise DataError(f"unknown mode {mode!r}")
    if bins is None or bins < 1:
        raise DataError("quantile mode needs bins >= 1")
    rows = _train_rows(data, plan)
    col = data.values[rows, j][~data.missing_mask[rows, j]]
    if data.mean is not None:
        col = data.to_raw(col, j)
    if len(np.unique(col)) < bins:
        raise DataError(f"{len(np.unique(col))} distinct observed values for {bins} bins")
    qs = np.quantile(col, (np.arange(bins) + 0.5) / bins)
    if np.any(np.diff(qs) <= 0):
        raise DataError("quantile class values collapse; use fewer bins")
    return HypothesisSpec(j, tuple(float(q) for q in qs))
