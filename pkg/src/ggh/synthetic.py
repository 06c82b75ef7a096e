"""Synthetic regression tables with known ground truth.

Used by the tests and demos wherever the real benchmark tables are not
available: the masked column (or the noise) is generated, so every oracle
label is known exactly.
"""
from __future__ import annotations

import numpy as np

from .data import DataMatrix, from_array

DEFAULT_CLASSES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def make_hypothesis_data(n_rows: int = 1000, class_values=DEFAULT_CLASSES, seed: int = 0,
                         noise: float = 0.02, n_features: int = 4) -> DataMatrix:
    """Table whose target depends strongly on a discrete column ``c``.

    Columns are ``x1 .. x{n_features}``, ``c`` and ``y`` with
    ``y = x1 + 0.5 x2^2 + 0.3 sin(3 x3) + 3 c (1 + 0.5 x4) + noise``;
    ``c`` is drawn uniformly from ``class_values``.
    """
    if n_features < 4:
        raise ValueError("need at least four continuous features")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n_rows, n_features))
    c = rng.choice(np.asarray(class_values, dtype=float), size=n_rows)
    y = (X[:, 0] + 0.5 * X[:, 1] ** 2 + 0.3 * np.sin(3.0 * X[:, 2])
         + 3.0 * c * (1.0 + 0.5 * X[:, 3]) + noise * rng.standard_normal(n_rows))
    names = [f"x{i + 1}" for i in range(n_features)] + ["c", "y"]
    return from_array(np.column_stack([X, c, y]), names, "y")


def make_noise_data(n_rows: int = 600, seed: int = 0, noise: float = 0.02,
                    n_extreme: int = 0) -> tuple[DataMatrix, np.ndarray]:
    """Smooth regression table, optionally with rare but correct extreme rows.

    Extreme rows push ``x1`` well beyond the bulk of the data while keeping
    the same generating function; their ids are returned.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n_rows, 4))
    extreme = np.sort(rng.choice(n_rows, size=n_extreme, replace=False)) if n_extreme else \
        np.zeros(0, dtype=int)
    if n_extreme:
        X[extreme, 0] = rng.choice([-1.0, 1.0], size=n_extreme) * rng.uniform(1.6, 2.0, n_extreme)
    y = (np.sin(1.5 * X[:, 0]) + 0.5 * X[:, 1] * X[:, 2] + 0.4 * X[:, 3] ** 2
         + noise * rng.standard_normal(n_rows))
    names = ["x1", "x2", "x3", "x4", "y"]
    return from_array(np.column_stack([X, y]), names, "y"), extreme
