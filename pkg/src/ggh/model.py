"""Dense ReLU regression network with per-sample gradients.

Everything is plain numpy in double precision. The loss is the per-sample
squared error ``(y_hat - t) ** 2``; batch losses use mean reduction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MlpModel:
    """Weights and biases of a feed-forward network.

    ``weights[k]`` maps layer ``k`` to layer ``k + 1`` and has shape
    ``(layer_dims[k + 1], layer_dims[k])``.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def penultimate(self) -> int:
        """Index of the transform producing the last hidden activation."""
        return self.n_layers - 2

    @property
    def penultimate_dim(self) -> int:
        k = self.penultimate
        return self.weights[k].size + self.biases[k].size

    def copy(self) -> "MlpModel":
        return MlpModel(
            tuple(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b.ravel()]
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> "MlpModel":
        out = self.copy()
        pos = 0
        for k in range(out.n_layers):
            w, b = out.weights[k], out.biases[k]
            out.weights[k] = np.asarray(flat[pos:pos + w.size], dtype=float).reshape(w.shape)
            pos += w.size
            out.biases[k] = np.asarray(flat[pos:pos + b.size], dtype=float).copy()
            pos += b.size
        return out


@dataclass
class PerSampleGradients:
    """Per-sample outputs of one forward/backward pass.

    ``penultimate_grads[i]`` is the flattened gradient of sample ``i``'s loss
    with respect to the penultimate transform (weights row-major, then bias).
    """

    row_ids: np.ndarray
    penultimate_grads: np.ndarray
    losses: np.ndarray
    predictions: np.ndarray

    def __len__(self) -> int:
        return len(self.row_ids)


@dataclass
class Gradients:
    """Full-parameter gradient, shaped like the model parameters."""

    weights: list[np.ndarray]
    biases: list[np.ndarray] = field(default_factory=list)

    def scaled(self, factor: float) -> "Gradients":
        return Gradients([w * factor for w in self.weights], [b * factor for b in self.biases])

    def flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b.ravel()]
        return np.concatenate(parts)


def _check_dims(layer_dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 3:
        raise ValueError(f"need input, at least one hidden layer and output, got {dims}")
    if any(d <= 0 for d in dims):
        raise ValueError(f"layer dimensions must be positive, got {dims}")
    if dims[-1] != 1:
        raise ValueError("regression network must have a single output unit")
    return dims


def init_model(layer_dims, seed: int = 0) -> MlpModel:
    """Uniform fan-in initialisation, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
    dims = _check_dims(layer_dims)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(dims, weights, biases)


def _as_inputs(model: MlpModel, inputs, targets=None):
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.layer_dims[0]:
        raise ValueError(f"input width {X.shape[1]} != model input {model.layer_dims[0]}")
    if targets is None:
        return X, None
    t = np.asarray(targets, dtype=float).reshape(-1)
    if t.shape[0] != X.shape[0]:
        raise ValueError(f"{t.shape[0]} targets for {X.shape[0]} rows")
    return X, t


def _forward(model: MlpModel, X: np.ndarray):
    """Return pre-activations and activations of every layer."""
    acts = [X]
    pres = []
    a = X
    last = model.n_layers - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        pres.append(z)
        a = z if k == last else np.maximum(z, 0.0)
        acts.append(a)
    return pres, acts


def _deltas(model: MlpModel, pres, acts, t):
    """Per-sample error signals dL/dz for every layer (output last)."""
    out = acts[-1][:, 0]
    deltas = [None] * model.n_layers
    deltas[-1] = (2.0 * (out - t))[:, None]
    for k in range(model.n_layers - 2, -1, -1):
        back = deltas[k + 1] @ model.weights[k + 1]
        deltas[k] = back * (pres[k] > 0.0)
    return deltas


def predict(model: MlpModel, inputs) -> np.ndarray:
    X, _ = _as_inputs(model, inputs)
    return _forward(model, X)[1][-1][:, 0]


def per_sample_losses(model: MlpModel, inputs, targets) -> np.ndarray:
    X, t = _as_inputs(model, inputs, targets)
    return (predict(model, X) - t) ** 2


def batch_loss(model: MlpModel, inputs, targets) -> float:
    return float(np.mean(per_sample_losses(model, inputs, targets)))


def forward_batch(model: MlpModel, inputs, targets, row_ids=None) -> PerSampleGradients:
    """Predictions, squared-error losses and penultimate-layer gradients per sample."""
    X, t = _as_inputs(model, inputs, targets)
    pres, acts = _forward(model, X)
    deltas = _deltas(model, pres, acts, t)
    k = model.penultimate
    d, a = deltas[k], acts[k]
    gw = (d[:, :, None] * a[:, None, :]).reshape(len(X), -1)
    pred = acts[-1][:, 0]
    ids = np.arange(len(X)) if row_ids is None else np.asarray(row_ids)
    if len(ids) != len(X):
        raise ValueError("row_ids length does not match inputs")
    return PerSampleGradients(ids, np.hstack([gw, d]), (pred - t) ** 2, pred)


def per_sample_gradients(model: MlpModel, inputs, targets) -> Gradients:
    """Full-parameter gradients with a leading sample axis on every array."""
    X, t = _as_inputs(model, inputs, targets)
    pres, acts = _forward(model, X)
    deltas = _deltas(model, pres, acts, t)
    gw = [d[:, :, None] * a[:, None, :] for d, a in zip(deltas, acts[:-1])]
    return Gradients(gw, [d.copy() for d in deltas])


def mean_gradient(model: MlpModel, inputs, targets, weights=None) -> Gradients:
    """``sum_i w_i * grad_i / n`` over the batch; ``weights=None`` is a plain mean."""
    X, t = _as_inputs(model, inputs, targets)
    n = len(X)
    if n == 0:
        raise ValueError("empty batch")
    pres, acts = _forward(model, X)
    deltas = _deltas(model, pres, acts, t)
    if weights is not None:
        w = np.asarray(weights, dtype=float).reshape(-1, 1)
        if w.shape[0] != n:
            raise ValueError("one weight per sample required")
        deltas = [d * w for d in deltas]
    gw = [(d.T @ a) / n for d, a in zip(deltas, acts[:-1])]
    gb = [d.sum(axis=0) / n for d in deltas]
    return Gradients(gw, gb)


def sgd_step(model: MlpModel, gradients: Gradients, learning_rate: float) -> MlpModel:
    """Return a new model with ``param -= learning_rate * grad``."""
    if learning_rate < 0:
        raise ValueError("learning rate must be non-negative")
    if len(gradients.weights) != model.n_layers or len(gradients.biases) != model.n_layers:
        raise ValueError("gradient layer count does not match model")
    out = model.copy()
    for k in range(model.n_layers):
        gw, gb = np.asarray(gradients.weights[k]), np.asarray(gradients.biases[k])
        if gw.shape != model.weights[k].shape or gb.shape != model.biases[k].shape:
            raise ValueError(f"gradient shape mismatch at layer {k}")
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise ValueError(f"non-finite gradient at layer {k}")
        out.weights[k] = model.weights[k] - learning_rate * gw
        out.biases[k] = model.biases[k] - learning_rate * gb
    return out


def minibatches(n: int, batch_size: int | None, rng: np.random.Generator):
    """Shuffled index blocks covering ``range(n)``; ``batch_size=None`` gives one block."""
    order = rng.permutation(n)
    if batch_size is None or batch_size >= n:
        return [order]
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]
