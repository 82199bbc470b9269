"""Class-weighted MLP classifier with hand-derived backpropagation.

Architecture: fully connected, relu hidden layers with inverted dropout,
sigmoid output. Trained with minibatch Adam on the weighted binary
cross-entropy; early stopping restores the best-validation-epoch snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import DataError, ParameterError, ShapeError, TrainingError
from .numeric import AdamState, activation, adam_step, anchored_mean, dropout_mask
from .rng import SeededRng

LOG_CLAMP = 1e-12
PROB_CLAMP = 1e-15


@dataclass(frozen=True)
class MlpModel:
    """Trained parameters: weights[i] maps layer i activations to layer i+1."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    dropout_rate: float = 0.5

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_hidden_layers(self) -> int:
        return len(self.weights) - 1


@dataclass(frozen=True)
class TrainConfig:
    """MLP architecture and optimization settings.

    patience=None disables early stopping and runs exactly max_epochs.
    """

    hidden: tuple[int, ...] = (100, 100)
    dropout_rate: float = 0.5
    lr: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 100
    patience: int | None = 2
    class_weighting: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError(f"batch size must be at least 1, got {self.batch_size}")
        if self.patience is not None and self.patience < 1:
            raise ParameterError(f"patience must be at least 1, got {self.patience}")
        if self.max_epochs < 1:
            raise ParameterError(f"max_epochs must be at least 1, got {self.max_epochs}")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ParameterError(f"hidden sizes must be positive, got {self.hidden}")

    @classmethod
    def toy(cls, class_weighting: bool = False) -> "TrainConfig":
        """Small-problem preset: one hidden layer of 5, batch 8, 20 fixed epochs."""
        return cls(hidden=(5,), batch_size=8, max_epochs=20, patience=None,
                   class_weighting=class_weighting)


def positive_weight(labels: np.ndarray) -> float:
    """w+ = (negative count)/(positive count); 1.0 when a batch has no positives.

    With no positives the weighted term vanishes from the loss, so the
    fallback value never influences it; it only avoids a division by zero.
    """
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        return 1.0
    return (labels.size - n_pos) / n_pos


def weighted_bce_loss(probs: np.ndarray, labels: np.ndarray,
                      weighting: bool) -> float:
    """Mean of -[w+ . y . log p + (1-y) . log(1-p)] over the batch."""
    probs = np.clip(np.asarray(probs, dtype=np.float64).ravel(),
                    LOG_CLAMP, 1.0 - LOG_CLAMP)
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if probs.shape != labels.shape:
        raise ShapeError(f"{probs.shape[0]} probabilities for {labels.shape[0]} labels")
    w = positive_weight(labels) if weighting else 1.0
    terms = w * labels * np.log(probs) + (1.0 - labels) * np.log(1.0 - probs)
    return float(-terms.mean())


def _forward(model: MlpModel, X: np.ndarray,
             masks: list[np.ndarray] | None) -> tuple[np.ndarray, list, list]:
    """Forward pass; returns (output column, layer inputs, hidden pre-activations)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise ShapeError(
            f"model expects (N, {model.n_inputs}) inputs, got {X.shape}")
    inputs = [X]
    pre_acts = []
    h = X
    for i in range(model.n_hidden_layers):
        z = h @ model.weights[i] + model.biases[i]
        pre_acts.append(z)
        h, _ = activation("relu", z)
        if masks is not None:
            h = h * masks[i]
        inputs.append(h)
    z_out = h @ model.weights[-1] + model.biases[-1]
    y_hat, _ = activation("sigmoid", z_out)
    return y_hat, inputs, pre_acts


def _make_masks(model: MlpModel, n_rows: int, rng: SeededRng) -> list[np.ndarray]:
    return [dropout_mask(rng.split(f"layer{i}"), (n_rows, w.shape[1]),
                         model.dropout_rate)
            for i, w in enumerate(model.weights[:-1])]


def predict_mlp(model: MlpModel, X: np.ndarray, dropout_active: bool = False,
                rng: SeededRng | None = None) -> np.ndarray:
    """Predicted positive-class probabilities, one per row of X.

    With dropout_active, fresh masks are sampled from rng on every call.
    Outputs are clamped into the open interval (0,1).
    """
    masks = None
    if dropout_active:
        if rng is None:
            raise ParameterError("dropout_active prediction needs an rng")
        masks = _make_masks(model, np.asarray(X).shape[0], rng)
    y_hat, _, _ = _forward(model, X, masks)
    return np.clip(y_hat.ravel(), PROB_CLAMP, 1.0 - PROB_CLAMP)


def mlp_loss(model: MlpModel, X: np.ndarray, labels: np.ndarray,
             weighting: bool, masks: list[np.ndarray] | None = None) -> float:
    """Weighted BCE of the forward pass; masks may be frozen for gradient checks."""
    y_hat, _, _ = _forward(model, X, masks)
    return weighted_bce_loss(y_hat.ravel(), labels, weighting)


def mlp_loss_and_grads(model: MlpModel, X: np.ndarray, labels: np.ndarray,
                       weighting: bool, masks: list[np.ndarray] | None = None
                       ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss plus analytic gradients for every weight matrix and bias vector.

    Derivation: with p = sigmoid(z) and per-example weight w on positives,
    dL/dz = ((1-y)*p - w*y*(1-p)) / N, then standard backprop through the
    relu layers, with each dropout mask multiplying its layer's gradient.
    """
    y_hat, inputs, pre_acts = _forward(model, X, masks)
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    n = y.shape[0]
    w = positive_weight(labels) if weighting else 1.0
    loss = weighted_bce_loss(y_hat.ravel(), labels, weighting)

    delta = ((1.0 - y) * y_hat - w * y * (1.0 - y_hat)) / n
    grads_w: list[np.ndarray] = [None] * len(model.weights)
    grads_b: list[np.ndarray] = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = inputs[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            dh = delta @ model.weights[i].T
            if masks is not None:
                dh = dh * masks[i - 1]
            _, relu_grad = activation("relu", pre_acts[i - 1])
            delta = dh * relu_grad
    return loss, grads_w, grads_b


def flatten_params(model: MlpModel) -> np.ndarray:
    """All parameters as one vector, weights-then-bias per layer."""
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def with_params(model: MlpModel, flat: np.ndarray) -> MlpModel:
    """Rebuild a model of the same shape from a flat parameter vector."""
    flat = np.asarray(flat, dtype=np.float64)
    weights, biases = [], []
    pos = 0
    for w, b in zip(model.weights, model.biases):
        weights.append(flat[pos:pos + w.size].reshape(w.shape).copy())
        pos += w.size
        biases.append(flat[pos:pos + b.size].reshape(b.shape).copy())
        pos += b.size
    if pos != flat.size:
        raise ShapeError(f"parameter vector has {flat.size} entries, model needs {pos}")
    return replace(model, weights=tuple(weights), biases=tuple(biases))


def init_mlp(n_features: int, cfg: TrainConfig, rng: SeededRng) -> MlpModel:
    """Uniform init with bound 1/sqrt(fan_in) for each layer's weights and bias."""
    sizes = (n_features,) + cfg.hidden + (1,)
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        bound = 1.0 / np.sqrt(sizes[i])
        layer_rng = rng.split(f"layer{i}")
        weights.append(layer_rng.split("w").uniform(-bound, bound, (sizes[i], sizes[i + 1])))
        biases.append(layer_rng.split("b").uniform(-bound, bound, (sizes[i + 1],)))
    return MlpModel(weights=tuple(weights), biases=tuple(biases),
                    dropout_rate=cfg.dropout_rate)


def train_mlp(train: Dataset, val: Dataset, cfg: TrainConfig,
              rng: SeededRng) -> MlpModel:
    """Minibatch Adam on the weighted BCE with dropout; returns best-val snapshot.

    The epoch shuffle, dropout masks, and init each draw from their own child
    stream of rng, so two runs with the same seed are bitwise identical.
    """
    if train.n < 1:
        raise DataError("training set is empty")
    if val.n < 1:
        raise DataError("validation set is empty")
    if val.d != train.d:
        raise ShapeError(f"train has {train.d} features, val has {val.d}")

    model = init_mlp(train.d, cfg, rng.split("init"))
    states = [AdamState.for_params(p, lr=cfg.lr)
              for p in (*model.weights, *model.biases)]
    shuffle_rng = rng.split("shuffle")
    dropout_rng = rng.split("dropout")

    best: MlpModel | None = None
    best_loss = np.inf
    epochs_since_improve = 0
    for epoch in range(cfg.max_epochs):
        order = shuffle_rng.split(str(epoch)).permutation(train.n)
        for b, start in enumerate(range(0, train.n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            X, y = train.features[idx], train.labels[idx]
            masks = _make_masks(model, len(idx), dropout_rng.split(f"{epoch}.{b}"))
            loss, gw, gb = mlp_loss_and_grads(model, X, y, cfg.class_weighting, masks)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            new_params = []
            for p, g, s in zip((*model.weights, *model.biases), (*gw, *gb), states):
                p_new, _ = adam_step(p, g, s)
                new_params.append(p_new)
            k = len(model.weights)
            model = replace(model, weights=tuple(new_params[:k]),
                            biases=tuple(new_params[k:]))
        if cfg.patience is None:
            continue
        val_loss = mlp_loss(model, val.features, val.labels, cfg.class_weighting)
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        if val_loss < best_loss:
            best_loss = val_loss
            best = model
            epochs_since_improve = 0
        else:
            epochs_since_improve += 1
            if epochs_since_improve >= cfg.patience:
                break
    return best if best is not None else model


def mc_dropout_predict(model: MlpModel, X: np.ndarray, T: int = 100,
                       rng: SeededRng | None = None) -> np.ndarray:
    """Mean over T stochastic dropout forward passes."""
    if T < 1:
        raise ParameterError(f"need at least one forward pass, got T={T}")
    if rng is None:
        raise ParameterError("mc_dropout_predict needs an rng")
    passes = np.stack([predict_mlp(model, X, dropout_active=True,
                                   rng=rng.split(f"pass{t}"))
                       for t in range(T)])
    return anchored_mean(passes, axis=0)
