"""Single-hidden-layer sigmoid regression network.

The model is ``f(x) = b0 + sum_k b_k * sigmoid(a0_k + a_k . x)`` with one
hidden layer of logistic units and a linear readout.  Fitting runs mini-batch
Adam on squared error, optionally with an l1 penalty, and stops early on a
validation set; the parameters returned are the checkpoint from the epoch
with the best validation loss.  Everything is deterministic given the
config seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset


class DimensionError(ValueError):
    """Shape disagreement between parameters and data."""


class TrainingDivergedError(FloatingPointError):
    """Non-finite training loss; reports where the blow-up happened."""

    def __init__(self, epoch: int, batch: int) -> None:
        super().__init__(f"non-finite training loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class NetworkParams:
    """Weights of one sigmoid hidden layer plus a linear readout.

    ``weights_hidden`` is (hidden_units, input_dim); row k holds the input
    weights of hidden unit k and ``bias_hidden[k]`` its bias.  The readout is
    ``bias_out + weights_out . hidden``.
    """

    bias_out: float
    weights_out: np.ndarray
    bias_hidden: np.ndarray
    weights_hidden: np.ndarray

    def __post_init__(self) -> None:
        weights_hidden = np.asarray(self.weights_hidden, dtype=np.float64)
        weights_out = np.asarray(self.weights_out, dtype=np.float64)
        bias_hidden = np.asarray(self.bias_hidden, dtype=np.float64)
        bias_out = float(self.bias_out)
        if weights_hidden.ndim != 2:
            raise DimensionError("weights_hidden must be (hidden_units, input_dim)")
        units, dim = weights_hidden.shape
        if units < 1 or dim < 1:
            raise DimensionError("need at least one hidden unit and one input")
        if weights_out.shape != (units,):
            raise DimensionError(
                f"weights_out shape {weights_out.shape} != ({units},)"
            )
        if bias_hidden.shape != (units,):
            raise DimensionError(
                f"bias_hidden shape {bias_hidden.shape} != ({units},)"
            )
        pieces = (weights_hidden, weights_out, bias_hidden)
        if not all(np.isfinite(p).all() for p in pieces) or not np.isfinite(bias_out):
            raise ValueError("non-finite network parameter")
        object.__setattr__(self, "bias_out", bias_out)
        object.__setattr__(self, "weights_out", weights_out)
        object.__setattr__(self, "bias_hidden", bias_hidden)
        object.__setattr__(self, "weights_hidden", weights_hidden)

    @property
    def hidden_units(self) -> int:
        return self.weights_hidden.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights_hidden.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the Adam fit."""

    hidden_units: int = 25
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 150
    early_stop_min_delta: float = 1e-5
    early_stop_patience: int = 5
    l1_weight: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.adam_epsilon <= 0:
            raise ValueError("adam_epsilon must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.early_stop_min_delta < 0:
            raise ValueError("early_stop_min_delta must be >= 0")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be >= 0")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one training run.

    Loss histories have one entry per epoch actually run.  The train history
    records the optimized objective (MSE plus any l1 term); the validation
    history records plain MSE, which drives early stopping and checkpointing.
    """

    params: NetworkParams
    train_loss_history: np.ndarray
    val_loss_history: np.ndarray
    epochs_run: int
    stopped_early: bool


def predict(params: NetworkParams, features: np.ndarray) -> np.ndarray:
    """Network output for each row of ``features``."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.input_dim:
        raise DimensionError(
            f"features shape {features.shape} incompatible with input_dim {params.input_dim}"
        )
    hidden = expit(features @ params.weights_hidden.T + params.bias_hidden)
    return hidden @ params.weights_out + params.bias_out


def forward(params: NetworkParams, x: np.ndarray) -> float:
    """Network output at a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise DimensionError(f"x shape {x.shape} != ({params.input_dim},)")
    return float(predict(params, x[np.newaxis, :])[0])


def input_gradients(params: NetworkParams, features: np.ndarray) -> np.ndarray:
    """Gradient of the network output in its inputs, one row per input row.

    With s_k = sigmoid(a0_k + a_k . x) the j-th component is
    sum_k b_k * s_k * (1 - s_k) * a_kj.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.input_dim:
        raise DimensionError(
            f"features shape {features.shape} incompatible with input_dim {params.input_dim}"
        )
    hidden = expit(features @ params.weights_hidden.T + params.bias_hidden)
    return (hidden * (1.0 - hidden) * params.weights_out) @ params.weights_hidden


def input_gradient(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Gradient of the network output at a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise DimensionError(f"x shape {x.shape} != ({params.input_dim},)")
    return input_gradients(params, x[np.newaxis, :])[0]


def predict_mse(params: NetworkParams, data: Dataset) -> float:
    """Mean squared prediction error on a dataset."""
    residual = predict(params, data.features) - data.targets
    return float(np.mean(residual * residual))


def glorot_truncated_normal(
    rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int
) -> np.ndarray:
    """Glorot normal draw truncated at two standard deviations.

    Standard deviation is sqrt(2 / (fan_in + fan_out)); values beyond two
    standard deviations are redrawn until they land inside.
    """
    std = np.sqrt(2.0 / (fan_in + fan_out))
    out = rng.normal(0.0, std, size=shape)
    outside = np.abs(out) > 2.0 * std
    while outside.any():
        out[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(out) > 2.0 * std
    return out


def random_params(
    rng: np.random.Generator, hidden_units: int, input_dim: int
) -> NetworkParams:
    """Glorot truncated-normal network; the same init used by :func:`train`."""
    theta = _init_flat(rng, hidden_units, input_dim)
    return _unpack(theta, hidden_units, input_dim)


def _views(theta: np.ndarray, units: int, dim: int):
    """Parameter block views into the flat vector; writes propagate."""
    w_hid = theta[: units * dim].reshape(units, dim)
    b_hid = theta[units * dim : units * dim + units]
    w_out = theta[units * dim + units : units * dim + 2 * units]
    return w_hid, b_hid, w_out


def _init_flat(rng: np.random.Generator, units: int, dim: int) -> np.ndarray:
    theta = np.empty(units * dim + 2 * units + 1, dtype=np.float64)
    w_hid, b_hid, w_out = _views(theta, units, dim)
    w_hid[:] = glorot_truncated_normal(rng, (units, dim), dim, units)
    b_hid[:] = glorot_truncated_normal(rng, (units,), dim, units)
    w_out[:] = glorot_truncated_normal(rng, (units,), units, 1)
    theta[-1] = glorot_truncated_normal(rng, (1,), units, 1)[0]
    return theta


def _unpack(theta: np.ndarray, units: int, dim: int) -> NetworkParams:
    w_hid, b_hid, w_out = _views(theta, units, dim)
    return NetworkParams(
        bias_out=float(theta[-1]),
        weights_out=w_out.copy(),
        bias_hidden=b_hid.copy(),
        weights_hidden=w_hid.copy(),
    )


def _flat_mse(theta: np.ndarray, units: int, dim: int, X: np.ndarray, y: np.ndarray) -> float:
    w_hid, b_hid, w_out = _views(theta, units, dim)
    hidden = expit(X @ w_hid.T + b_hid)
    residual = hidden @ w_out + theta[-1] - y
    return float(np.mean(residual * residual))


def train(train_data: Dataset, val_data: Dataset, config: TrainConfig) -> FitResult:
    """Fit the network with mini-batch Adam and validation early stopping.

    Each epoch reshuffles the training rows with the seeded generator.  An
    epoch improves when its validation MSE beats the best seen so far by more
    than ``early_stop_min_delta``; after ``early_stop_patience`` consecutive
    epochs without improvement training stops.  The returned parameters come
    from the epoch with the lowest validation MSE.
    """
    if train_data.n_features != val_data.n_features:
        raise DimensionError(
            f"train has {train_data.n_features} features, val has {val_data.n_features}"
        )
    if config.batch_size > train_data.n_rows:
        raise ValueError(
            f"batch_size {config.batch_size} exceeds {train_data.n_rows} training rows"
        )
    n, dim = train_data.features.shape
    units = config.hidden_units
    X, y = train_data.features, train_data.targets
    X_val, y_val = val_data.features, val_data.targets

    rng = np.random.default_rng(config.seed)
    theta = _init_flat(rng, units, dim)
    w_hid, b_hid, w_out = _views(theta, units, dim)
    grad = np.zeros_like(theta)
    g_w_hid, g_b_hid, g_w_out = _views(grad, units, dim)
    moment1 = np.zeros_like(theta)
    moment2 = np.zeros_like(theta)
    beta1, beta2 = config.beta1, config.beta2
    lr, eps, l1 = config.learning_rate, config.adam_epsilon, config.l1_weight
    step = 0

    best_val = np.inf  # strict best, owns the checkpoint
    best_theta = theta.copy()
    margin_best = np.inf  # best in the min-delta sense, owns the patience counter
    bad_epochs = 0
    stopped_early = False
    train_history: list[float] = []
    val_history: list[float] = []

    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        for batch, start in enumerate(range(0, n, config.batch_size)):
            rows = order[start : start + config.batch_size]
            xb = X[rows]
            yb = y[rows]
            zb = xb @ w_hid.T
            zb += b_hid
            hb = expit(zb)
            residual = hb @ w_out + theta[-1] - yb
            loss = residual @ residual / rows.shape[0]
            if l1 > 0.0:
                loss += l1 * np.abs(theta).sum()
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch=epoch, batch=batch)
            coef = residual * (2.0 / rows.shape[0])
            g_w_out[:] = coef @ hb
            grad[-1] = coef.sum()
            delta = (coef[:, np.newaxis] * w_out) * (hb * (1.0 - hb))
            g_w_hid[:] = delta.T @ xb
            g_b_hid[:] = delta.sum(axis=0)
            if l1 > 0.0:
                grad += l1 * np.sign(theta)
            step += 1
            moment1 *= beta1
            moment1 += (1.0 - beta1) * grad
            moment2 *= beta2
            moment2 += (1.0 - beta2) * (grad * grad)
            corrected1 = moment1 / (1.0 - beta1**step)
            corrected2 = moment2 / (1.0 - beta2**step)
            theta -= lr * corrected1 / (np.sqrt(corrected2) + eps)

        train_loss = _flat_mse(theta, units, dim, X, y)
        if l1 > 0.0:
            train_loss += l1 * float(np.abs(theta).sum())
        val_loss = _flat_mse(theta, units, dim, X_val, y_val)
        train_history.append(train_loss)
        val_history.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_theta[:] = theta
        if val_loss < margin_best - config.early_stop_min_delta:
            margin_best = val_loss
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.early_stop_patience:
                stopped_early = True
                break

    return FitResult(
        params=_unpack(best_theta, units, dim),
        train_loss_history=np.asarray(train_history),
        val_loss_history=np.asarray(val_history),
        epochs_run=len(val_history),
        stopped_early=stopped_early,
    )
