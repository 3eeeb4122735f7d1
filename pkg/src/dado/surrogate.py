"""From-scratch MLP regressor used as the trainable surrogate.

Architecture: fully connected, leaky-ReLU activations and inverted dropout on
each hidden layer, linear outputs (one per objective). Training is mini-batch
Adam on the joint MSE over all normalized objectives, retrained from scratch
every iteration, with strict-decrease early stopping on the full-training-set
epoch loss and reload of the best epoch's weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datapool import FeatureNormalizer, TargetNormalizer, params_matrix
from .errors import DimensionMismatch, NumericalDivergence

TRAIN = "train"
EVAL = "eval"


@dataclass(frozen=True)
class MlpConfig:
    """Network shape. Dims left as None are resolved from the pool at run time."""

    input_dim: int | None = None
    output_dim: int | None = None
    hidden: tuple[int, ...] = (200, 100)
    leaky_slope: float = 0.01
    dropout_rate: float = 0.1

    def __post_init__(self):
        for name, dim in (("input_dim", self.input_dim), ("output_dim", self.output_dim)):
            if dim is not None and dim < 1:
                raise ValueError(f"{name} must be positive")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("hidden layer sizes must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    def resolved(self, input_dim: int, output_dim: int) -> "MlpConfig":
        """Fill in unset dims; set dims must already match the given ones."""
        got_in = self.input_dim if self.input_dim is not None else input_dim
        got_out = self.output_dim if self.output_dim is not None else output_dim
        if got_in != input_dim or got_out != output_dim:
            raise DimensionMismatch(
                f"model is {got_in}->{got_out} but data needs {input_dim}->{output_dim}"
            )
        return MlpConfig(got_in, got_out, self.hidden, self.leaky_slope, self.dropout_rate)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-4
    batch_size: int = 4
    patience: int = 10
    max_epochs: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience, and max_epochs must be >= 1")


@dataclass
class TrainLog:
    """Per-epoch full-set losses plus where the minimum sat and where we stopped."""

    losses: list[float]
    best_epoch: int
    stopped_epoch: int


class EarlyStopping:
    """Stops after `patience` epochs without a strict decrease of the epoch loss."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = float("inf")
        self.best_epoch = -1

    def update(self, epoch: int, loss: float) -> bool:
        """Record one epoch loss; returns True when training should stop now."""
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            return False
        return epoch - self.best_epoch >= self.patience


@dataclass
class SurrogateModel:
    """Weights and biases per layer, shape (fan_out, fan_in), plus a train/eval flag."""

    config: MlpConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    mode: str = EVAL

    def copy(self) -> "SurrogateModel":
        return SurrogateModel(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.mode,
        )

    def parameter_count(self) -> int:
        return int(sum(w.size for w in self.weights) + sum(b.size for b in self.biases))


def init_model(config: MlpConfig, seed: int) -> SurrogateModel:
    """Fan-in-scaled uniform weight init, zero biases, deterministic under seed."""
    if config.input_dim is None or config.output_dim is None:
        raise ValueError("init_model needs a config with resolved input/output dims")
    rng = np.random.default_rng(seed)
    dims = (config.input_dim, *config.hidden, config.output_dim)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return SurrogateModel(config, weights, biases)


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0.0, z, slope * z)


def _forward(model: SurrogateModel, x: np.ndarray, train_mode: bool, rng):
    """Batch forward pass; returns (output, cache) with per-layer backprop state."""
    cfg = model.config
    p = cfg.dropout_rate
    h = x
    cache = []
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = h @ w.T + b
        a = _leaky(z, cfg.leaky_slope)
        mask = None
        if train_mode and p > 0.0:
            mask = (rng.random(a.shape) >= p) / (1.0 - p)
            a = a * mask
        cache.append((h, z, mask))
        h = a
    cache.append((h, None, None))
    y = h @ model.weights[-1].T + model.biases[-1]
    return y, cache


def _loss_and_grads(model, x, targets, train_mode, rng, gw, gb) -> float:
    """MSE loss over the batch plus gradients written into gw/gb in place."""
    y, cache = _forward(model, x, train_mode, rng)
    diff = y - targets
    loss = float(np.mean(diff * diff))
    g = (2.0 / diff.size) * diff
    h_last = cache[-1][0]
    np.matmul(g.T, h_last, out=gw[-1])
    np.sum(g, axis=0, out=gb[-1])
    g = g @ model.weights[-1]
    slope = model.config.leaky_slope
    for layer in range(len(model.weights) - 2, -1, -1):
        h_in, z, mask = cache[layer]
        if mask is not None:
            g = g * mask
        g = g * np.where(z > 0.0, 1.0, slope)
        np.matmul(g.T, h_in, out=gw[layer])
        np.sum(g, axis=0, out=gb[layer])
        if layer > 0:
            g = g @ model.weights[layer]
    return loss


def forward(model: SurrogateModel, x, rng=None) -> np.ndarray:
    """Single-candidate forward pass in the model's current mode.

    Train mode applies inverted dropout and therefore needs an rng; eval mode
    is a pure affine/activation chain.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.config.input_dim:
        raise DimensionMismatch(
            f"input of shape {x.shape} does not match input_dim {model.config.input_dim}"
        )
    train_mode = model.mode == TRAIN
    if train_mode and rng is None:
        raise ValueError("train-mode forward needs an rng for dropout masks")
    y, _ = _forward(model, x[None, :], train_mode, rng)
    return y[0]


def train(model: SurrogateModel, inputs, targets, cfg: TrainConfig, rng):
    """Train a copy of the model; returns (trained model, TrainLog).

    Shuffled mini-batches (last partial batch kept), Adam updates, epoch loss
    evaluated on the whole training set in eval mode. Stops once the loss has
    not strictly decreased for `patience` epochs or at max_epochs, and reloads
    the best epoch's weights.
    """
    x = np.asarray(inputs, dtype=float)
    t = np.asarray(targets, dtype=float)
    if x.ndim != 2 or t.ndim != 2 or x.shape[0] != t.shape[0]:
        raise DimensionMismatch("inputs and targets must be 2-D with matching row counts")
    if x.shape[0] == 0:
        raise DimensionMismatch("training set is empty")
    if x.shape[1] != model.config.input_dim or t.shape[1] != model.config.output_dim:
        raise DimensionMismatch(
            f"data is {x.shape[1]}->{t.shape[1]} but model is "
            f"{model.config.input_dim}->{model.config.output_dim}"
        )

    work = model.copy()
    # Pack all parameters into one flat vector (layer views) so the Adam update
    # is a handful of whole-vector operations.
    arrays: list[np.ndarray] = []
    for w, b in zip(work.weights, work.biases):
        arrays.extend((w, b))
    sizes = [a.size for a in arrays]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    theta = np.concatenate([a.ravel() for a in arrays])
    grad = np.zeros_like(theta)

    def views(flat):
        return [
            flat[offsets[i] : offsets[i + 1]].reshape(arrays[i].shape)
            for i in range(len(arrays))
        ]

    tviews, gviews = views(theta), views(grad)
    work.weights = tviews[0::2]
    work.biases = tviews[1::2]
    gw, gb = gviews[0::2], gviews[1::2]

    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    scratch = np.empty_like(theta)
    step = 0
    n = x.shape[0]
    stopper = EarlyStopping(cfg.patience)
    losses: list[float] = []
    best_theta = theta.copy()
    stopped_epoch = cfg.max_epochs - 1
    work.mode = TRAIN
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _loss_and_grads(work, x[idx], t[idx], True, rng, gw, gb)
            step += 1
            # Adam, allocation-free: m and v are exponential moving averages of
            # the gradient and its square, with bias correction folded into the
            # scalar step size.
            m *= cfg.beta1
            np.multiply(grad, 1.0 - cfg.beta1, out=scratch)
            m += scratch
            v *= cfg.beta2
            np.multiply(grad, grad, out=scratch)
            scratch *= 1.0 - cfg.beta2
            v += scratch
            np.multiply(v, 1.0 / (1.0 - cfg.beta2**step), out=scratch)
            np.sqrt(scratch, out=scratch)
            scratch += cfg.adam_eps
            np.divide(m, scratch, out=scratch)
            scratch *= cfg.learning_rate / (1.0 - cfg.beta1**step)
            theta -= scratch
        pred, _ = _forward(work, x, False, None)
        epoch_loss = float(np.mean((pred - t) ** 2))
        if not np.isfinite(epoch_loss):
            raise NumericalDivergence(f"non-finite training loss at epoch {epoch}")
        losses.append(epoch_loss)
        if epoch_loss < stopper.best_loss:
            best_theta[:] = theta
        if stopper.update(epoch, epoch_loss):
            stopped_epoch = epoch
            break

    theta[:] = best_theta
    if not np.isfinite(theta).all():
        raise NumericalDivergence("non-finite weights after training")
    work.mode = EVAL
    return work, TrainLog(losses, stopper.best_epoch, stopped_epoch)


def predict_batch(
    model: SurrogateModel,
    candidates,
    fnorm: FeatureNormalizer,
    tnorm: TargetNormalizer,
    space: str = "normalized",
) -> np.ndarray:
    """Predict objectives for candidates, order preserving.

    `space="normalized"` returns raw network outputs (the scaled target
    space); `space="raw"` applies the inverse target normalization.
    """
    if space not in ("normalized", "raw"):
        raise ValueError(f"unknown prediction space {space!r}")
    if model.mode != EVAL:
        raise ValueError("predict_batch requires a model in eval mode")
    if len(candidates) == 0:
        return np.zeros((0, model.config.output_dim))
    x = fnorm.transform(params_matrix(candidates))
    if x.shape[1] != model.config.input_dim:
        raise DimensionMismatch(
            f"candidates have {x.shape[1]} parameters, model expects {model.config.input_dim}"
        )
    y, _ = _forward(model, x, False, None)
    return tnorm.inverse(y) if space == "raw" else y


def _sample_loss(model: SurrogateModel, x: np.ndarray, y: np.ndarray) -> float:
    pred, _ = _forward(model, x[None, :], False, None)
    diff = pred[0] - y
    return float(np.mean(diff * diff))


def loss_gradients(model: SurrogateModel, x, y):
    """Analytic MSE gradients for one sample with dropout disabled.

    Returns (loss, weight gradients, bias gradients).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gw = [np.empty_like(w) for w in model.weights]
    gb = [np.empty_like(b) for b in model.biases]
    loss = _loss_and_grads(model, x[None, :], y[None, :], False, None, gw, gb)
    return loss, gw, gb


def finite_difference_gradients(model: SurrogateModel, x, y, eps: float):
    """Central-difference MSE gradients for one sample, every parameter."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    work = model.copy()
    work.mode = EVAL
    gw = [np.empty_like(w) for w in work.weights]
    gb = [np.empty_like(b) for b in work.biases]
    for grads, params in ((gw, work.weights), (gb, work.biases)):
        for g, p in zip(grads, params):
            flat_p = p.reshape(-1)
            flat_g = g.reshape(-1)
            for i in range(flat_p.size):
                orig = flat_p[i]
                flat_p[i] = orig + eps
                hi = _sample_loss(work, x, y)
                flat_p[i] = orig - eps
                lo = _sample_loss(work, x, y)
                flat_p[i] = orig
                flat_g[i] = (hi - lo) / (2.0 * eps)
    return gw, gb


def max_relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """Worst relative disagreement between two gradient sets, floored denominator."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def grad_check(model: SurrogateModel, sample, eps: float = 1e-5) -> float:
    """Compare analytic backprop against central finite differences.

    Returns the max relative error over every weight and bias; dropout is
    disabled on both paths.
    """
    x, y = sample
    _, gw, gb = loss_gradients(model, x, y)
    nw, nb = finite_difference_gradients(model, x, y, eps)
    return max(max_relative_error(gw, nw), max_relative_error(gb, nb))


def save_weights(model: SurrogateModel, path) -> None:
    """Debug snapshot of the full parameter state as JSON."""
    payload = {
        "input_dim": model.config.input_dim,
        "output_dim": model.config.output_dim,
        "hidden": list(model.config.hidden),
        "leaky_slope": model.config.leaky_slope,
        "dropout_rate": model.config.dropout_rate,
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_weights(path) -> SurrogateModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    config = MlpConfig(
        payload["input_dim"],
        payload["output_dim"],
        tuple(payload["hidden"]),
        payload["leaky_slope"],
        payload["dropout_rate"],
    )
    weights = [np.asarray(layer["weights"], dtype=float) for layer in payload["layers"]]
    biases = [np.asarray(layer["bias"], dtype=float) for layer in payload["layers"]]
    return SurrogateModel(config, weights, biases)
