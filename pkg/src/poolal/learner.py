"""Desk-scale classifiers behind the training contract the learning loop uses.

Two native learners share one parameter/gradient layer: a softmax-linear
model and a one-hidden-layer tanh MLP, both trained with mini-batch SGD on
mean cross-entropy and patience-based early stopping. The analytic
gradients are verifiable against central finite differences via
:func:`gradient_check`.

All math is float64; training is single-threaded and bit-reproducible for
a fixed :class:`~poolal.core.RandomSource`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import RandomSource, Sample, TrainingSet
from .errors import ConfigurationError, TrainingError

__all__ = [
    "LearnerConfig",
    "EpochStats",
    "TrainedModel",
    "train",
    "predict_proba",
    "predict",
    "predict_batch",
    "gradient_check",
    "loss_and_gradient",
    "samples_to_arrays",
]

KINDS = ("softmax_linear", "mlp")


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters for the native learners.

    ``learning_rate`` may be 0 (frozen parameters), which is occasionally
    useful to probe the early-stopping rule; negative rates are rejected.
    """

    kind: str = "softmax_linear"
    learning_rate: float = 1.5e-4
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 5
    hidden_units: int = 32
    init_scale: float = 0.01
    warm_start: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigurationError(f"patience must be >= 1, got {self.patience}")
        if self.hidden_units < 1:
            raise ConfigurationError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if self.init_scale < 0:
            raise ConfigurationError(f"init_scale must be >= 0, got {self.init_scale}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "hidden_units": self.hidden_units,
            "init_scale": self.init_scale,
            "warm_start": self.warm_start,
        }


@dataclass(frozen=True)
class EpochStats:
    train_loss: float
    val_loss: float


@dataclass
class TrainedModel:
    """Parameters plus the training trace that produced them.

    ``params`` holds the best-validation-loss epoch's parameters, not the
    last epoch's. Immutable by convention after ``train`` returns.
    """

    kind: str
    feature_dim: int
    num_classes: int
    params: dict[str, np.ndarray]
    training_log: list[EpochStats] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0


def samples_to_arrays(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack a sample collection into (features matrix, label vector)."""
    if not samples:
        raise ConfigurationError("cannot build arrays from an empty sample collection")
    X = np.stack([s.features for s in samples]).astype(float)
    y = np.array([s.label for s in samples], dtype=np.int64)
    return X, y


def _init_params(config: LearnerConfig, feature_dim: int, num_classes: int, gen: np.random.Generator) -> dict[str, np.ndarray]:
    """Zero-mean uniform weights in [-init_scale, init_scale], zero biases."""
    s = config.init_scale

    def w(shape: tuple[int, ...]) -> np.ndarray:
        return gen.uniform(-s, s, size=shape)

    if config.kind == "softmax_linear":
        return {"W": w((feature_dim, num_classes)), "b": np.zeros(num_classes)}
    return {
        "W1": w((feature_dim, config.hidden_units)),
        "b1": np.zeros(config.hidden_units),
        "W2": w((config.hidden_units, num_classes)),
        "b2": np.zeros(num_classes),
    }


def _logits(kind: str, params: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    if kind == "softmax_linear":
        return X @ params["W"] + params["b"]
    h = np.tanh(X @ params["W1"] + params["b1"])
    return h @ params["W2"] + params["b2"]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _mean_cross_entropy(kind: str, params: dict[str, np.ndarray], X: np.ndarray, y: np.ndarray) -> float:
    z = _logits(kind, params, X)
    zmax = z.max(axis=1)
    lse = zmax + np.log(np.exp(z - zmax[:, None]).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(y)), y]))


def loss_and_gradient(
    kind: str,
    params: dict[str, np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over (X, y) and its gradient w.r.t. every parameter."""
    n = X.shape[0]
    if kind == "softmax_linear":
        z = X @ params["W"] + params["b"]
        p = _softmax(z)
        g = p.copy()
        g[np.arange(n), y] -= 1.0
        g /= n
        grads = {"W": X.T @ g, "b": g.sum(axis=0)}
    elif kind == "mlp":
        h = np.tanh(X @ params["W1"] + params["b1"])
        z = h @ params["W2"] + params["b2"]
        p = _softmax(z)
        g = p.copy()
        g[np.arange(n), y] -= 1.0
        g /= n
        gh = (g @ params["W2"].T) * (1.0 - h * h)
        grads = {
            "W1": X.T @ gh,
            "b1": gh.sum(axis=0),
            "W2": h.T @ g,
            "b2": g.sum(axis=0),
        }
    else:
        raise ConfigurationError(f"unknown learner kind {kind!r}")

    zmax = z.max(axis=1)
    lse = zmax + np.log(np.exp(z - zmax[:, None]).sum(axis=1))
    loss = float(np.mean(lse - z[np.arange(n), y]))
    return loss, grads


def _check_initial(initial: TrainedModel, config: LearnerConfig, feature_dim: int, num_classes: int) -> None:
    if initial.kind != config.kind:
        raise ConfigurationError(f"warm-start model kind {initial.kind!r} does not match config {config.kind!r}")
    if initial.feature_dim != feature_dim or initial.num_classes != num_classes:
        raise ConfigurationError(
            f"warm-start model shape (d={initial.feature_dim}, I={initial.num_classes}) does not "
            f"match data (d={feature_dim}, I={num_classes})"
        )
    if config.kind == "mlp" and initial.params["W1"].shape[1] != config.hidden_units:
        raise ConfigurationError(
            f"warm-start model has {initial.params['W1'].shape[1]} hidden units, config wants {config.hidden_units}"
        )


def train(
    config: LearnerConfig,
    train_set: TrainingSet,
    validation: Sequence[Sample],
    rng: RandomSource,
    initial: TrainedModel | None = None,
) -> TrainedModel:
    """Mini-batch SGD on mean cross-entropy with patience-based early stopping.

    Each epoch shuffles the training set with ``rng``'s stream; training
    stops at ``max_epochs`` or after ``patience`` consecutive epochs without
    a strict validation-loss improvement. The returned parameters are those
    of the best-validation-loss epoch.
    """
    if train_set.size == 0:
        raise TrainingError("training set is empty")
    if not validation:
        raise TrainingError("validation set is empty")

    X, y = samples_to_arrays(train_set.samples)
    Xv, yv = samples_to_arrays(list(validation))
    feature_dim = X.shape[1]
    num_classes = len(train_set.counts)
    if Xv.shape[1] != feature_dim:
        raise TrainingError(f"validation feature dim {Xv.shape[1]} != train feature dim {feature_dim}")

    gen = rng.generator()
    if initial is not None:
        _check_initial(initial, config, feature_dim, num_classes)
        params = {k: v.copy() for k, v in initial.params.items()}
    else:
        params = _init_params(config, feature_dim, num_classes, gen)

    n = train_set.size
    log: list[EpochStats] = []
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch = 0
    bad_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        order = gen.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grads = loss_and_gradient(config.kind, params, X[idx], y[idx])
            for k in params:
                params[k] -= config.learning_rate * grads[k]

        train_loss = _mean_cross_entropy(config.kind, params, X, y)
        val_loss = _mean_cross_entropy(config.kind, params, Xv, yv)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingError(f"non-finite loss at epoch {epoch} (training diverged)")
        log.append(EpochStats(train_loss=train_loss, val_loss=val_loss))

        if val_loss < best_val:
            best_val = val_loss
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break

    return TrainedModel(
        kind=config.kind,
        feature_dim=feature_dim,
        num_classes=num_classes,
        params=best_params,
        training_log=log,
        stopped_epoch=len(log),
        best_epoch=best_epoch,
    )


def _check_features(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.shape[-1] != model.feature_dim:
        raise ConfigurationError(
            f"feature dim {features.shape[-1]} does not match model dim {model.feature_dim}"
        )
    return features


def predict_proba(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Class-probability vector for one feature vector (softmax of the logits)."""
    features = _check_features(model, features)
    squeeze = features.ndim == 1
    z = _logits(model.kind, model.params, np.atleast_2d(features))
    p = _softmax(z)
    return p[0] if squeeze else p


def predict_batch(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Predicted class indices for a feature matrix; ties go to the lowest index."""
    X = _check_features(model, np.atleast_2d(np.asarray(X, dtype=float)))
    return np.argmax(_softmax(_logits(model.kind, model.params, X)), axis=1)


def predict(model: TrainedModel, features: np.ndarray) -> int:
    """Most probable class for one feature vector; ties go to the lowest index."""
    return int(np.argmax(predict_proba(model, features)))


def gradient_check(
    config: LearnerConfig,
    batch: Sequence[Sample],
    rng: RandomSource,
    num_classes: int | None = None,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-finite-difference gradients.

    Evaluates the mean cross-entropy gradient at a random parameter point
    drawn from ``rng`` and perturbs every parameter by ``±step``.
    """
    if not batch:
        raise ConfigurationError("gradient check needs a non-empty batch")
    X, y = samples_to_arrays(list(batch))
    if num_classes is None:
        num_classes = int(y.max()) + 1

    gen = rng.generator()
    params = _init_params(config, X.shape[1], num_classes, gen)
    for k in params:
        params[k] = gen.uniform(-0.5, 0.5, size=params[k].shape)

    _, grads = loss_and_gradient(config.kind, params, X, y)

    max_rel = 0.0
    for name in sorted(params):
        arr = params[name]
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = _mean_cross_entropy(config.kind, params, X, y)
            flat[i] = orig - step
            down = _mean_cross_entropy(config.kind, params, X, y)
            flat[i] = orig
            fd = (up - down) / (2.0 * step)
            an = grads[name].ravel()[i]
            rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
            max_rel = max(max_rel, rel)
    return max_rel


def model_to_dict(model: TrainedModel, config_hash: str | None = None) -> dict:
    """Checkpoint payload: parameter tensors plus shape metadata (schema v1)."""
    return {
        "schema_version": 1,
        "kind": model.kind,
        "feature_dim": model.feature_dim,
        "num_classes": model.num_classes,
        "config_hash": config_hash,
        "best_epoch": model.best_epoch,
        "stopped_epoch": model.stopped_epoch,
        "params": {k: v.tolist() for k, v in model.params.items()},
    }


def model_from_dict(d: dict) -> TrainedModel:
    """Rebuild a model from a checkpoint payload; exact float round-trip."""
    if d.get("schema_version") != 1:
        raise ConfigurationError(f"unsupported checkpoint schema_version {d.get('schema_version')!r}")
    return TrainedModel(
        kind=d["kind"],
        feature_dim=d["feature_dim"],
        num_classes=d["num_classes"],
        params={k: np.asarray(v, dtype=float) for k, v in d["params"].items()},
        training_log=[],
        stopped_epoch=d.get("stopped_epoch", 0),
        best_epoch=d.get("best_epoch", 0),
    )
