"""Reference classifier and the mixed real/synthetic fine-tuning loop.

The reference model is a small MLP (two hidden layers, softmax head) with
hand-written backprop so gradients can be verified against finite
differences. Training follows the weighted objective
alpha * mean real cross-entropy + (1 - alpha) * mean synthetic cross-entropy,
with plain gradient descent, evaluation on real validation data only, and
patience-based early stopping that returns the best checkpoint.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .generators import Batch, MixPlan, build_mix_batches
from .metrics import log_loss, roc_auc
from .tables import Table

_CHECKPOINT_MAGIC = b"CMXREF01"

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(float)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
}


@dataclass(frozen=True)
class FineTuneConfig:
    initial_learning_rate: float = 1e-4
    finetune_steps: int = 50
    patience: int = 40
    batch_size: int = 32
    eval_every: int = 1
    loss: str = "cross_entropy"

    def __post_init__(self) -> None:
        if self.patience < 1 or self.finetune_steps < 1:
            raise ConfigError("patience and finetune_steps must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.loss != "cross_entropy":
            raise ConfigError(f"unsupported loss {self.loss!r}")


class StopReason(str, Enum):
    PATIENCE = "patience"
    STEPS_EXHAUSTED = "steps_exhausted"


@dataclass(frozen=True)
class StepRecord:
    step: int
    train_loss: float
    train_loss_real: float
    train_loss_syn: float
    val_log_loss: float
    val_roc_auc: float


@dataclass
class TrainHistory:
    steps: list[StepRecord] = field(default_factory=list)
    best_step: int = 0
    stopped_reason: StopReason = StopReason.STEPS_EXHAUSTED

    def best_val_log_loss(self) -> float:
        recorded = [s.val_log_loss for s in self.steps if not np.isnan(s.val_log_loss)]
        return min(recorded) if recorded else float("nan")


class ReferenceModel:
    """Feed-forward softmax classifier with a frozen initialization checkpoint."""

    def __init__(
        self,
        layers: list[tuple[np.ndarray, np.ndarray]],
        activation: str,
        classes: np.ndarray,
        init_layers: list[tuple[np.ndarray, np.ndarray]] | None = None,
    ):
        if activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.layers = [(W.copy(), b.copy()) for W, b in layers]
        self.activation = activation
        self.classes_ = np.asarray(classes, dtype=float)
        source = init_layers if init_layers is not None else layers
        self._init_layers = [(W.copy(), b.copy()) for W, b in source]
        for W, b in self._init_layers:
            W.setflags(write=False)
            b.setflags(write=False)

    @classmethod
    def initialize(
        cls,
        n_features: int,
        classes: Sequence[float],
        rng: np.random.Generator,
        hidden: Sequence[int] = (64, 32),
        activation: str = "relu",
    ) -> "ReferenceModel":
        classes = np.asarray(sorted(set(float(c) for c in classes)))
        if classes.size < 2:
            raise DataError("reference model needs at least 2 classes")
        sizes = [n_features, *hidden, classes.size]
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            layers.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
        return cls(layers, activation, classes)

    @property
    def n_features(self) -> int:
        return int(self.layers[0][0].shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.classes_.size)

    def layer_names(self) -> list[str]:
        return [f"hidden_{i}" for i in range(len(self.layers) - 1)] + ["output"]

    def init_layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return self._init_layers

    def copy_with_layers(self, layers: list[tuple[np.ndarray, np.ndarray]]) -> "ReferenceModel":
        return ReferenceModel(layers, self.activation, self.classes_, init_layers=self._init_layers)

    def snapshot(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(W.copy(), b.copy()) for W, b in self.layers]

    def class_indices(self, labels: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.classes_, labels)
        idx = np.clip(idx, 0, self.classes_.size - 1)
        if np.any(self.classes_[idx] != labels):
            missing = sorted(set(labels.tolist()) - set(self.classes_.tolist()))
            raise DataError(f"labels {missing} unknown to the model")
        return idx

    def _forward(self, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
        act, _ = _ACTIVATIONS[self.activation]
        pre: list[np.ndarray] = []
        post: list[np.ndarray] = [X]
        h = X
        for i, (W, b) in enumerate(self.layers):
            z = h @ W + b
            pre.append(z)
            h = act(z) if i < len(self.layers) - 1 else z
            post.append(h)
        shifted = h - h.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        return probs, pre, post

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        return self._forward(X)[0]

    def weighted_loss(self, X: np.ndarray, y_idx: np.ndarray, weights: np.ndarray) -> float:
        probs = self._forward(np.asarray(X, dtype=float))[0]
        picked = np.clip(probs[np.arange(len(y_idx)), y_idx], 1e-15, 1.0)
        return float(-(weights * np.log(picked)).sum())

    def loss_and_grads(
        self, X: np.ndarray, y_idx: np.ndarray, weights: np.ndarray
    ) -> tuple[float, list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Weighted cross-entropy, its parameter gradients, and per-row CE."""
        X = np.asarray(X, dtype=float)
        probs, pre, post = self._forward(X)
        picked = np.clip(probs[np.arange(len(y_idx)), y_idx], 1e-15, 1.0)
        per_row = -np.log(picked)
        loss = float((weights * per_row).sum())

        _, act_grad = _ACTIVATIONS[self.activation]
        onehot = np.zeros_like(probs)
        onehot[np.arange(len(y_idx)), y_idx] = 1.0
        delta = (probs - onehot) * weights[:, None]
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)  # type: ignore[list-item]
        for i in range(len(self.layers) - 1, -1, -1):
            grads[i] = (post[i].T @ delta, delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.layers[i][0].T) * act_grad(pre[i - 1])
        return loss, grads, per_row

    def apply_gradients(self, grads: list[tuple[np.ndarray, np.ndarray]], lr: float) -> None:
        for (W, b), (gW, gb) in zip(self.layers, grads):
            W -= lr * gW
            b -= lr * gb


def _batch_weights(batch: Batch, alpha: float) -> np.ndarray:
    """Row weights realizing alpha * mean(real CE) + (1-alpha) * mean(syn CE);
    a source absent from the batch contributes nothing."""
    weights = np.zeros(batch.X.shape[0])
    n_real = int(batch.real_mask.sum())
    n_syn = int((~batch.real_mask).sum())
    if n_real > 0:
        weights[batch.real_mask] = alpha / n_real
    if n_syn > 0:
        weights[~batch.real_mask] = (1.0 - alpha) / n_syn
    return weights


def evaluate_model(model: ReferenceModel, table: Table) -> tuple[float, float]:
    """(log-loss, ROC-AUC) of the model on a table's features/target."""
    X, y = table.features_and_target()
    probs = model.predict_proba(X)
    y_idx = model.class_indices(y)
    return log_loss(probs, y_idx), roc_auc(probs, y_idx)


def finetune(
    model: ReferenceModel,
    plan: MixPlan,
    val_real: Table,
    cfg: FineTuneConfig,
    rng: np.random.Generator,
) -> tuple[ReferenceModel, TrainHistory]:
    """Run the mixed-objective training loop with real-only validation.

    Evaluation happens before any update (step 0) and every `eval_every`
    steps; training stops after `patience` consecutive non-improving
    evaluations or when the step budget is exhausted. The returned model
    carries the parameters of the best evaluation, never the last.
    """
    if val_real.n == 0:
        raise DataError("validation table is empty")
    n_feature_cols = len(plan.real.schema.feature_indices())
    if model.n_features != n_feature_cols:
        raise DataError(
            f"model expects {model.n_features} features but plan provides {n_feature_cols}"
        )
    if plan.alpha < 1.0:
        plan.ensure_synthetic(rng)
    batches = build_mix_batches(plan, cfg.batch_size, rng)

    history = TrainHistory()
    work = model.copy_with_layers(model.snapshot())

    val_ll, val_auc = evaluate_model(work, val_real)
    history.steps.append(
        StepRecord(0, float("nan"), float("nan"), float("nan"), val_ll, val_auc)
    )
    best_ll = val_ll
    best_step = 0
    best_params = work.snapshot()
    bad_evals = 0
    history.stopped_reason = StopReason.STEPS_EXHAUSTED

    for step in range(1, cfg.finetune_steps + 1):
        if (
            plan.refresh_interval is not None
            and plan.alpha < 1.0
            and step > 1
            and (step - 1) % plan.refresh_interval == 0
        ):
            plan.refresh(rng)
            batches = build_mix_batches(plan, cfg.batch_size, rng)
        batch = next(batches)
        weights = _batch_weights(batch, plan.alpha)
        y_idx = work.class_indices(batch.y)
        loss, grads, per_row = work.loss_and_grads(batch.X, y_idx, weights)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"non-finite training loss at step {step} "
                f"(real rows {int(batch.real_mask.sum())}, "
                f"synthetic rows {int((~batch.real_mask).sum())})"
            )
        work.apply_gradients(grads, cfg.initial_learning_rate)

        loss_real = float(per_row[batch.real_mask].mean()) if batch.real_mask.any() else float("nan")
        loss_syn = float(per_row[~batch.real_mask].mean()) if (~batch.real_mask).any() else float("nan")
        if step % cfg.eval_every == 0:
            val_ll, val_auc = evaluate_model(work, val_real)
            history.steps.append(StepRecord(step, loss, loss_real, loss_syn, val_ll, val_auc))
            if val_ll < best_ll:
                best_ll = val_ll
                best_step = step
                best_params = work.snapshot()
                bad_evals = 0
            else:
                bad_evals += 1
                if bad_evals >= cfg.patience:
                    history.stopped_reason = StopReason.PATIENCE
                    break
        else:
            history.steps.append(
                StepRecord(step, loss, loss_real, loss_syn, float("nan"), float("nan"))
            )

    history.best_step = best_step
    return model.copy_with_layers(best_params), history


@dataclass(frozen=True)
class WeightDistanceReport:
    total: float
    per_layer: tuple[tuple[str, float], ...]
    per_component: dict[str, float]


def weight_distance(model: ReferenceModel) -> WeightDistanceReport:
    """Euclidean distance between current and initialization parameters,
    in total, per layer, and grouped into hidden-linear vs output-head."""
    names = model.layer_names()
    per_layer: list[tuple[str, float]] = []
    all_sq = 0.0
    for name, (W, b), (W0, b0) in zip(names, model.layers, model.init_layers()):
        sq = float(((W - W0) ** 2).sum() + ((b - b0) ** 2).sum())
        per_layer.append((name, float(np.sqrt(sq))))
        all_sq += sq
    linear_sq = sum(dist**2 for name, dist in per_layer if name.startswith("hidden"))
    head_sq = sum(dist**2 for name, dist in per_layer if name == "output")
    return WeightDistanceReport(
        total=float(np.sqrt(all_sq)),
        per_layer=tuple(per_layer),
        per_component={
            "linear": float(np.sqrt(linear_sq)),
            "output_head": float(np.sqrt(head_sq)),
        },
    )


def save_checkpoint(model: ReferenceModel, path: str | Path) -> None:
    """Write a versioned binary checkpoint.

    Layout: 8-byte magic ``CMXREF01``, little-endian uint32 header length, a
    JSON header (version, activation, classes, layer shapes, array order),
    then the listed arrays as row-major little-endian float64, current
    parameters first and the frozen initialization after them.
    """
    names = model.layer_names()
    header = {
        "version": 1,
        "activation": model.activation,
        "classes": [float(c) for c in model.classes_],
        "layer_shapes": [[int(W.shape[0]), int(W.shape[1])] for W, _ in model.layers],
        "arrays": [f"{prefix}{name}.{part}" for prefix in ("", "init.") for name in names for part in ("W", "b")],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for source in (model.layers, model.init_layers()):
            for W, b in source:
                fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> ReferenceModel:
    raw = Path(path).read_bytes()
    if raw[:8] != _CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a reference-model checkpoint")
    header_len = struct.unpack("<I", raw[8:12])[0]
    header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    if header.get("version") != 1:
        raise DataError(f"{path}: unsupported checkpoint version {header.get('version')}")
    offset = 12 + header_len
    shapes = [tuple(s) for s in header["layer_shapes"]]

    def read_layers() -> list[tuple[np.ndarray, np.ndarray]]:
        nonlocal offset
        layers = []
        for rows, cols in shapes:
            w_bytes = rows * cols * 8
            W = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols).copy()
            offset += w_bytes
            b = np.frombuffer(raw, dtype="<f8", count=cols, offset=offset).copy()
            offset += cols * 8
            layers.append((W, b))
        return layers

    layers = read_layers()
    init_layers = read_layers()
    return ReferenceModel(layers, header["activation"], np.asarray(header["classes"]), init_layers)
