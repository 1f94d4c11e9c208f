"""Linear softmax classifier trained on precomputed propagated features.

Single weight matrix, analytic gradients, Adam with bias correction,
optional inverted input dropout, validation-checkpoint model selection
over several seeded runs. No autograd framework involved.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError, UsageError
from .validation import as_feature_matrix, as_index_mask, as_label_vector

CHECKPOINT_MAGIC = b"GPNETWEIGHTSv1\x00\x00"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class ModelParams:
    W: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.W.ndim != 2:
            raise UsageError("W must be 2-D (features x classes)")
        if not np.all(np.isfinite(self.W)):
            raise UsageError("W must be finite")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.W.shape[1],):
                raise UsageError("bias length must equal the class count")
            if not np.all(np.isfinite(self.bias)):
                raise UsageError("bias must be finite")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 0.0
    dropout_rate: float = 0.0
    epochs: int = 100
    seed: int = 0
    runs: int = 10
    relu: bool = False
    use_bias: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise UsageError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise UsageError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise UsageError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise UsageError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise UsageError(f"runs must be an integer >= 1, got {self.runs!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise UsageError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True)
class Metrics:
    accuracy: dict
    micro_f1: float
    loss_curve: np.ndarray
    epoch_seconds: np.ndarray
    selected_epoch: int
    test_accuracy_mean: float
    test_accuracy_std: float
    run_test_accuracies: tuple = field(default=())
    run_val_accuracies: tuple = field(default=())

    def __post_init__(self):
        for split, acc in self.accuracy.items():
            if not 0.0 <= acc <= 1.0:
                raise UsageError(f"accuracy[{split!r}] outside [0, 1]: {acc}")
        if not 0.0 <= self.micro_f1 <= 1.0:
            raise UsageError(f"micro_f1 outside [0, 1]: {self.micro_f1}")
        if np.any(self.epoch_seconds <= 0):
            raise UsageError("per-epoch wall times must be positive")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros_like(cls, W: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(W), v=np.zeros_like(W))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted by the row max so large logits stay finite."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(H_bar, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    H = _features_of(H_bar)
    if H.shape[1] != params.W.shape[0]:
        raise UsageError(
            f"feature dim {H.shape[1]} does not match weight rows {params.W.shape[0]}"
        )
    logits = H @ params.W
    if params.bias is not None:
        logits = logits + params.bias
    return logits, softmax_rows(logits)


def loss_and_grad(H_bar, params: ModelParams, labels, mask, weight_decay: float = 0.0):
    """Masked mean cross-entropy plus (weight_decay/2)*||W||^2, and its gradient.

    Gradient in W is H_mask^T (P - Y) / |mask| + weight_decay * W; the bias
    gradient (when a bias exists) is the mean residual per class, undecayed.
    """
    H = _features_of(H_bar)
    mask = as_index_mask(mask, H.shape[0], "mask")
    if not mask.any():
        raise UsageError("mask selects no nodes")
    y = as_label_vector(labels, H.shape[0], params.W.shape[1])
    return _loss_grad_on_rows(H[mask], y[mask], params, weight_decay)


def _loss_grad_on_rows(H_rows, y_rows, params: ModelParams, weight_decay: float):
    # overflow here surfaces as a non-finite loss, which callers must check
    with np.errstate(over="ignore", invalid="ignore"):
        B = H_rows.shape[0]
        logits = H_rows @ params.W
        if params.bias is not None:
            logits = logits + params.bias
        zmax = logits.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
        data_loss = np.mean(lse - logits[np.arange(B), y_rows])
        loss = data_loss + 0.5 * weight_decay * float(np.sum(params.W * params.W))

        P = softmax_rows(logits)
        P[np.arange(B), y_rows] -= 1.0
        grad_W = H_rows.T @ P / B + weight_decay * params.W
        grad_b = P.sum(axis=0) / B if params.bias is not None else None
    return loss, grad_W, grad_b


def adam_step(
    W: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    t: int,
    lr: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> np.ndarray:
    """One Adam update with bias correction; mutates state, returns new W."""
    if t < 1:
        raise UsageError(f"Adam step index starts at 1, got {t}")
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1**t)
    v_hat = state.v / (1.0 - beta2**t)
    return W - lr * m_hat / (np.sqrt(v_hat) + eps)


def predict(H_bar, params: ModelParams) -> np.ndarray:
    """Predicted class per node; ties resolve to the lowest class index."""
    logits, _ = forward(H_bar, params)
    return np.argmax(logits, axis=1)


def evaluate(H_bar, params: ModelParams, labels, mask) -> float:
    H = _features_of(H_bar)
    mask = as_index_mask(mask, H.shape[0], "mask")
    if not mask.any():
        raise UsageError("mask selects no nodes")
    y = as_label_vector(labels, H.shape[0], params.W.shape[1])
    pred = predict(H[mask], params)
    return float(np.mean(pred == y[mask]))


def micro_f1(y_true, y_pred, num_classes: int) -> float:
    """Micro-averaged F1 from pooled per-class true/false positive counts.

    Single-label multi-class pooling makes total FP = total FN, so this
    equals plain accuracy; computed from the counts anyway so the metric
    stays honest if that ever changes.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = fp = fn = 0
    for c in range(num_classes):
        tp += int(np.sum((y_pred == c) & (y_true == c)))
        fp += int(np.sum((y_pred == c) & (y_true != c)))
        fn += int(np.sum((y_pred != c) & (y_true == c)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def train(H_bar, labels, splits, config: TrainConfig) -> tuple[ModelParams, Metrics]:
    """Train over seeded runs, checkpointing the best-validation epoch.

    Each run draws its own initialization and dropout stream from a child
    seed of config.seed. Returns the parameters of the run with the best
    validation accuracy and metrics aggregating test accuracy across runs.
    """
    H = _features_of(H_bar)
    if config.relu:
        H = np.maximum(H, 0.0)
    train_mask, val_mask, test_mask = (
        as_index_mask(m, H.shape[0], name)
        for m, name in zip(splits, ("train", "val", "test"))
    )
    for name, m in (("train", train_mask), ("val", val_mask), ("test", test_mask)):
        if not m.any():
            raise UsageError(f"{name} split selects no nodes")
    num_classes = int(np.max(labels)) + 1
    y = as_label_vector(labels, H.shape[0], num_classes)

    H_train, y_train = H[train_mask], y[train_mask]
    H_val, y_val = H[val_mask], y[val_mask]

    children = np.random.SeedSequence(config.seed).spawn(config.runs)
    best = None  # (val_acc, run_index, params, selected_epoch, curve, times)
    test_accs, val_accs = [], []
    for run, child in enumerate(children):
        rng = np.random.default_rng(child)
        result = _train_single_run(H_train, y_train, H_val, y_val, num_classes, config, rng)
        params, sel_epoch, val_acc, curve, times = result
        test_accs.append(evaluate(H, params, y, test_mask))
        val_accs.append(val_acc)
        if best is None or val_acc > best[0]:
            best = (val_acc, run, params, sel_epoch, curve, times)

    _, _, params, sel_epoch, curve, times = best
    pred_test = predict(H[test_mask], params)
    metrics = Metrics(
        accuracy={
            "train": evaluate(H, params, y, train_mask),
            "val": evaluate(H, params, y, val_mask),
            "test": evaluate(H, params, y, test_mask),
        },
        micro_f1=micro_f1(y[test_mask], pred_test, num_classes),
        loss_curve=np.asarray(curve),
        epoch_seconds=np.asarray(times),
        selected_epoch=sel_epoch,
        test_accuracy_mean=float(np.mean(test_accs)),
        test_accuracy_std=float(np.std(test_accs)),
        run_test_accuracies=tuple(test_accs),
        run_val_accuracies=tuple(val_accs),
    )
    return params, metrics


def _train_single_run(H_train, y_train, H_val, y_val, num_classes, config, rng):
    d = H_train.shape[1]
    limit = np.sqrt(6.0 / (d + num_classes))
    W = rng.uniform(-limit, limit, size=(d, num_classes))
    bias = np.zeros(num_classes) if config.use_bias else None
    params = ModelParams(W=W, bias=bias)
    state_W = AdamState.zeros_like(params.W)
    state_b = AdamState.zeros_like(params.bias) if config.use_bias else None

    keep = 1.0 - config.dropout_rate
    best_val, best_epoch = -1.0, 0
    best_W, best_b = params.W.copy(), None if bias is None else params.bias.copy()
    curve, times = [], []
    for t in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        H_in = H_train
        if config.dropout_rate > 0.0:
            drop = rng.random(H_train.shape) < config.dropout_rate
            H_in = np.where(drop, 0.0, H_train / keep)
        loss, grad_W, grad_b = _loss_grad_on_rows(H_in, y_train, params, config.weight_decay)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite training loss at epoch {t}")
        params.W = adam_step(params.W, grad_W, state_W, t, config.learning_rate)
        if config.use_bias:
            params.bias = adam_step(params.bias, grad_b, state_b, t, config.learning_rate)
        val_acc = float(np.mean(predict(H_val, params) == y_val))
        if val_acc > best_val:
            best_val, best_epoch = val_acc, t
            best_W = params.W.copy()
            best_b = params.bias.copy() if config.use_bias else None
        curve.append(loss)
        times.append(time.perf_counter() - t0)
    return ModelParams(W=best_W, bias=best_b), best_epoch, best_val, curve, times


def save_checkpoint(path, params: ModelParams, selected_epoch: int, seed: int) -> None:
    """Checkpoint layout: magic, (d, C, epoch, seed, has_bias) u64 LE, then W (and bias)."""
    d, C = params.W.shape
    has_bias = 0 if params.bias is None else 1
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<QQQQQ", d, C, selected_epoch, seed, has_bias))
        fh.write(np.ascontiguousarray(params.W, dtype="<f8").tobytes())
        if has_bias:
            fh.write(np.ascontiguousarray(params.bias, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, int, int]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}", code="missing-file")
    raw = path.read_bytes()
    header = len(CHECKPOINT_MAGIC) + 40
    if len(raw) < header or raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise DataError(f"not a checkpoint file: {path}", code="bad-magic")
    d, C, epoch, seed, has_bias = struct.unpack_from("<QQQQQ", raw, len(CHECKPOINT_MAGIC))
    want = d * C * 8 + (C * 8 if has_bias else 0)
    body = raw[header:]
    if len(body) != want:
        raise DataError(
            f"checkpoint payload is {len(body)} bytes, expected {want}", code="count-mismatch"
        )
    W = np.frombuffer(body[: d * C * 8], dtype="<f8").reshape(d, C).astype(np.float64)
    bias = None
    if has_bias:
        bias = np.frombuffer(body[d * C * 8 :], dtype="<f8").astype(np.float64)
    return ModelParams(W=W, bias=bias), int(epoch), int(seed)


def _features_of(H_bar) -> np.ndarray:
    H = getattr(H_bar, "H_bar", H_bar)
    return as_feature_matrix(np.asarray(H, dtype=np.float64), "H_bar")
