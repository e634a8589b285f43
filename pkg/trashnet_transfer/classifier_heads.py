"""Classifier heads fed by extracted feature vectors.

Two interchangeable heads share the ClassifierHead interface:

- SoftmaxHead: affine scores q = W·x + w0 turned into class posteriors by the
  softmax function, trained by full-batch gradient descent on mean
  cross-entropy.
- SvmHead: one linear max-margin machine per class (one-vs-rest), each trained
  by sequential minimal optimization (pairwise dual updates) on the
  soft-margin problem min ½‖w‖² + C·Σ hinge with an unregularized bias.
  Prediction is the class with the largest decision value.

Both store the per-dimension standardization fitted on their training
features, so inference takes raw feature vectors. Ties are always broken
towards the lowest class index.

To add a new head:
1. Create a class inheriting from ClassifierHead
2. Implement decision_values(), to_tensors() and get_info()
3. Add a trainer and register it in train_head()
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import numpy.typing as npt

from .const import DEFAULT_SOFTMAX_EPOCHS, DEFAULT_SOFTMAX_LR, DEFAULT_SVM_C, DEFAULT_SVM_TOL, HEAD_SOFTMAX, HEAD_SVM
from .errors import ConfigError, DataError, DomainError
from .tensor_core import Tensor

_LOGGER = logging.getLogger(__name__)

__all__ = [
    "BinarySvmFit",
    "ClassifierHead",
    "FeatureStandardizer",
    "HeadTrainConfig",
    "SoftmaxHead",
    "SvmHead",
    "head_from_tensors",
    "softmax_cross_entropy",
    "softmax_logits",
    "softmax_predict",
    "softmax_probs",
    "softmax_stable_learning_rate",
    "svm_decision",
    "svm_distance",
    "svm_margin",
    "svm_predict",
    "train_binary_svm",
    "train_head",
    "train_multiclass_svm",
    "train_softmax",
]


# Softmax function


def softmax_probs(q: npt.ArrayLike) -> Tensor:
    """exp(q_c) / Σ_j exp(q_j), row-wise for a matrix of logits.

    The maximum is subtracted first so large logits cannot overflow.
    """
    logits = np.asarray(q, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _log_softmax(logits: Tensor) -> Tensor:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax_cross_entropy(logits: npt.ArrayLike, labels: npt.ArrayLike) -> tuple[float, Tensor]:
    """Mean cross-entropy of N×k logits and its gradient with respect to them."""
    q = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = q.shape[0]
    rows = np.arange(n)
    log_p = _log_softmax(q)
    loss = float(-np.mean(log_p[rows, y]))
    grad = np.exp(log_p)
    grad[rows, y] -= 1.0
    return loss, grad / n


# Standardization


@dataclass(frozen=True, eq=False)
class FeatureStandardizer:
    """Per-dimension zero-mean, unit-variance transform.

    Dimensions with zero variance keep scale 1 so they map to zero.
    """

    mean: Tensor
    scale: Tensor

    @staticmethod
    def fit(features: npt.ArrayLike) -> FeatureStandardizer:
        x = np.asarray(features, dtype=np.float64)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        constant = std == 0.0
        if np.any(constant):
            _LOGGER.warning(
                "%d feature dimension(s) have zero variance on the training split",
                int(np.sum(constant)),
            )
        return FeatureStandardizer(mean, np.where(constant, 1.0, std))

    def transform(self, features: npt.ArrayLike) -> Tensor:
        x = np.asarray(features, dtype=np.float64)
        if x.shape[-1] != self.mean.shape[0]:
            raise DomainError(
                f"feature dimension {x.shape[-1]} does not match standardizer {self.mean.shape[0]}"
            )
        return (x - self.mean) / self.scale


def _standardize(scaler: FeatureStandardizer | None, x: npt.ArrayLike) -> Tensor:
    arr = np.asarray(x, dtype=np.float64)
    return arr if scaler is None else scaler.transform(arr)


# Heads


class ClassifierHead(ABC):
    """Abstract base class for classifier heads."""

    name: str
    scaler: FeatureStandardizer | None

    @property
    @abstractmethod
    def class_count(self) -> int:
        """Number of classes k."""

    @property
    @abstractmethod
    def feature_dim(self) -> int:
        """Dimension d of the raw feature vectors."""

    @abstractmethod
    def decision_values(self, x: npt.ArrayLike) -> Tensor:
        """Per-class scores for one feature vector (or an N×d matrix)."""

    def predict(self, x: npt.ArrayLike) -> int:
        """Class with the largest score; ties go to the lowest index."""
        return int(np.argmax(self.decision_values(x)))

    def predict_many(self, features: npt.ArrayLike) -> npt.NDArray[np.int64]:
        """Predicted class for every row of an N×d matrix."""
        x = np.asarray(features, dtype=np.float64)
        if x.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return np.argmax(self.decision_values(x), axis=1).astype(np.int64)

    def _check_dim(self, x: Tensor) -> None:
        if x.shape[-1] != self.feature_dim:
            raise DomainError(
                f"feature dimension {x.shape[-1]} does not match head dimension {self.feature_dim}"
            )

    @abstractmethod
    def to_tensors(self) -> tuple[dict[str, Any], dict[str, Tensor]]:
        """Metadata and tensors for the tensor container."""

    def _scaler_tensors(self) -> dict[str, Tensor]:
        if self.scaler is None:
            return {}
        return {"scaler.mean": self.scaler.mean, "scaler.scale": self.scaler.scale}

    @abstractmethod
    def get_info(self) -> dict[str, Any]:
        """Get head diagnostic info."""


@dataclass(frozen=True, eq=False)
class SoftmaxHead(ClassifierHead):
    """Softmax regression: q = W·x + w0, P(c|x) = softmax(q)_c."""

    weight: Tensor
    bias: Tensor
    scaler: FeatureStandardizer | None = None
    training_loss: tuple[float, ...] = field(default_factory=tuple)

    name = HEAD_SOFTMAX

    def __post_init__(self) -> None:
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise DomainError(f"softmax head needs W k×d and w0 of length k, got {w.shape}, {b.shape}")
        if w.shape[0] < 2:
            raise DomainError("softmax head needs at least two classes")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DomainError("softmax head parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def class_count(self) -> int:
        return int(self.weight.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.weight.shape[1])

    def decision_values(self, x: npt.ArrayLike) -> Tensor:
        xs = np.asarray(x, dtype=np.float64)
        self._check_dim(xs)
        return _standardize(self.scaler, xs) @ self.weight.T + self.bias

    def probabilities(self, x: npt.ArrayLike) -> Tensor:
        return softmax_probs(self.decision_values(x))

    def to_tensors(self) -> tuple[dict[str, Any], dict[str, Tensor]]:
        tensors = {"weight": self.weight, "bias": self.bias}
        tensors.update(self._scaler_tensors())
        return {"head": self.name}, tensors

    def get_info(self) -> dict[str, Any]:
        return {
            "head": self.name,
            "class_count": self.class_count,
            "feature_dim": self.feature_dim,
            "standardized": self.scaler is not None,
            "epochs": max(len(self.training_loss) - 1, 0),
            "final_loss": self.training_loss[-1] if self.training_loss else None,
        }


def softmax_logits(head: SoftmaxHead, x: npt.ArrayLike) -> Tensor:
    """q[c] = dot(W row c, x) + w0[c] (after the head's standardization)."""
    xs = np.asarray(x, dtype=np.float64)
    if xs.ndim != 1:
        raise DomainError("softmax_logits expects a single feature vector")
    return head.decision_values(xs)


def softmax_predict(head: SoftmaxHead, x: npt.ArrayLike) -> int:
    """Index of the largest posterior; ties go to the lowest index."""
    return int(np.argmax(softmax_probs(softmax_logits(head, x))))


@dataclass(frozen=True)
class HeadTrainConfig:
    """Settings for both head trainers.

    learning_rate and epochs drive softmax regression; c, tolerance and
    max_passes drive the SVM solver (max_passes None means 10·n).
    """

    learning_rate: float = DEFAULT_SOFTMAX_LR
    epochs: int = DEFAULT_SOFTMAX_EPOCHS
    seed: int = 0
    c: float = DEFAULT_SVM_C
    tolerance: float = DEFAULT_SVM_TOL
    max_passes: int | None = None
    standardize: bool = True

    def __post_init__(self) -> None:
        if not self.learning_rate >= 0 or not math.isfinite(self.learning_rate):
            raise ConfigError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not self.c > 0:
            raise ConfigError(f"C must be positive, got {self.c}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_passes is not None and self.max_passes < 1:
            raise ConfigError(f"max_passes must be >= 1, got {self.max_passes}")


def _check_training_data(
    features: npt.ArrayLike, labels: npt.ArrayLike
) -> tuple[Tensor, npt.NDArray[np.int64]]:
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2:
        raise DomainError(f"features must be an N×d matrix, got shape {x.shape}")
    if y.shape != (x.shape[0],):
        raise DomainError(f"{y.shape[0]} labels for {x.shape[0]} feature rows")
    if x.shape[0] == 0:
        raise DataError("no training samples")
    if not np.all(np.isfinite(x)):
        raise DomainError("features contain non-finite values")
    return x, y


def _check_classes(y: npt.NDArray[np.int64], class_count: int | None) -> int:
    k = int(class_count if class_count is not None else y.max() + 1)
    if k < 2:
        raise DataError("at least two classes are required")
    if y.min() < 0 or y.max() >= k:
        raise DataError(f"labels must lie in 0..{k - 1}")
    counts = np.bincount(y, minlength=k)
    empty = [c for c in range(k) if counts[c] == 0]
    if empty:
        raise DataError(f"class(es) {empty} have no training samples")
    return k


def softmax_stable_learning_rate(features: npt.ArrayLike) -> float:
    """Largest step for which full-batch descent cannot increase the loss.

    The softmax cross-entropy Hessian is bounded by ½·E[x̃x̃ᵀ] with x̃ = (x, 1),
    whose largest eigenvalue is at most 1 + E‖x‖²; the descent lemma then
    allows any step up to 4 / (1 + E‖x‖²).
    """
    x = np.asarray(features, dtype=np.float64)
    return 4.0 / (1.0 + float(np.mean(np.sum(x * x, axis=1))))


def _canonical_order(x: Tensor, y: npt.NDArray[np.int64]) -> npt.NDArray[np.intp]:
    keys = tuple(x[:, j] for j in range(x.shape[1] - 1, -1, -1)) + (y,)
    return np.lexsort(keys)


def train_softmax(
    features: npt.ArrayLike,
    labels: npt.ArrayLike,
    config: HeadTrainConfig,
    class_count: int | None = None,
) -> SoftmaxHead:
    """Full-batch gradient descent on mean cross-entropy.

    Samples are put in a canonical order first, so any permutation of the
    input yields a bit-identical head. The loss before every epoch and after
    the last is kept in ``training_loss``.
    """
    x, y = _check_training_data(features, labels)
    k = _check_classes(y, class_count)
    order = _canonical_order(x, y)
    x, y = x[order], y[order]

    scaler = FeatureStandardizer.fit(x) if config.standardize else None
    xs = _standardize(scaler, x)
    rng = np.random.default_rng(config.seed)
    weight = rng.normal(0.0, 0.01, size=(k, x.shape[1]))
    bias = np.zeros(k)

    lr = config.learning_rate
    if lr > softmax_stable_learning_rate(xs):
        _LOGGER.warning(
            "Softmax learning rate %g exceeds the monotone-descent bound %g",
            lr,
            softmax_stable_learning_rate(xs),
        )
    losses: list[float] = []
    for _ in range(config.epochs):
        loss, grad = softmax_cross_entropy(xs @ weight.T + bias, y)
        losses.append(loss)
        weight = weight - lr * (grad.T @ xs)
        bias = bias - lr * grad.sum(axis=0)
    final_loss, _ = softmax_cross_entropy(xs @ weight.T + bias, y)
    losses.append(final_loss)

    _LOGGER.info(
        "Softmax head trained: %d samples, %d classes, %d epochs, loss %.4f -> %.4f",
        x.shape[0],
        k,
        config.epochs,
        losses[0],
        losses[-1],
    )
    return SoftmaxHead(weight, bias, scaler, tuple(losses))


# Linear SVM


def _check_pair(w: npt.ArrayLike, x: npt.ArrayLike) -> tuple[Tensor, Tensor]:
    ws = np.asarray(w, dtype=np.float64)
    xs = np.asarray(x, dtype=np.float64)
    if ws.ndim != 1 or xs.shape[-1] != ws.shape[0]:
        raise DomainError(f"dimension mismatch: w {ws.shape}, x {xs.shape}")
    return ws, xs


def svm_decision(w: npt.ArrayLike, b: float, x: npt.ArrayLike) -> float:
    """Signed functional value ⟨w, x⟩ + b."""
    ws, xs = _check_pair(w, x)
    return float(np.dot(ws, xs)) + float(b)


def svm_distance(w: npt.ArrayLike, b: float, x: npt.ArrayLike) -> float:
    """Euclidean distance |⟨w, x⟩ + b| / ‖w‖ from x to the hyperplane."""
    ws, xs = _check_pair(w, x)
    norm = float(np.linalg.norm(ws))
    if norm == 0.0:
        raise DomainError("distance to a hyperplane needs a non-zero weight vector")
    return abs(float(np.dot(ws, xs)) + float(b)) / norm


def svm_margin(
    w: npt.ArrayLike, b: float, samples: npt.ArrayLike, labels: npt.ArrayLike
) -> float:
    """Closest positive distance plus closest negative distance."""
    xs = np.asarray(samples, dtype=np.float64)
    ys = np.asarray(labels)
    positives = xs[ys == 1]
    negatives = xs[ys == -1]
    if positives.shape[0] == 0 or negatives.shape[0] == 0:
        raise DataError("margin needs samples labelled +1 and -1")
    return min(svm_distance(w, b, x) for x in positives) + min(
        svm_distance(w, b, x) for x in negatives
    )


@dataclass(frozen=True, eq=False)
class BinarySvmFit:
    """Solution of one binary soft-margin problem.

    ``alphas`` are the dual variables with Σ α_i y_i = 0; ``w`` is
    Σ α_i y_i x_i and ``b`` is read off the free support vectors.
    ``max_violation`` is the KKT gap of the most violating pair.
    """

    w: Tensor
    b: float
    alphas: Tensor
    passes: int
    converged: bool
    max_violation: float
    objective_trace: tuple[float, ...] = ()

    def decision(self, x: npt.ArrayLike) -> Tensor:
        return np.asarray(x, dtype=np.float64) @ self.w + self.b


def _working_sets(
    alphas: Tensor, ya: Tensor, c: float
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]:
    """Indices whose α may move up (along y) and down without leaving [0, C]."""
    up = ((ya > 0) & (alphas < c)) | ((ya < 0) & (alphas > 0))
    low = ((ya > 0) & (alphas > 0)) | ((ya < 0) & (alphas < c))
    return up, low


def _kkt_gap(
    scores: Tensor, up: npt.NDArray[np.bool_], low: npt.NDArray[np.bool_]
) -> tuple[float, float]:
    """(max score over up, min score over low); optimal once they meet within tol."""
    if not up.any() or not low.any():
        return 0.0, 0.0
    return float(np.max(scores[up])), float(np.min(scores[low]))


def train_binary_svm(
    features: npt.ArrayLike,
    labels: npt.ArrayLike,
    config: HeadTrainConfig,
    seed: int | None = None,
    trace_objective: bool = False,
) -> BinarySvmFit:
    """SMO for min ½‖w‖² + C·Σ max(0, 1 - y(⟨w,x⟩+b)).

    Works on the dual max Σα - ½‖Σ α_i y_i x_i‖² subject to 0 ≤ α ≤ C and
    Σ α_i y_i = 0, so the bias is not regularized. Every pass visits the
    samples in a seeded random order; a sample that violates the KKT
    conditions by more than config.tolerance is paired with the most
    violating partner and the pair is optimized exactly, so the dual
    objective never decreases. Stops once the KKT gap is within
    config.tolerance, or after max_passes passes.
    """
    x, y = _check_training_data(features, labels)
    if not np.all(np.isin(y, (-1, 1))):
        raise DataError("binary SVM labels must be -1 or +1")
    if np.all(y == y[0]):
        raise DataError("binary SVM needs both classes present")

    n = x.shape[0]
    ya = y.astype(np.float64)
    c = float(config.c)
    tol = float(config.tolerance)
    max_passes = config.max_passes or 10 * n
    rng = np.random.default_rng(config.seed if seed is None else seed)

    alphas = np.zeros(n)
    w = np.zeros(x.shape[1])
    trace: list[float] = [0.0] if trace_objective else []
    converged = False
    gap = math.inf
    passes = 0

    while passes < max_passes:
        passes += 1
        for i in rng.permutation(n):
            # score_t = -y_t·∂D/∂α_t; for free vectors it equals b
            scores = ya - x @ w
            up, low = _working_sets(alphas, ya, c)
            if up[i]:
                j = int(np.flatnonzero(low)[np.argmin(scores[low])])
                if scores[i] - scores[j] <= tol:
                    continue
                first, second = int(i), j
            elif low[i]:
                j = int(np.flatnonzero(up)[np.argmax(scores[up])])
                if scores[j] - scores[i] <= tol:
                    continue
                first, second = j, int(i)
            else:
                continue

            diff = x[first] - x[second]
            curvature = max(float(np.dot(diff, diff)), 1e-12)
            step = min(
                (scores[first] - scores[second]) / curvature,
                c - alphas[first] if ya[first] > 0 else alphas[first],
                alphas[second] if ya[second] > 0 else c - alphas[second],
            )
            alphas[first] = min(max(alphas[first] + ya[first] * step, 0.0), c)
            alphas[second] = min(max(alphas[second] - ya[second] * step, 0.0), c)
            w += step * diff
            if trace_objective:
                trace.append(float(np.sum(alphas) - 0.5 * np.dot(w, w)))

        scores = ya - x @ w
        high, low_score = _kkt_gap(scores, *_working_sets(alphas, ya, c))
        gap = high - low_score
        _LOGGER.debug("SVM pass %d: KKT gap %.3g", passes, gap)
        if gap <= tol:
            converged = True
            break

    if not converged:
        _LOGGER.warning(
            "SVM solver stopped after %d passes with KKT violation %.3g > %.3g",
            passes,
            gap,
            tol,
        )

    w = (alphas * ya) @ x
    scores = ya - x @ w
    up, low = _working_sets(alphas, ya, c)
    free = (alphas > 0.0) & (alphas < c)
    if free.any():
        b = float(np.mean(scores[free]))
    else:
        high, low_score = _kkt_gap(scores, up, low)
        b = 0.5 * (high + low_score)
    return BinarySvmFit(
        w=w,
        b=b,
        alphas=alphas,
        passes=passes,
        converged=converged,
        max_violation=gap,
        objective_trace=tuple(trace),
    )


@dataclass(frozen=True, eq=False)
class SvmHead(ClassifierHead):
    """One-vs-rest linear SVMs; row c of ``weight`` separates class c."""

    weight: Tensor
    bias: Tensor
    c: float = DEFAULT_SVM_C
    scaler: FeatureStandardizer | None = None

    name = HEAD_SVM

    def __post_init__(self) -> None:
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise DomainError(f"SVM head needs k×d weights and k biases, got {w.shape}, {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DomainError("SVM head parameters must be finite")
        if not self.c > 0:
            raise DomainError(f"C must be positive, got {self.c}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def class_count(self) -> int:
        return int(self.weight.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def machines(self) -> list[tuple[Tensor, float]]:
        """Per-class (w, b) pairs."""
        return [(self.weight[c], float(self.bias[c])) for c in range(self.class_count)]

    def decision_values(self, x: npt.ArrayLike) -> Tensor:
        xs = np.asarray(x, dtype=np.float64)
        self._check_dim(xs)
        return _standardize(self.scaler, xs) @ self.weight.T + self.bias

    def to_tensors(self) -> tuple[dict[str, Any], dict[str, Tensor]]:
        tensors = {"weight": self.weight, "bias": self.bias}
        tensors.update(self._scaler_tensors())
        return {"head": self.name, "c": self.c}, tensors

    def get_info(self) -> dict[str, Any]:
        return {
            "head": self.name,
            "class_count": self.class_count,
            "feature_dim": self.feature_dim,
            "standardized": self.scaler is not None,
            "c": self.c,
            "weight_norms": [float(np.linalg.norm(row)) for row in self.weight],
        }


def svm_predict(head: SvmHead, x: npt.ArrayLike) -> int:
    """argmax_c decision_c(x); ties go to the lowest index."""
    return head.predict(x)


def train_multiclass_svm(
    features: npt.ArrayLike,
    labels: npt.ArrayLike,
    config: HeadTrainConfig,
    class_count: int | None = None,
) -> SvmHead:
    """k binary machines, class c against the rest, seeded with seed + c."""
    x, y = _check_training_data(features, labels)
    k = _check_classes(y, class_count)
    scaler = FeatureStandardizer.fit(x) if config.standardize else None
    xs = _standardize(scaler, x)

    weight = np.zeros((k, x.shape[1]))
    bias = np.zeros(k)
    for c in range(k):
        fit = train_binary_svm(xs, np.where(y == c, 1, -1), config, seed=config.seed + c)
        weight[c] = fit.w
        bias[c] = fit.b
        _LOGGER.debug(
            "SVM machine %d: %d passes, converged=%s, support vectors=%d",
            c,
            fit.passes,
            fit.converged,
            int(np.sum(fit.alphas > 0.0)),
        )
    _LOGGER.info("SVM head trained: %d samples, %d classes, C=%g", x.shape[0], k, config.c)
    return SvmHead(weight, bias, config.c, scaler)


def train_head(
    name: str,
    features: npt.ArrayLike,
    labels: npt.ArrayLike,
    config: HeadTrainConfig,
    class_count: int | None = None,
) -> ClassifierHead:
    """Train the head called ``name`` ("softmax" or "svm")."""
    if name == HEAD_SOFTMAX:
        return train_softmax(features, labels, config, class_count)
    if name == HEAD_SVM:
        return train_multiclass_svm(features, labels, config, class_count)
    raise ConfigError(f"unknown head {name!r}; expected {HEAD_SOFTMAX!r} or {HEAD_SVM!r}")


def head_from_tensors(meta: Mapping[str, Any], tensors: Mapping[str, Tensor]) -> ClassifierHead:
    """Rebuild a head from the output of ClassifierHead.to_tensors()."""
    scaler = None
    if "scaler.mean" in tensors:
        scaler = FeatureStandardizer(tensors["scaler.mean"], tensors["scaler.scale"])
    name = meta.get("head")
    if name == HEAD_SOFTMAX:
        return SoftmaxHead(tensors["weight"], tensors["bias"], scaler)
    if name == HEAD_SVM:
        return SvmHead(tensors["weight"], tensors["bias"], float(meta.get("c", DEFAULT_SVM_C)), scaler)
    raise DataError(f"unknown head {name!r} in stored head")
