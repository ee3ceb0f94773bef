"""Class-balanced logistic regression trained by full-batch gradient descent,
plus the F1 score used as actual reliability.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        if not (self.weights.shape == self.mean.shape == self.std.shape):
            raise ValueError("weights, mean and std must have the same length")
        if np.any(self.std <= 0):
            raise ValueError("standardization stddevs must be > 0")

    @property
    def n_features(self) -> int:
        return int(self.weights.size)

    def decision_function(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[1]}")
        return ((x - self.mean) / self.std) @ self.weights + self.bias


def predict_proba(model: LogisticModel, features) -> np.ndarray:
    return expit(model.decision_function(features))


def train_logistic(
    features,
    labels,
    learning_rate: float = 0.5,
    epochs: int = 300,
    l2: float = 1e-3,
) -> LogisticModel:
    """Fit weighted logistic regression with balanced class weights.

    Each class gets weight ``n / (2 * n_class)``. Features are standardized
    with training statistics; constant features are dropped (weight fixed at
    0) with a warning. Training starts from zeros and is deterministic.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("features must be (n, d) with one label per row")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos + n_neg != y.size:
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training data must contain both classes")

    n = y.size
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = std == 0
    if np.any(constant):
        warnings.warn(
            f"dropping {int(constant.sum())} constant feature(s): {np.flatnonzero(constant).tolist()}",
            stacklevel=2,
        )
        std = np.where(constant, 1.0, std)
    z = (x - mean) / std
    z[:, constant] = 0.0

    sample_w = np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))
    total_w = sample_w.sum()
    w = np.zeros(x.shape[1])
    b = 0.0
    for _ in range(epochs):
        p = expit(z @ w + b)
        resid = sample_w * (p - y)
        grad_w = z.T @ resid / total_w + l2 * w
        grad_b = resid.sum() / total_w
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b
    w[constant] = 0.0
    return LogisticModel(weights=w, bias=float(b), mean=mean, std=std)


def f1_score(labels, scores, threshold: float = 0.5) -> float:
    """F1 of ``score >= threshold`` against ``labels``; 0 when undefined."""
    y = np.asarray(labels).ravel().astype(int)
    s = np.asarray(scores, dtype=float).ravel()
    if y.size != s.size:
        raise ValueError(f"length mismatch: {y.size} labels, {s.size} scores")
    if y.size == 0:
        raise ValueError("empty input")
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    if tp == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def _vec(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_model(model: LogisticModel, path: str | Path) -> None:
    lines = [
        f"format_version = {MODEL_FORMAT_VERSION}",
        f"n_features = {model.n_features}",
        f"bias = {model.bias!r}",
        f"weights = {_vec(model.weights)}",
        f"mean = {_vec(model.mean)}",
        f"std = {_vec(model.std)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LogisticModel:
    record = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            record[key.strip()] = value.strip()
    version = int(record.get("format_version", -1))
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    vec = lambda key: np.array([float(v) for v in record[key].split()], dtype=float)  # noqa: E731
    model = LogisticModel(vec("weights"), float(record["bias"]), vec("mean"), vec("std"))
    if model.n_features != int(record["n_features"]):
        raise ValueError("n_features does not match vector lengths")
    return model
