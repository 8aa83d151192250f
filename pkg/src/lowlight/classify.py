"""Softmax classifier head trained on precomputed CNN feature vectors.

The network body is not part of this package: features arrive as rows of a
CSV file (2048 values, then the class label, then the enhancement condition
the image went through). :class:`SoftmaxClassifier` is a single fully
connected layer followed by softmax, trained by plain mini-batch gradient
descent on the mean cross-entropy.
"""
import csv
import json
import os
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import FileFormatError, InvalidDatasetError, InvalidInputError
from .jsonio import dump_json

N_FEATURES = 2048
N_CLASSES = 5
CONDITIONS = ("original", "he", "ahe", "clahe")


def softmax(logits):
    """Row-wise softmax with max subtraction; accepts 1-D or 2-D input."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(W, b, X, y, l2=0.0):
    """Mean cross-entropy of the linear softmax model plus ``l2 / 2 * ||W||^2``."""
    logp = log_softmax(X @ W + b)
    loss = -logp[np.arange(len(y)), y].mean()
    if l2:
        loss += 0.5 * l2 * float((W * W).sum())
    return float(loss)


def cross_entropy_grad(W, b, X, y, l2=0.0):
    """Analytic gradient of :func:`cross_entropy` with respect to ``(W, b)``."""
    P = softmax(X @ W + b)
    P[np.arange(len(y)), y] -= 1.0
    P /= len(y)
    gW = X.T @ P
    if l2:
        gW = gW + l2 * W
    return gW, P.sum(axis=0)


def gradient_check(X, y, W, b, n_params=50, step=1e-5, l2=0.0, seed=0):
    """Largest relative error between analytic and central-difference gradients.

    ``n_params`` entries are drawn at random from ``W`` and ``b`` together.
    The relative error of one entry is ``|a - n| / max(|a|, |n|)``, taken as
    0 when both vanish.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    W = np.array(W, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    if len(y) == 0:
        raise InvalidInputError("gradient check needs at least one record")
    gW, gb = cross_entropy_grad(W, b, X, y, l2)
    rng = np.random.default_rng(seed)
    n_total = W.size + b.size
    picks = rng.choice(n_total, size=min(n_params, n_total), replace=False)
    worst = 0.0
    for idx in picks:
        target, flat_idx = (W, idx) if idx < W.size else (b, idx - W.size)
        analytic = (gW if target is W else gb).flat[flat_idx]
        original = target.flat[flat_idx]
        target.flat[flat_idx] = original + step
        plus = cross_entropy(W, b, X, y, l2)
        target.flat[flat_idx] = original - step
        minus = cross_entropy(W, b, X, y, l2)
        target.flat[flat_idx] = original
        numeric = (plus - minus) / (2 * step)
        scale = max(abs(analytic), abs(numeric))
        if scale > 0:
            worst = max(worst, abs(analytic - numeric) / scale)
    return worst


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 32
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0 or self.epochs < 1 or self.batch_size < 1 or self.l2 < 0:
            raise InvalidInputError(f"invalid training configuration: {self}")


@dataclass(frozen=True)
class FeatureRecord:
    features: np.ndarray
    label: int
    condition: str = "original"


class SoftmaxClassifier(ClassifierMixin, BaseEstimator):
    """Fully connected layer + softmax trained by mini-batch gradient descent.

    Parameters
    ----------
    n_classes : int, default=5
        Labels must be integers in ``[0, n_classes)`` and every class must
        appear in the training data.
    learning_rate : float, default=0.01
    epochs : int, default=100
    batch_size : int, default=32
    l2 : float, default=0.0
        Weight decay coefficient on ``coef_`` (not on the bias).
    seed : int, default=0
        Controls weight initialization and per-epoch shuffling.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features, n_classes)
    intercept_ : ndarray of shape (n_classes,)
    initial_coef_ : ndarray
        Weights before the first update, kept for inspection.
    loss_curve_ : list of float
        Full-data loss after each epoch.
    """

    def __init__(self, n_classes=N_CLASSES, learning_rate=0.01, epochs=100, batch_size=32, l2=0.0, seed=0):
        self.n_classes = n_classes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2 = l2
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        TrainConfig(self.learning_rate, self.epochs, self.batch_size, self.l2, self.seed)
        y = self._check_labels(y)
        missing = sorted(set(range(self.n_classes)) - set(np.unique(y).tolist()))
        if missing:
            raise InvalidDatasetError(f"classes without records: {missing}")
        n, d = X.shape
        rng = np.random.default_rng(self.seed)
        W = rng.uniform(-0.01, 0.01, size=(d, self.n_classes))
        b = np.zeros(self.n_classes)
        self.initial_coef_ = W.copy()
        losses = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start : start + self.batch_size]
                gW, gb = cross_entropy_grad(W, b, X[batch], y[batch], self.l2)
                W -= self.learning_rate * gW
                b -= self.learning_rate * gb
            losses.append(cross_entropy(W, b, X, y, self.l2))
        self.coef_ = W
        self.intercept_ = b
        self.classes_ = np.arange(self.n_classes)
        self.n_features_in_ = d
        self.loss_curve_ = losses
        return self

    def _check_labels(self, y):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise InvalidDatasetError("labels must be integers")
        y = np.asarray(y).astype(np.intp)
        if y.min() < 0 or y.max() >= self.n_classes:
            raise InvalidDatasetError(f"labels must lie in [0, {self.n_classes})")
        return y

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.coef_.shape[0]:
            raise InvalidInputError(f"expected {self.coef_.shape[0]} features, got {X.shape[1]}")
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def to_dict(self):
        check_is_fitted(self, "coef_")
        return {"weights": self.coef_.tolist(), "bias": self.intercept_.tolist()}

    @classmethod
    def from_dict(cls, d, **params):
        W = np.asarray(d["weights"], dtype=np.float64)
        b = np.asarray(d["bias"], dtype=np.float64)
        if W.ndim != 2 or b.shape != (W.shape[1],):
            raise InvalidInputError("model weights must be (n_features, n_classes) with matching bias")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise InvalidInputError("model parameters must be finite")
        model = cls(n_classes=W.shape[1], **params)
        model.coef_ = W
        model.intercept_ = b
        model.classes_ = np.arange(W.shape[1])
        model.n_features_in_ = W.shape[0]
        return model


def _records_to_arrays(records):
    X = np.array([r.features for r in records], dtype=np.float64)
    y = np.array([r.label for r in records], dtype=np.intp)
    cond = np.array([r.condition for r in records], dtype=object)
    return X, y, cond


def train(records, config=None, n_classes=N_CLASSES):
    """Fit a :class:`SoftmaxClassifier` on feature records.

    Returns the fitted model and its per-epoch loss trace.
    """
    config = config or TrainConfig()
    if len(records) == 0:
        raise InvalidDatasetError("no training records")
    X, y, _ = _records_to_arrays(records)
    model = SoftmaxClassifier(
        n_classes=n_classes,
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        l2=config.l2,
        seed=config.seed,
    ).fit(X, y)
    return model, list(model.loss_curve_)


def evaluate(model, X, y, conditions=None):
    """Accuracy per condition tag, plus ``"all"``.

    Conditions are listed in the canonical order (original, he, ahe, clahe)
    first, then any others alphabetically.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(y) == 0:
        raise InvalidInputError("evaluate needs at least one record")
    conditions = np.asarray(["all"] * len(y) if conditions is None else conditions, dtype=object)
    correct = model.predict(X) == y
    present = set(conditions.tolist())
    order = [c for c in CONDITIONS if c in present] + sorted(present - set(CONDITIONS))
    table = OrderedDict()
    for cond in order:
        mask = conditions == cond
        table[cond] = float(correct[mask].mean())
    table["all"] = float(correct.mean())
    return table


def evaluate_records(model, records):
    X, y, cond = _records_to_arrays(records)
    return evaluate(model, X, y, cond)


def read_features_csv(path, n_features=N_FEATURES):
    """Read ``features..., label, condition`` rows into ``(X, y, conditions)``.

    Raises
    ------
    FileFormatError
        On a row with the wrong number of fields or non-finite features.
    """
    X, y, cond = [], [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != n_features + 2:
                raise FileFormatError(
                    f"{path}:{lineno}: expected {n_features + 2} fields, got {len(row)}"
                )
            try:
                feats = np.array(row[:n_features], dtype=np.float64)
                label = int(row[n_features])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from None
            if not np.all(np.isfinite(feats)):
                raise FileFormatError(f"{path}:{lineno}: non-finite feature value")
            X.append(feats)
            y.append(label)
            cond.append(row[n_features + 1].strip())
    if not X:
        raise FileFormatError(f"{path}: no records")
    return np.vstack(X), np.array(y, dtype=np.intp), np.array(cond, dtype=object)


def write_features_csv(X, y, conditions, path):
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        for feats, label, cond in zip(X, y, conditions):
            writer.writerow([f"{v:.9g}" for v in feats] + [int(label), cond])
    os.replace(tmp, path)


def make_feature_clusters(
    n_per_class=500,
    n_classes=N_CLASSES,
    n_features=N_FEATURES,
    conditions=CONDITIONS,
    separation=1.0,
    seed=0,
):
    """Synthetic CNN codes: one Gaussian cluster per class, per condition.

    ``separation`` scales the distance between class means and may be a
    mapping from condition to scale, so conditions can differ in difficulty.
    Returns ``(X, y, conditions)`` with ``n_per_class`` rows per class and
    condition.
    """
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(n_classes, n_features)) / np.sqrt(n_features)
    X, y, cond = [], [], []
    for c in conditions:
        scale = separation.get(c, 1.0) if isinstance(separation, dict) else separation
        for k in range(n_classes):
            noise = rng.normal(scale=1.0 / np.sqrt(n_features), size=(n_per_class, n_features))
            X.append(np.abs(scale * 3.0 * means[k] + noise))
            y.extend([k] * n_per_class)
            cond.extend([c] * n_per_class)
    return np.vstack(X), np.array(y, dtype=np.intp), np.array(cond, dtype=object)


def save_model(model, path):
    """Write ``{"weights": [[...]], "bias": [...]}`` with 9 significant digits."""
    dump_json(model.to_dict(), path)


def load_model(path):
    with open(path) as fh:
        return SoftmaxClassifier.from_dict(json.load(fh))
