from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from siren.nn import ops
from siren.nn.model import ModelParams, forward, standardize


@dataclass(frozen=True)
class Metrics:
    loss: float
    accuracy: float
    precision: np.ndarray  # per class
    recall: np.ndarray  # per class
    precision_macro: float
    precision_weighted: float
    recall_macro: float
    recall_weighted: float
    confusion: np.ndarray  # rows = true class, columns = predicted

    def as_dict(self) -> dict:
        return {
            "loss": self.loss,
            "accuracy": self.accuracy,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "precision_macro": self.precision_macro,
            "precision_weighted": self.precision_weighted,
            "recall_macro": self.recall_macro,
            "recall_weighted": self.recall_weighted,
            "confusion": self.confusion.tolist(),
        }


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def classification_metrics(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int, loss: float = float("nan")) -> Metrics:
    """Precision/recall from the confusion matrix; classes never predicted get precision 0."""
    cm = confusion_matrix(np.asarray(y_true), np.asarray(y_pred), n_classes)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
    total = cm.sum()
    weights = support / total if total else np.zeros(n_classes)
    return Metrics(
        loss=float(loss),
        accuracy=float(tp.sum() / total) if total else 0.0,
        precision=precision,
        recall=recall,
        precision_macro=float(precision.mean()),
        precision_weighted=float((precision * weights).sum()),
        recall_macro=float(recall.mean()),
        recall_weighted=float((recall * weights).sum()),
        confusion=cm,
    )


def evaluate(params: ModelParams, X: np.ndarray, Y: np.ndarray, batch_size: int = 8192) -> Metrics:
    """Inference-mode loss and classification metrics on raw features ``X`` with one-hot ``Y``."""
    n = len(X)
    loss_sum = 0.0
    preds = []
    for i in range(0, n, batch_size):
        logits = forward(params, standardize(params, X[i:i + batch_size])).logits
        loss, _ = ops.softmax_xent(logits.astype(np.float64), Y[i:i + batch_size])
        loss_sum += loss * len(logits)
        preds.append(np.argmax(logits, axis=1))
    y_pred = np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)
    return classification_metrics(np.argmax(Y, axis=1), y_pred, Y.shape[1], loss_sum / max(n, 1))
