"""Mini-batch training loop with NAdam and early stopping on validation loss."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from siren.errors import TrainingDiverged
from siren.nn.metrics import evaluate
from siren.nn.model import ModelParams, fit_standardization, init_params, loss_and_grads, standardize
from siren.nn.nadam import NAdam

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 512
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.batch_size < 2 or self.max_epochs < 1 or self.patience < 0:
            raise ValueError("batch_size >= 2, max_epochs >= 1, patience >= 0 required")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_recall: float
    val_loss: float
    val_recall: float


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochRecord]
    best_epoch: int


def train(X_train: np.ndarray, Y_train: np.ndarray, X_val: np.ndarray, Y_val: np.ndarray,
          config: TrainConfig = TrainConfig(), params: ModelParams | None = None) -> TrainResult:
    """Train on raw features; standardization statistics come from ``X_train`` only.

    After every epoch the model is scored in inference mode on both splits.
    The returned parameters are those of the epoch with the lowest
    validation loss; training stops once ``patience`` further epochs pass
    without improvement.
    """
    rng = np.random.default_rng(config.seed)
    if params is None:
        params = init_params(rng)
    params = params.copy()
    fit_standardization(params, X_train)
    Xs = standardize(params, X_train)
    Ys = Y_train.astype(params.dtype)
    opt = NAdam(config.learning_rate, config.beta1, config.beta2, config.epsilon)

    n = len(Xs)
    history: list[EpochRecord] = []
    best_loss, best_epoch, best = math.inf, 0, params.copy()
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            if len(idx) < 2:
                continue  # batchnorm cannot train on a single row
            loss, grads, running = loss_and_grads(params, Xs[idx], Ys[idx], training=True, rng=rng)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss {loss} at epoch {epoch}, batch starting {start}")
            opt.step(params.tensors, grads)
            for k, v in running.items():
                params.tensors[k][...] = v

        tr = evaluate(params, X_train, Y_train)
        va = evaluate(params, X_val, Y_val)
        if not (math.isfinite(tr.loss) and math.isfinite(va.loss)):
            raise TrainingDiverged(f"non-finite evaluation loss at epoch {epoch}")
        rec = EpochRecord(epoch, tr.loss, tr.recall_weighted, va.loss, va.recall_weighted)
        history.append(rec)
        logger.info("epoch %d: loss %.4f recall %.4f | val loss %.4f recall %.4f",
                    epoch, rec.train_loss, rec.train_recall, rec.val_loss, rec.val_recall)
        if va.loss < best_loss:
            best_loss, best_epoch, best = va.loss, epoch, params.copy()
        if epoch - best_epoch >= config.patience:
            break
    return TrainResult(best, history, best_epoch)


def write_history(history: list[EpochRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(EpochRecord.__dataclass_fields__))
        writer.writeheader()
        for rec in history:
            writer.writerow(asdict(rec))


def read_history(path: str | Path) -> list[EpochRecord]:
    with Path(path).open(newline="") as fh:
        return [EpochRecord(int(r["epoch"]), float(r["train_loss"]), float(r["train_recall"]),
                            float(r["val_loss"]), float(r["val_recall"])) for r in csv.DictReader(fh)]
