"""Layer primitives with hand-written backward passes.

All functions are dtype-preserving: float32 inputs stay float32, float64
inputs stay float64 (the gradient check relies on the latter).
"""

from __future__ import annotations

import numpy as np

from siren.errors import SirenError

# Self-normalizing constants (Klambauer et al., 2017), full double precision.
SELU_ALPHA = 1.6732632423543772848170429916717
SELU_SCALE = 1.0507009873554804934193349852946

BN_EPSILON = 1e-3
BN_MOMENTUM = 0.99


def selu(x):
    x = np.asarray(x)
    neg = SELU_ALPHA * np.expm1(np.minimum(x, 0))
    return (SELU_SCALE * np.where(x >= 0, x, neg)).astype(x.dtype, copy=False)


def selu_grad(x):
    x = np.asarray(x)
    neg = SELU_ALPHA * np.exp(np.minimum(x, 0))
    return (SELU_SCALE * np.where(x >= 0, 1.0, neg)).astype(x.dtype, copy=False)


def dense_forward(W: np.ndarray, b: np.ndarray, X: np.ndarray) -> np.ndarray:
    return X @ W + b


def dense_backward(W: np.ndarray, X: np.ndarray, dY: np.ndarray):
    """Return ``(dX, dW, db)`` for ``Y = X @ W + b``."""
    return dY @ W.T, X.T @ dY, dY.sum(axis=0)


def dropout_forward(X: np.ndarray, rate: float, training: bool, rng: np.random.Generator | None = None):
    """Inverted dropout; returns ``(Y, mask)`` where mask is None in inference mode."""
    if not 0.0 < rate < 1.0:
        raise ValueError(f"dropout rate must be in (0, 1), got {rate}")
    if not training:
        return X, None
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    keep = rng.random(X.shape, dtype=np.float64) >= rate
    mask = keep.astype(X.dtype) / X.dtype.type(1.0 - rate)
    return X * mask, mask


def dropout_backward(dY: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    return dY if mask is None else dY * mask


def batchnorm_forward(X, gamma, beta, running_mean, running_var, training: bool,
                      eps: float = BN_EPSILON, momentum: float = BN_MOMENTUM):
    """Normalize per feature.

    Training mode uses batch statistics (population variance) and returns
    updated running statistics; inference mode uses the running ones.
    Returns ``(Y, cache, new_running_mean, new_running_var)``.
    """
    if training:
        if X.shape[0] < 2:
            raise SirenError("batch normalization needs a batch of at least 2 rows in training mode")
        mu = X.mean(axis=0)
        var = X.var(axis=0)
        new_mean = momentum * running_mean + (1 - momentum) * mu
        new_var = momentum * running_var + (1 - momentum) * var
    else:
        mu, var = running_mean, running_var
        new_mean, new_var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (X - mu) * inv_std
    Y = gamma * xhat + beta
    cache = (xhat, inv_std.astype(X.dtype, copy=False), gamma, training)
    return Y.astype(X.dtype, copy=False), cache, new_mean.astype(running_mean.dtype), new_var.astype(running_var.dtype)


def batchnorm_backward(dY: np.ndarray, cache):
    """Return ``(dX, dgamma, dbeta)``."""
    xhat, inv_std, gamma, training = cache
    dgamma = (dY * xhat).sum(axis=0)
    dbeta = dY.sum(axis=0)
    dxhat = dY * gamma
    if not training:
        return dxhat * inv_std, dgamma, dbeta
    n = dY.shape[0]
    dX = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dX, dgamma, dbeta


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent(logits: np.ndarray, onehot: np.ndarray):
    """Mean categorical cross-entropy and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - logsumexp
    n = logits.shape[0]
    loss = float(-(onehot * log_p).sum() / n)
    grad = (np.exp(log_p) - onehot) / n
    return loss, grad.astype(logits.dtype, copy=False)


def lecun_init(fan_in: int, fan_out: int, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    """Weights drawn from N(0, 1/fan_in)."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError("layer dimensions must be positive")
    return (rng.standard_normal((fan_in, fan_out)) * np.sqrt(1.0 / fan_in)).astype(dtype)
