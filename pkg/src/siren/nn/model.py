"""Sequential dense network: layer specs, parameters, forward/backward, prediction."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from siren.features import N_FEATURES
from siren.nn import ops

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # dense | dropout | batchnorm | softmax
    input_dim: int
    output_dim: int
    activation: str = "none"  # selu | none
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dense", "dropout", "batchnorm", "softmax"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "dropout" and not 0.0 < self.rate < 1.0:
            raise ValueError("dropout rate must be in (0, 1)")
        if self.kind != "dense" and self.input_dim != self.output_dim:
            raise ValueError(f"{self.kind} layer cannot change width")

    def describe(self) -> str:
        if self.kind == "dense":
            return f"dense:{self.input_dim}:{self.output_dim}:{self.activation}"
        if self.kind == "dropout":
            return f"dropout:{self.input_dim}:{self.rate!r}"
        return f"{self.kind}:{self.input_dim}"

    @classmethod
    def parse(cls, text: str) -> "LayerSpec":
        kind, *rest = text.split(":")
        if kind == "dense":
            return cls("dense", int(rest[0]), int(rest[1]), rest[2])
        if kind == "dropout":
            return cls("dropout", int(rest[0]), int(rest[0]), rate=float(rest[1]))
        return cls(kind, int(rest[0]), int(rest[0]))


def default_architecture(dropout: float = 0.2) -> tuple[LayerSpec, ...]:
    return (
        LayerSpec("dense", N_FEATURES, 300, "selu"),
        LayerSpec("dropout", 300, 300, rate=dropout),
        LayerSpec("dense", 300, 200, "selu"),
        LayerSpec("dropout", 200, 200, rate=dropout),
        LayerSpec("dense", 200, 100, "selu"),
        LayerSpec("batchnorm", 100, 100),
        LayerSpec("dense", 100, 4),
        LayerSpec("softmax", 4, 4),
    )


def check_chain(layers) -> None:
    for a, b in zip(layers, layers[1:]):
        if a.output_dim != b.input_dim:
            raise ValueError(f"layer widths do not chain: {a.describe()} -> {b.describe()}")


@dataclass
class ModelParams:
    """Named tensors plus the input standardization vectors.

    Tensor names: ``dense{i}.W``, ``dense{i}.b``, ``bn{j}.gamma``,
    ``bn{j}.beta``, ``bn{j}.running_mean``, ``bn{j}.running_var``.
    """

    layers: tuple[LayerSpec, ...]
    tensors: dict[str, np.ndarray]
    feature_mean: np.ndarray
    feature_std: np.ndarray

    def __post_init__(self):
        check_chain(self.layers)

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    @property
    def trainable(self) -> list[str]:
        return [k for k in self.tensors if not k.endswith(("running_mean", "running_var"))]

    def copy(self) -> "ModelParams":
        return replace(self, tensors={k: v.copy() for k, v in self.tensors.items()},
                       feature_mean=self.feature_mean.copy(), feature_std=self.feature_std.copy())

    def astype(self, dtype) -> "ModelParams":
        return replace(self, tensors={k: v.astype(dtype) for k, v in self.tensors.items()},
                       feature_mean=self.feature_mean.astype(dtype), feature_std=self.feature_std.astype(dtype))

    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=8)
        for name, arr in self.tensors.items():
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        h.update(np.ascontiguousarray(self.feature_mean, dtype="<f4").tobytes())
        h.update(np.ascontiguousarray(self.feature_std, dtype="<f4").tobytes())
        return h.hexdigest()


def init_params(rng: np.random.Generator, layers=None, dtype=np.float32) -> ModelParams:
    layers = tuple(layers or default_architecture())
    check_chain(layers)
    tensors: dict[str, np.ndarray] = {}
    d = bn = 0
    for spec in layers:
        if spec.kind == "dense":
            tensors[f"dense{d}.W"] = ops.lecun_init(spec.input_dim, spec.output_dim, rng, dtype)
            tensors[f"dense{d}.b"] = np.zeros(spec.output_dim, dtype=dtype)
            d += 1
        elif spec.kind == "batchnorm":
            tensors[f"bn{bn}.gamma"] = np.ones(spec.input_dim, dtype=dtype)
            tensors[f"bn{bn}.beta"] = np.zeros(spec.input_dim, dtype=dtype)
            tensors[f"bn{bn}.running_mean"] = np.zeros(spec.input_dim, dtype=dtype)
            tensors[f"bn{bn}.running_var"] = np.ones(spec.input_dim, dtype=dtype)
            bn += 1
    n_in = layers[0].input_dim
    return ModelParams(layers, tensors, np.zeros(n_in, dtype=dtype), np.ones(n_in, dtype=dtype))


def fit_standardization(params: ModelParams, X: np.ndarray) -> None:
    """Set the z-score vectors from (training) data, flooring the std."""
    params.feature_mean = X.mean(axis=0).astype(params.dtype)
    params.feature_std = np.maximum(X.std(axis=0), STD_FLOOR).astype(params.dtype)


def standardize(params: ModelParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=params.dtype)
    return (X - params.feature_mean) / params.feature_std


class ForwardResult(NamedTuple):
    logits: np.ndarray
    caches: list
    running: dict[str, np.ndarray]


def forward(params: ModelParams, X: np.ndarray, training: bool = False,
            rng: np.random.Generator | None = None, dropout: bool = True) -> ForwardResult:
    """Run the network on already-standardized input, stopping before softmax.

    ``running`` holds batchnorm running statistics updated by a training
    pass; the caller decides whether to commit them.
    """
    t = params.tensors
    h = np.asarray(X, dtype=params.dtype)
    caches: list = []
    running: dict[str, np.ndarray] = {}
    d = bn = 0
    for spec in params.layers:
        if spec.kind == "dense":
            W, b = t[f"dense{d}.W"], t[f"dense{d}.b"]
            z = ops.dense_forward(W, b, h)
            caches.append(("dense", d, h, z, spec.activation))
            h = ops.selu(z) if spec.activation == "selu" else z
            d += 1
        elif spec.kind == "dropout":
            h, mask = ops.dropout_forward(h, spec.rate, training and dropout, rng)
            caches.append(("dropout", mask))
        elif spec.kind == "batchnorm":
            p = f"bn{bn}."
            h, cache, rm, rv = ops.batchnorm_forward(
                h, t[p + "gamma"], t[p + "beta"], t[p + "running_mean"], t[p + "running_var"], training)
            running[p + "running_mean"], running[p + "running_var"] = rm, rv
            caches.append(("batchnorm", bn, cache))
            bn += 1
        # softmax is folded into the loss / predict_proba
    return ForwardResult(h, caches, running)


def backward(params: ModelParams, caches: list, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    t = params.tensors
    grads: dict[str, np.ndarray] = {}
    g = dlogits
    for cache in reversed(caches):
        kind = cache[0]
        if kind == "dense":
            _, d, x_in, z, act = cache
            if act == "selu":
                g = g * ops.selu_grad(z)
            g, grads[f"dense{d}.W"], grads[f"dense{d}.b"] = ops.dense_backward(t[f"dense{d}.W"], x_in, g)
        elif kind == "dropout":
            g = ops.dropout_backward(g, cache[1])
        else:
            _, bn, bcache = cache
            g, grads[f"bn{bn}.gamma"], grads[f"bn{bn}.beta"] = ops.batchnorm_backward(g, bcache)
    return grads


def loss_and_grads(params: ModelParams, X: np.ndarray, Y: np.ndarray, training: bool = True,
                   rng: np.random.Generator | None = None, dropout: bool = True):
    res = forward(params, X, training, rng, dropout)
    loss, dlogits = ops.softmax_xent(res.logits, Y.astype(params.dtype, copy=False))
    return loss, backward(params, res.caches, dlogits), res.running


def predict_proba(params: ModelParams, X_raw: np.ndarray, batch_size: int = 8192) -> np.ndarray:
    """Class probabilities for raw (unstandardized) feature rows, inference mode."""
    X = np.atleast_2d(np.asarray(X_raw))
    if X.shape[1] != params.layers[0].input_dim:
        raise ValueError(f"expected {params.layers[0].input_dim} features, got {X.shape[1]}")
    out = [ops.softmax(forward(params, standardize(params, X[i:i + batch_size])).logits)
           for i in range(0, len(X), batch_size)]
    return np.vstack(out) if out else np.zeros((0, params.layers[-1].output_dim), dtype=params.dtype)


@dataclass(frozen=True)
class Prediction:
    probabilities: np.ndarray
    label: int


def predict(params: ModelParams, feature_vector: np.ndarray) -> Prediction:
    """Probabilities and argmax class for one 68-value vector (ties -> lowest index)."""
    v = np.asarray(feature_vector)
    if v.ndim != 1 or v.shape[0] != params.layers[0].input_dim:
        raise ValueError(f"expected a vector of length {params.layers[0].input_dim}")
    p = predict_proba(params, v[None, :])[0]
    return Prediction(p, int(np.argmax(p)))
