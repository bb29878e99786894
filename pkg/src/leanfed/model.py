"""Softmax regression trained with plain mini-batch SGD.

The arithmetic lives in one of two interchangeable kernel modules: the
compiled ``_kernels`` extension when it was built, else ``_kernels_py``.
Set ``LEANFED_BACKEND=python`` to force the numpy path.
"""

from __future__ import annotations

import importlib
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from .errors import ConfigError, NumericError


def load_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython', 'python' or None = best)."""
    name = name or os.environ.get("LEANFED_BACKEND", "auto")
    if name == "python":
        return _kernels_py
    try:
        return importlib.import_module("leanfed._kernels")
    except ImportError:
        if name == "cython":
            raise
        return _kernels_py


kernels = load_backend()
BACKEND = "python" if kernels is _kernels_py else "cython"


@dataclass(frozen=True)
class ModelParams:
    weights: np.ndarray  # C x (d+1), bias in the last column

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def copy(self) -> "ModelParams":
        return ModelParams(self.weights.copy())


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    batch_size: int = 64
    local_epochs: int = 5
    weight_decay: float = 1e-4

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.local_epochs < 1:
            raise ConfigError(f"local_epochs must be >= 1, got {self.local_epochs}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")


def init_params(num_classes: int, dim: int) -> ModelParams:
    if num_classes < 2 or dim < 1:
        raise ConfigError(f"need num_classes >= 2 and dim >= 1, got ({num_classes}, {dim})")
    return ModelParams(np.zeros((num_classes, dim + 1)))


def loss_and_grad(params: ModelParams, features, labels, weight_decay: float = 0.0,
                  backend=None):
    """Mean cross-entropy plus ``weight_decay/2 * ||W||^2`` and its gradient."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("empty batch")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite input features")
    if y.min() < 0 or y.max() >= params.num_classes:
        raise ValueError("label out of range")
    return (backend or kernels).loss_and_grad(params.weights, X, y, weight_decay)


def sgd_epoch(params: ModelParams, features, labels, config: TrainConfig,
              rng: np.random.Generator, backend=None) -> ModelParams:
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("empty shard")
    order = rng.permutation(len(y)).astype(np.int64)
    W = params.weights.copy()
    (backend or kernels).sgd_epoch(W, X, y, order, config.batch_size,
                                   config.learning_rate, config.weight_decay)
    return ModelParams(W)


def predict(params: ModelParams, features, backend=None) -> np.ndarray:
    X = np.ascontiguousarray(features, dtype=np.float64)
    return (backend or kernels).predict(params.weights, X)


def evaluate(params: ModelParams, test, backend=None) -> float:
    """Fraction of rows whose argmax class (lowest index on ties) is correct."""
    if test.n == 0:
        raise ValueError("empty test set")
    hits = int(np.count_nonzero(predict(params, test.features, backend) == test.labels))
    return hits / test.n
