"""Pure numpy kernels for softmax regression.

Same contracts as the compiled ``_kernels`` module. ``W`` is a C x (d+1)
float64 array with the bias in the last column.
"""

import numpy as np


def _softmax_rows(logits):
    logits = logits - logits.max(axis=1, keepdims=True)
    np.exp(logits, out=logits)
    logits /= logits.sum(axis=1, keepdims=True)
    return logits


def loss_and_grad(W, X, y, weight_decay):
    m, d = X.shape
    C = W.shape[0]
    logits = X @ W[:, :d].T + W[:, d]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(m)
    loss = float(np.mean(log_norm - shifted[rows, y])) + 0.5 * weight_decay * float(np.sum(W * W))

    P = _softmax_rows(logits)
    P[rows, y] -= 1.0
    grad = np.empty((C, d + 1))
    grad[:, :d] = P.T @ X
    grad[:, d] = P.sum(axis=0)
    grad /= m
    grad += weight_decay * W
    return loss, grad


def sgd_epoch(W, X, y, order, batch_size, lr, weight_decay):
    """One pass over ``X[order]`` in mini-batches, updating ``W`` in place."""
    n = len(order)
    d = X.shape[1]
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        Xb = X[idx]
        P = _softmax_rows(Xb @ W[:, :d].T + W[:, d])
        P[np.arange(len(idx)), y[idx]] -= 1.0
        P /= len(idx)
        step = weight_decay * W
        step[:, :d] += P.T @ Xb
        step[:, d] += P.sum(axis=0)
        W -= lr * step


def predict(W, X):
    d = X.shape[1]
    # argmax returns the first maximum, i.e. the lowest class index on ties
    return np.argmax(X @ W[:, :d].T + W[:, d], axis=1)
