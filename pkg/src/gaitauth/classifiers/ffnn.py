"""Feed-forward binary classifier: two rectified hidden layers, sigmoid out.

Trained with minibatch Adam on binary cross-entropy via the package's
autodiff engine; scoring runs a plain numpy forward pass.
"""

from __future__ import annotations

import numpy as np

from .. import nn
from ..autodiff import Tensor, grad, log, relu, sigmoid, tsum

_EPS = 1e-12


class FfnnState:
    """Fitted parameters: weights/biases per layer plus the loss trace."""

    def __init__(self, weights, biases, loss_trace=None):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.loss_trace = loss_trace

    def scores(self, x: np.ndarray) -> np.ndarray:
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        z = h @ self.weights[-1] + self.biases[-1]
        return (0.5 * (np.tanh(0.5 * z) + 1.0)).ravel()


def _forward(layers, x: Tensor) -> Tensor:
    h = x
    for layer in layers[:-1]:
        h = relu(layer(h))
    return sigmoid(layers[-1](h))


def bce_loss(p: Tensor, y: Tensor) -> Tensor:
    """Mean binary cross-entropy with clamped logs."""
    n = float(p.data.shape[0])
    return (
        tsum(y * log(p + _EPS) + (1.0 - y) * log(1.0 - p + _EPS)) * (-1.0 / n)
    )


def fit_ffnn(x: np.ndarray, y01: np.ndarray, hidden=(64, 64), lr: float = 1e-3,
             epochs: int = 100, batch: int = 32, seed: int = 0) -> FfnnState:
    rng = np.random.default_rng(seed)
    n, d = x.shape
    dims = [d, *hidden, 1]
    layers = [nn.Linear(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]
    params = [p for layer in layers for p in layer.parameters()]
    optimizer = nn.Adam(params, lr=lr)
    target = y01.reshape(-1, 1).astype(np.float64)
    batch = min(batch, n)
    loss_trace = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            p = _forward(layers, Tensor(x[idx]))
            loss = bce_loss(p, Tensor(target[idx]))
            grads = grad(loss, params)
            optimizer.step(grads)
            epoch_loss += float(loss.data) * len(idx)
        loss_trace.append(epoch_loss / n)
    return FfnnState(
        weights=[layer.weight.data for layer in layers],
        biases=[layer.bias.data for layer in layers],
        loss_trace=np.asarray(loss_trace),
    )
