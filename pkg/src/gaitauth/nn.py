"""Small neural-network building blocks on top of the autodiff engine.

Covers exactly what the package trains: fully connected layers, batch-stat
batch normalization, dropout, gumbel-softmax sampling, and an Adam optimizer
operating on raw parameter arrays.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, add, div, mul, softmax, sqrt


class Linear:
    """Affine map with uniform ±1/√fan_in initialization."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(in_dim)
        self.weight = Tensor(rng.uniform(-bound, bound, size=(in_dim, out_dim)))
        self.bias = Tensor(rng.uniform(-bound, bound, size=(out_dim,)))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias

    def parameters(self):
        return [self.weight, self.bias]


class BatchNorm1d:
    """Normalizes each column by the current batch's mean and variance.

    No running statistics: the generator that uses this layer always runs on
    full batches, sampling included, so batch statistics are the contract.
    """

    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = Tensor(np.ones(dim))
        self.beta = Tensor(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=0, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=0, keepdims=True)
        xhat = centered / sqrt(var + self.eps)
        return xhat * self.gamma + self.beta

    def parameters(self):
        return [self.gamma, self.beta]


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: zero out entries with probability `rate` and rescale."""
    if not training or rate <= 0.0:
        return x
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(mask))


def gumbel_softmax(logits: Tensor, tau: float, rng: np.random.Generator) -> Tensor:
    """Differentiable categorical relaxation: softmax((logits + gumbel)/tau)."""
    u = rng.random(logits.shape)
    gumbel = -np.log(-np.log(u + 1e-12) + 1e-12)
    return softmax(div(add(logits, Tensor(gumbel)), Tensor(float(tau))), axis=-1)


class Adam:
    """Adaptive-moment optimizer over a fixed list of parameter tensors."""

    def __init__(self, params, lr: float, betas=(0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads):
        """Apply one update; `grads` aligns with the parameter list."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            gd = g.data if isinstance(g, Tensor) else np.asarray(g)
            if self.weight_decay:
                gd = gd + self.weight_decay * p.data
            m *= b1
            m += (1.0 - b1) * gd
            v *= b2
            v += (1.0 - b2) * gd * gd
            m_hat = m / (1.0 - b1 ** self.t)
            v_hat = v / (1.0 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
