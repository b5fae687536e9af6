"""Beta-distributed synthetic impostor vectors around a user's feature means.

Each feature column gets its own beta distribution: shape alpha depends on
how far the genuine column mean sits from 0.5 (alpha = |0.5 - mu| + 0.5, so
alpha in [0.5, 1]), the second shape is fixed at 0.5, and columns whose mean
exceeds 0.5 draw the mirrored variate 1 - X.  The effect is noise massed on
the far side of the unit interval from the genuine data, which is exactly
where a model hardened against random probes needs impostor examples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BETA_SHAPE = 0.5


@dataclass(frozen=True)
class BetaNoiseParams:
    """Per-column generator state: genuine means and derived alpha shapes."""

    mu: np.ndarray
    alpha: np.ndarray
    beta_shape: float = BETA_SHAPE

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        if self.mu.shape != self.alpha.shape:
            raise ValueError("mu and alpha must have the same length")
        expected = np.abs(0.5 - self.mu) + 0.5
        if not np.allclose(self.alpha, expected, atol=1e-12):
            raise ValueError("alpha must equal |0.5 - mu| + 0.5 per column")

    @property
    def n_features(self) -> int:
        return self.mu.shape[0]


def fit_beta_params(genuine_rows: np.ndarray) -> BetaNoiseParams:
    """Column means of normalized genuine training rows -> generator params."""
    rows = np.asarray(genuine_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("need a non-empty 2-D matrix of genuine rows")
    if not np.all(np.isfinite(rows)):
        raise ValueError("genuine rows contain non-finite values")
    if rows.min() < -1e-9 or rows.max() > 1.0 + 1e-9:
        raise ValueError("genuine rows must be normalized into [0, 1]")
    mu = rows.mean(axis=0)
    alpha = np.abs(0.5 - mu) + 0.5
    return BetaNoiseParams(mu=mu, alpha=alpha)


def sample_beta_noise(params: BetaNoiseParams, count: int, seed: int) -> np.ndarray:
    """Draw `count` synthetic impostor rows in [0,1]^n, deterministic per seed.

    Beta variates are realized as G1/(G1+G2) from two gamma draws, which
    stays correct for the sub-unit shape parameters this generator uses.
    Columns with mu > 0.5 get the reflected variate 1 - X.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    n = params.n_features
    g1 = rng.gamma(np.broadcast_to(params.alpha, (count, n)), 1.0)
    g2 = rng.gamma(params.beta_shape, 1.0, size=(count, n))
    denominator = g1 + g2
    # Both draws underflowing to zero together has vanishing probability, but
    # the sampler must stay finite even then.
    degenerate = denominator == 0.0
    denominator[degenerate] = 1.0
    x = g1 / denominator
    x[degenerate] = 0.5
    flip = params.mu > 0.5
    x[:, flip] = 1.0 - x[:, flip]
    return x
