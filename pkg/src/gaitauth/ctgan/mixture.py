"""One-dimensional Gaussian-mixture fitting for mode-specific normalization.

Each continuous column gets its own mixture (up to 10 modes), fitted by
expectation-maximization with several seeded restarts; modes with weight
below 0.005 are pruned and the rest renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-6
PRUNE_WEIGHT = 0.005
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ColumnMixture:
    """Fitted modes of one continuous column."""

    means: np.ndarray
    stds: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("means", "stds", "weights"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.float64))
        if not (len(self.means) == len(self.stds) == len(self.weights)):
            raise ValueError("mixture parameter lengths disagree")
        if np.any(self.stds <= 0):
            raise ValueError("mixture stds must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise ValueError("mixture weights must be a distribution")

    @property
    def n_modes(self) -> int:
        return len(self.means)

    def posterior(self, values: np.ndarray) -> np.ndarray:
        """Mode responsibilities, one row per value."""
        values = np.asarray(values, dtype=np.float64).reshape(-1, 1)
        log_p = (
            np.log(self.weights)[None, :]
            - np.log(self.stds)[None, :]
            - 0.5 * _LOG_2PI
            - 0.5 * ((values - self.means[None, :]) / self.stds[None, :]) ** 2
        )
        log_p -= log_p.max(axis=1, keepdims=True)
        p = np.exp(log_p)
        return p / p.sum(axis=1, keepdims=True)


def _em_once(values: np.ndarray, k: int, rng: np.random.Generator,
             max_iter: int = 200, rel_tol: float = 1e-8):
    """One EM run from a jittered-quantile start; returns (loglik, params)."""
    n = len(values)
    quantiles = np.quantile(values, (np.arange(k) + 0.5) / k)
    spread = values.std() if values.std() > 0 else 1.0
    means = quantiles + rng.normal(0.0, 0.05 * spread, size=k)
    stds = np.full(k, max(spread / k, STD_FLOOR))
    weights = np.full(k, 1.0 / k)

    loglik = -np.inf
    with np.errstate(divide="ignore"):
        for _ in range(max_iter):
            log_p = (
                np.log(weights)[None, :]
                - np.log(stds)[None, :]
                - 0.5 * _LOG_2PI
                - 0.5 * ((values[:, None] - means[None, :]) / stds[None, :]) ** 2
            )
            shift = log_p.max(axis=1, keepdims=True)
            p = np.exp(log_p - shift)
            norm = p.sum(axis=1, keepdims=True)
            new_loglik = float(np.sum(np.log(norm) + shift))
            resp = p / norm

            mass = resp.sum(axis=0)
            weights = mass / n
            safe_mass = np.maximum(mass, 1e-12)
            means = (resp * values[:, None]).sum(axis=0) / safe_mass
            var = (resp * (values[:, None] - means[None, :]) ** 2).sum(axis=0) / safe_mass
            stds = np.sqrt(np.maximum(var, STD_FLOOR ** 2))

            if new_loglik - loglik < rel_tol * max(1.0, abs(new_loglik)):
                loglik = new_loglik
                break
            loglik = new_loglik
    return loglik, (means, stds, weights)


def fit_column_mixture(column_values, max_modes: int = 10, seed: int = 0,
                       n_restarts: int = 5) -> ColumnMixture:
    """Fit one column's mixture; constant columns collapse to a single mode.

    The mode count is chosen by the Bayesian information criterion over
    k = 1..max_modes (capped at the distinct-value count), each candidate
    fitted by restarted EM, so well-separated clusters surface as exactly
    that many modes instead of max_modes fragments.
    """
    values = np.asarray(column_values, dtype=np.float64).ravel()
    if len(values) == 0:
        raise ValueError("cannot fit a mixture on an empty column")
    if not np.all(np.isfinite(values)):
        raise ValueError("column contains non-finite values")

    n_distinct = len(np.unique(values))
    k_max = min(max_modes, n_distinct)
    if k_max <= 1 or values.std() == 0.0:
        return ColumnMixture(means=[float(values[0])], stds=[STD_FLOOR], weights=[1.0])

    rng = np.random.default_rng(seed)
    n = len(values)
    best = None  # (bic, params)
    worse_streak = 0
    for k in range(1, k_max + 1):
        best_k = None
        for _ in range(n_restarts):
            loglik, params = _em_once(values, k, rng)
            if best_k is None or loglik > best_k[0]:
                best_k = (loglik, params)
        n_free = 3 * k - 1
        bic = n_free * np.log(n) - 2.0 * best_k[0]
        if best is None or bic < best[0]:
            best = (bic, best_k[1])
            worse_streak = 0
        else:
            worse_streak += 1
            if worse_streak >= 2:
                break
    means, stds, weights = best[1]

    keep = weights >= PRUNE_WEIGHT
    if not keep.any():
        keep = weights == weights.max()
    means, stds, weights = means[keep], stds[keep], weights[keep]
    weights = weights / weights.sum()
    order = np.argsort(means)
    return ColumnMixture(means=means[order], stds=np.maximum(stds[order], STD_FLOOR),
                         weights=weights[order])


@dataclass(frozen=True)
class ModeNormalizer:
    """Per-column mixtures for a whole schema (None for discrete columns)."""

    mixtures: tuple

    def mixture_for(self, column_index: int) -> ColumnMixture:
        mix = self.mixtures[column_index]
        if mix is None:
            raise ValueError(f"column {column_index} is discrete; no mixture")
        return mix


def fit_mode_normalizer(rows: np.ndarray, schema, max_modes: int = 10,
                        seed: int = 0) -> ModeNormalizer:
    """Fit mixtures for every continuous column of a table's rows."""
    rows = np.asarray(rows, dtype=np.float64)
    mixtures = []
    for j, col in enumerate(schema):
        if col.kind == "continuous":
            mixtures.append(
                fit_column_mixture(rows[:, j], max_modes=max_modes,
                                   seed=seed + j)
            )
        else:
            mixtures.append(None)
    return ModeNormalizer(mixtures=tuple(mixtures))
