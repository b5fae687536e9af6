"""Conditional-vector machinery for discrete columns.

Training by sampling: each batch row picks one discrete column uniformly,
one of its categories by log-frequency, emits a one-hot over all discrete
categories, and the real half of the batch is drawn from rows that actually
match the chosen category.  With no discrete columns the cond vector is
empty and every piece below degenerates gracefully.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CondSampler:
    """Frequencies and row indices needed to draw conditional vectors."""

    discrete_columns: tuple  # schema indices of discrete columns
    category_offsets: tuple  # offset of each discrete column inside cond
    cond_width: int
    log_weights: tuple  # per discrete column: training-time category probs
    raw_weights: tuple  # per discrete column: plain category frequencies
    matching_rows: tuple  # per discrete column: tuple of row-index arrays

    @property
    def has_discrete(self) -> bool:
        return self.cond_width > 0


def build_cond_sampler(rows: np.ndarray, schema) -> CondSampler:
    """Scan real training rows once and precompute category weights/indices."""
    rows = np.asarray(rows, dtype=np.float64)
    discrete_columns = [j for j, c in enumerate(schema) if c.kind == "discrete"]
    offsets, log_weights, raw_weights, matching = [], [], [], []
    cursor = 0
    for j in discrete_columns:
        n_cat = len(schema[j].categories)
        offsets.append(cursor)
        cursor += n_cat
        counts = np.bincount(rows[:, j].astype(np.int64), minlength=n_cat)
        weights = np.where(counts > 0, np.log(counts + 1.0), 0.0)
        total = weights.sum()
        log_weights.append(weights / total if total > 0 else weights)
        raw = counts / counts.sum() if counts.sum() > 0 else counts.astype(float)
        raw_weights.append(raw)
        matching.append(
            tuple(np.flatnonzero(rows[:, j] == cat) for cat in range(n_cat))
        )
    return CondSampler(
        discrete_columns=tuple(discrete_columns),
        category_offsets=tuple(offsets),
        cond_width=cursor,
        log_weights=tuple(tuple(w) for w in log_weights),
        raw_weights=tuple(tuple(w) for w in raw_weights),
        matching_rows=tuple(matching),
    )


def sample_cond_batch(sampler: CondSampler, n: int, rng: np.random.Generator):
    """Draw n conditional vectors.

    Returns (cond, column_choice, category_choice); cond is (n, cond_width)
    and the choices are index arrays (empty when there are no discrete
    columns, in which case cond has width 0).
    """
    if not sampler.has_discrete:
        return (np.zeros((n, 0)), np.zeros(n, dtype=np.int64),
                np.zeros(n, dtype=np.int64))
    cond = np.zeros((n, sampler.cond_width))
    which = rng.integers(0, len(sampler.discrete_columns), size=n)
    cats = np.zeros(n, dtype=np.int64)
    for i in range(n):
        d = which[i]
        weights = np.asarray(sampler.log_weights[d])
        cats[i] = rng.choice(len(weights), p=weights)
        cond[i, sampler.category_offsets[d] + cats[i]] = 1.0
    return cond, which, cats


def matching_real_indices(sampler: CondSampler, which: np.ndarray,
                          cats: np.ndarray, n_rows: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Row index drawn per batch slot honoring its condition (uniform rows
    when there are no discrete columns)."""
    n = len(which)
    if not sampler.has_discrete:
        return rng.integers(0, n_rows, size=n)
    idx = np.zeros(n, dtype=np.int64)
    for i in range(n):
        pool = sampler.matching_rows[which[i]][cats[i]]
        idx[i] = pool[rng.integers(0, len(pool))]
    return idx


def sample_generation_cond_batch(sampler: CondSampler, n: int,
                                 rng: np.random.Generator) -> np.ndarray:
    """Conditional vectors for generation: categories drawn by their plain
    training frequency over all discrete categories pooled together."""
    if not sampler.has_discrete:
        return np.zeros((n, 0))
    flat = np.concatenate([np.asarray(w) for w in sampler.raw_weights])
    flat = flat / flat.sum()
    picks = rng.choice(len(flat), size=n, p=flat)
    cond = np.zeros((n, sampler.cond_width))
    cond[np.arange(n), picks] = 1.0
    return cond


def sample_cond(sampler: CondSampler, rng: np.random.Generator):
    """Single conditional vector (empty when no discrete columns exist)."""
    cond, which, cats = sample_cond_batch(sampler, 1, rng)
    if not sampler.has_discrete:
        return np.zeros(0)
    return cond[0]
