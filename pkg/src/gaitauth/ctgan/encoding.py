"""Row encoding for GAN training: mode-specific normalization + one-hots.

A continuous value c becomes (alpha, mode one-hot) where the mode k is the
posterior-argmax component of the column's mixture and
alpha = (c - mean_k) / (4 * std_k), clamped into (-1, 1).  A discrete value
becomes its category one-hot.  Blocks are laid out in schema order, so the
encoded width is sum(1 + m_i) over continuous columns plus sum(|D_i|) over
discrete ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixture import ModeNormalizer

ALPHA_CLAMP = 1.0 - 1e-9


@dataclass(frozen=True)
class Span:
    """One contiguous block of the encoded row."""

    column_index: int
    kind: str  # "alpha" | "mode" | "category"
    start: int
    width: int

    @property
    def stop(self) -> int:
        return self.start + self.width


def build_layout(normalizer: ModeNormalizer, schema):
    """Spans of the encoded row, in schema order."""
    spans = []
    cursor = 0
    for j, col in enumerate(schema):
        if col.kind == "continuous":
            spans.append(Span(j, "alpha", cursor, 1))
            cursor += 1
            m = normalizer.mixture_for(j).n_modes
            spans.append(Span(j, "mode", cursor, m))
            cursor += m
        else:
            width = len(col.categories)
            spans.append(Span(j, "category", cursor, width))
            cursor += width
    return spans, cursor


def encode_rows(rows: np.ndarray, normalizer: ModeNormalizer, schema) -> np.ndarray:
    """Encode a row matrix; deterministic (modes chosen by posterior argmax)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.shape[1] != len(schema):
        raise ValueError("row width does not match schema")
    spans, width = build_layout(normalizer, schema)
    out = np.zeros((rows.shape[0], width))
    for span in spans:
        values = rows[:, span.column_index]
        if span.kind == "alpha":
            mix = normalizer.mixture_for(span.column_index)
            k = np.argmax(mix.posterior(values), axis=1)
            alpha = (values - mix.means[k]) / (4.0 * mix.stds[k])
            out[:, span.start] = np.clip(alpha, -ALPHA_CLAMP, ALPHA_CLAMP)
        elif span.kind == "mode":
            mix = normalizer.mixture_for(span.column_index)
            k = np.argmax(mix.posterior(values), axis=1)
            out[np.arange(len(values)), span.start + k] = 1.0
        else:
            idx = values.astype(np.int64)
            if np.any(values != idx) or idx.min() < 0 or idx.max() >= span.width:
                raise ValueError(
                    f"column {span.column_index} holds an invalid category index"
                )
            out[np.arange(len(values)), span.start + idx] = 1.0
    return out


def decode_rows(encoded: np.ndarray, normalizer: ModeNormalizer, schema) -> np.ndarray:
    """Invert the encoding; one-hot-ish blocks are resolved by argmax, so soft
    generator outputs decode directly."""
    encoded = np.asarray(encoded, dtype=np.float64)
    if encoded.ndim == 1:
        encoded = encoded.reshape(1, -1)
    spans, width = build_layout(normalizer, schema)
    if encoded.shape[1] != width:
        raise ValueError(f"encoded width {encoded.shape[1]} != layout width {width}")
    rows = np.zeros((encoded.shape[0], len(schema)))
    alpha_by_column = {}
    for span in spans:
        block = encoded[:, span.start:span.stop]
        if span.kind == "alpha":
            alpha_by_column[span.column_index] = block[:, 0]
        elif span.kind == "mode":
            if np.any(block.sum(axis=1) <= 0) or not np.all(np.isfinite(block)):
                raise ValueError(
                    f"column {span.column_index}: invalid mode block on decode"
                )
            mix = normalizer.mixture_for(span.column_index)
            k = np.argmax(block, axis=1)
            alpha = np.clip(alpha_by_column[span.column_index],
                            -ALPHA_CLAMP, ALPHA_CLAMP)
            rows[:, span.column_index] = alpha * 4.0 * mix.stds[k] + mix.means[k]
        else:
            if np.any(block.sum(axis=1) <= 0) or not np.all(np.isfinite(block)):
                raise ValueError(
                    f"column {span.column_index}: invalid category block on decode"
                )
            rows[:, span.column_index] = np.argmax(block, axis=1).astype(np.float64)
    return rows
