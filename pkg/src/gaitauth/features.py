"""Frame segmentation, statistical/frequency feature bank, min-max scaling.

The pipeline is: slice a recording into fixed-length overlapping frames,
turn each frame into one fixed-width feature row (per-channel statistics on
the three axes plus the magnitude signal, and pairwise axis correlations),
then min-max normalize onto the unit cube using training rows only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .dataio import ColumnSpec, FeatureTable, RawRecording

log = logging.getLogger(__name__)

CHANNELS = ("ax", "ay", "az", "mag")

STAT_NAMES = (
    "mean", "std", "min", "max", "median", "iqr", "mad", "rms",
    "energy", "n_peaks", "dom_freq", "spec_entropy",
)


@dataclass(frozen=True)
class Frame:
    """One fixed-length window of a recording."""

    user_id: str
    start_t: float
    length_s: float
    sample_rate_hz: float
    samples: np.ndarray  # (n, 3): ax, ay, az

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class FeatureBank:
    """Which statistics to compute, and the peak-detection knobs."""

    stats: tuple = STAT_NAMES
    include_magnitude: bool = True
    include_correlations: bool = True
    peak_height_stds: float = 0.5
    peak_min_separation_s: float = 0.25

    def channels(self):
        return CHANNELS if self.include_magnitude else CHANNELS[:3]

    def feature_names(self):
        names = [f"{ch}_{st}" for ch in self.channels() for st in self.stats]
        if self.include_correlations:
            names += ["corr_ax_ay", "corr_ax_az", "corr_ay_az"]
        return names

    def schema(self):
        return [ColumnSpec(name=n, kind="continuous") for n in self.feature_names()]


DEFAULT_BANK = FeatureBank()


def window(recording: RawRecording, frame_s: float = 10.0,
           overlap_fraction: float = 0.5, strict: bool = True):
    """Cut a recording into frames advancing by frame_s * (1 - overlap).

    Frame lengths of 8-12 s are the supported operating range; pass
    strict=False to window outside it.  A trailing partial frame is dropped;
    a recording shorter than one frame yields an empty list with a warning.
    """
    if strict and not 8.0 <= frame_s <= 12.0:
        raise ValueError("frame_s outside the supported 8-12 s range "
                         "(pass strict=False to override)")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap_fraction must lie in [0, 1)")
    rate = recording.sample_rate_hz
    frame_len = int(round(frame_s * rate))
    step = max(1, int(round(frame_len * (1.0 - overlap_fraction))))
    n = recording.n_samples
    if n < frame_len:
        log.warning(
            "recording %s/%s shorter than one frame (%.1f s < %.1f s)",
            recording.user_id, recording.session_id, n / rate, frame_s,
        )
        return []
    frames = []
    for start in range(0, n - frame_len + 1, step):
        chunk = recording.samples[start:start + frame_len]
        frames.append(
            Frame(
                user_id=recording.user_id,
                start_t=float(chunk[0, 0]),
                length_s=frame_len / rate,
                sample_rate_hz=rate,
                samples=chunk[:, 1:4],
            )
        )
    return frames


# ---- per-channel statistics -------------------------------------------------


def _dominant_frequency(x: np.ndarray, rate: float) -> float:
    """Frequency of the largest non-DC spectral magnitude, in Hz."""
    spectrum = np.abs(np.fft.rfft(x))
    if len(spectrum) < 2:
        return 0.0
    k = 1 + int(np.argmax(spectrum[1:]))
    return k * rate / len(x)


def _spectral_entropy(x: np.ndarray) -> float:
    """Shannon entropy (nats) of the normalized non-DC power spectrum."""
    power = np.abs(np.fft.rfft(x)[1:]) ** 2
    total = power.sum()
    if total <= 0.0:
        return 0.0
    p = power / total
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _channel_stats(x: np.ndarray, rate: float, bank: FeatureBank) -> dict:
    mean = float(np.mean(x))
    std = float(np.std(x))
    height = mean + bank.peak_height_stds * std
    distance = max(1, int(round(bank.peak_min_separation_s * rate)))
    if std > 0:
        peaks, _ = find_peaks(x, height=height, distance=distance)
        n_peaks = float(len(peaks))
    else:
        n_peaks = 0.0
    q75, q25 = np.percentile(x, [75.0, 25.0])
    return {
        "mean": mean,
        "std": std,
        "min": float(np.min(x)),
        "max": float(np.max(x)),
        "median": float(np.median(x)),
        "iqr": float(q75 - q25),
        "mad": float(np.mean(np.abs(x - mean))),
        "rms": float(np.sqrt(np.mean(x ** 2))),
        "energy": float(np.sum(x ** 2)),
        "n_peaks": n_peaks,
        "dom_freq": _dominant_frequency(x, rate),
        "spec_entropy": _spectral_entropy(x),
    }


def _safe_corr(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation with constant signals mapping to 0, never NaN."""
    sa, sb = np.std(a), np.std(b)
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def extract_features(frame: Frame, bank: FeatureBank = DEFAULT_BANK) -> np.ndarray:
    """One fixed-width finite feature row for a frame."""
    if frame.n_samples == 0:
        raise ValueError("cannot featurize an empty frame")
    ax, ay, az = frame.samples[:, 0], frame.samples[:, 1], frame.samples[:, 2]
    channels = {"ax": ax, "ay": ay, "az": az}
    if bank.include_magnitude:
        channels["mag"] = np.sqrt(ax ** 2 + ay ** 2 + az ** 2)
    row = []
    for ch in bank.channels():
        stats = _channel_stats(channels[ch], frame.sample_rate_hz, bank)
        row.extend(stats[st] for st in bank.stats)
    if bank.include_correlations:
        row.extend([_safe_corr(ax, ay), _safe_corr(ax, az), _safe_corr(ay, az)])
    out = np.asarray(row, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError("feature extraction produced a non-finite value")
    return out


def featurize_recordings(recordings, frame_s: float = 10.0,
                         overlap_fraction: float = 0.5,
                         bank: FeatureBank = DEFAULT_BANK,
                         strict: bool = True) -> FeatureTable:
    """Window every recording and stack the extracted rows into one table."""
    rows, users = [], []
    for rec in recordings:
        for frame in window(rec, frame_s, overlap_fraction, strict=strict):
            rows.append(extract_features(frame, bank))
            users.append(rec.user_id)
    schema = bank.schema()
    rows = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(schema))
    return FeatureTable(schema=schema, rows=rows,
                        user_ids=np.asarray(users, dtype=object))


# ---- min-max normalization ----------------------------------------------------


@dataclass
class MinMaxNormalizer:
    """Per-continuous-column training min/max; discrete columns pass through."""

    mins: np.ndarray = None
    maxs: np.ndarray = None
    continuous_mask: np.ndarray = None
    fitted_rows: int = 0

    @property
    def fitted(self) -> bool:
        return self.fitted_rows > 0


def fit_minmax(table: FeatureTable) -> MinMaxNormalizer:
    """Column-wise min/max from training rows (synthetic rows must be excluded
    by the caller; normalization defines the coordinate system attacks use)."""
    if table.n_rows == 0:
        raise ValueError("cannot fit a normalizer on an empty table")
    mask = np.asarray([c.kind == "continuous" for c in table.schema], dtype=bool)
    return MinMaxNormalizer(
        mins=table.rows.min(axis=0),
        maxs=table.rows.max(axis=0),
        continuous_mask=mask,
        fitted_rows=table.n_rows,
    )


def apply_minmax(norm: MinMaxNormalizer, table: FeatureTable) -> FeatureTable:
    """Map continuous columns into [0,1]: train extremes to the endpoints,
    out-of-range values clamped, degenerate (max = min) columns to 0.5."""
    if not norm.fitted:
        raise ValueError("normalizer has not been fitted")
    if len(norm.continuous_mask) != table.n_cols:
        raise ValueError("normalizer width does not match table width")
    rows = table.rows.copy()
    span = norm.maxs - norm.mins
    for j in np.flatnonzero(norm.continuous_mask):
        if span[j] == 0.0:
            rows[:, j] = 0.5
        else:
            rows[:, j] = np.clip((rows[:, j] - norm.mins[j]) / span[j], 0.0, 1.0)
    return FeatureTable(schema=table.schema, rows=rows, user_ids=table.user_ids,
                        origins=table.origins)


def unit_rows(table: FeatureTable) -> np.ndarray:
    """Rows mapped fully onto the unit cube for classifier consumption:
    continuous columns are assumed normalized already; a discrete index i over
    k categories becomes i/(k-1)."""
    rows = table.rows.copy()
    for j, col in enumerate(table.schema):
        if col.kind == "discrete":
            rows[:, j] = rows[:, j] / (len(col.categories) - 1)
    return rows
