"""Dataset loading, synthetic walker generation, and per-user splitting.

Recordings are timestamped triaxial accelerometer series; feature tables are
labeled row matrices with a mixed continuous/discrete column schema.  A
seeded synthetic-walker generator provides a desk-scale stand-in corpus when
no real dataset is available.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

ORIGIN_REAL = "real"
ORIGIN_BETA = "beta_synth"
ORIGIN_GAN = "gan_synth"
_ORIGINS = (ORIGIN_REAL, ORIGIN_BETA, ORIGIN_GAN)


class ParseError(ValueError):
    """A file row could not be parsed; message names the offending line."""


class ValidationError(ValueError):
    """Parsed data violates a structural invariant."""


# ---- domain types ----------------------------------------------------------


@dataclass(frozen=True)
class ColumnSpec:
    """One feature column: continuous, or discrete with named categories."""

    name: str
    kind: str = "continuous"  # "continuous" | "discrete"
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete"):
            raise ValidationError(f"unknown column kind {self.kind!r}")
        if self.kind == "discrete" and len(self.categories) < 2:
            raise ValidationError(f"discrete column {self.name!r} needs >= 2 categories")
        if self.kind == "continuous" and self.categories:
            raise ValidationError(f"continuous column {self.name!r} cannot have categories")
        object.__setattr__(self, "categories", tuple(self.categories))


@dataclass
class RawRecording:
    """Triaxial accelerometer series for one (user, session)."""

    user_id: str
    session_id: str
    sample_rate_hz: float
    samples: np.ndarray  # (n, 4) columns: t, ax, ay, az

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] != 4:
            raise ValidationError("samples must be an (n, 4) array of t, ax, ay, az")
        t = self.samples[:, 0]
        if len(t) > 1:
            gaps = np.diff(t)
            if np.any(gaps <= 0):
                bad = int(np.argmax(gaps <= 0))
                raise ValidationError(
                    f"timestamps not strictly increasing for user {self.user_id!r} "
                    f"session {self.session_id!r} near sample {bad + 1}"
                )
            implied = 1.0 / float(np.median(gaps))
            if self.sample_rate_hz <= 0:
                raise ValidationError("sample_rate_hz must be positive")
            if abs(implied - self.sample_rate_hz) > 0.1 * self.sample_rate_hz:
                raise ValidationError(
                    f"declared rate {self.sample_rate_hz} Hz differs from median "
                    f"inter-sample rate {implied:.3f} Hz by more than 10%"
                )
        elif self.sample_rate_hz <= 0:
            raise ValidationError("sample_rate_hz must be positive")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass
class FeatureTable:
    """Row matrix plus column schema and per-row (user, origin) labels.

    Discrete cells hold the category *index* (stored as a float with integral
    value); continuous cells hold the raw value.  All cells must be finite.
    """

    schema: list
    rows: np.ndarray
    user_ids: np.ndarray  # per-row user id (object/str array)
    origins: np.ndarray = field(default=None)

    def __post_init__(self):
        self.schema = list(self.schema)
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            self.rows = self.rows.reshape(-1, len(self.schema))
        if self.rows.shape[1] != len(self.schema):
            raise ValidationError(
                f"row width {self.rows.shape[1]} != schema length {len(self.schema)}"
            )
        self.user_ids = np.asarray(self.user_ids, dtype=object)
        if self.user_ids.shape[0] != self.rows.shape[0]:
            raise ValidationError("one user label required per row")
        if self.origins is None:
            self.origins = np.asarray([ORIGIN_REAL] * self.rows.shape[0], dtype=object)
        else:
            self.origins = np.asarray(self.origins, dtype=object)
        if self.origins.shape[0] != self.rows.shape[0]:
            raise ValidationError("one origin label required per row")
        for o in set(self.origins.tolist()):
            if o not in _ORIGINS:
                raise ValidationError(f"unknown origin label {o!r}")
        if not np.all(np.isfinite(self.rows)):
            raise ValidationError("feature table contains non-finite values")
        for j, col in enumerate(self.schema):
            if col.kind == "discrete" and self.rows.shape[0]:
                vals = self.rows[:, j]
                if np.any(vals != np.floor(vals)) or np.any(vals < 0) or np.any(
                    vals >= len(col.categories)
                ):
                    raise ValidationError(
                        f"column {col.name!r} holds an invalid category index"
                    )

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_cols(self) -> int:
        return self.rows.shape[1]

    def users(self):
        """Distinct user ids, sorted for deterministic iteration."""
        return sorted(set(self.user_ids.tolist()))

    def subset(self, indices) -> "FeatureTable":
        indices = np.asarray(indices)
        return FeatureTable(
            schema=self.schema,
            rows=self.rows[indices],
            user_ids=self.user_ids[indices],
            origins=self.origins[indices],
        )

    def user_mask(self, user_id) -> np.ndarray:
        return np.asarray([u == user_id for u in self.user_ids], dtype=bool)


def concat_tables(tables) -> FeatureTable:
    """Stack tables that share a schema."""
    tables = list(tables)
    if not tables:
        raise ValueError("need at least one table")
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise ValidationError("cannot concatenate tables with different schemas")
    return FeatureTable(
        schema=schema,
        rows=np.concatenate([t.rows for t in tables], axis=0),
        user_ids=np.concatenate([t.user_ids for t in tables]),
        origins=np.concatenate([t.origins for t in tables]),
    )


# ---- loaders ----------------------------------------------------------------


@dataclass(frozen=True)
class CsvFormat:
    """Column mapping for delimited recording files."""

    user: str = "user"
    session: str = "session"
    t: str = "t"
    ax: str = "ax"
    ay: str = "ay"
    az: str = "az"
    delimiter: str = ","
    sample_rate_hz: float = None  # None: derive from median timestamp gap


def load_raw_csv(path, format_spec: CsvFormat = CsvFormat()):
    """Read a delimited recording file into one RawRecording per (user, session)."""
    groups = {}  # (user, session) -> list of (t, ax, ay, az)
    order = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=format_spec.delimiter)
        header = next(reader, None)
        if header is None:
            log.warning("empty recording file: %s", path)
            return []
        header = [h.strip() for h in header]
        try:
            cols = {
                name: header.index(getattr(format_spec, name))
                for name in ("user", "session", "t", "ax", "ay", "az")
            }
        except ValueError as exc:
            raise ParseError(f"{path}: header missing mapped column ({exc})") from None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                user = row[cols["user"]].strip()
                session = row[cols["session"]].strip()
                values = tuple(float(row[cols[c]]) for c in ("t", "ax", "ay", "az"))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            key = (user, session)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(values)

    recordings = []
    for user, session in order:
        samples = np.asarray(groups[(user, session)], dtype=np.float64)
        if format_spec.sample_rate_hz is not None:
            rate = format_spec.sample_rate_hz
        elif samples.shape[0] > 1:
            rate = 1.0 / float(np.median(np.diff(samples[:, 0])))
        else:
            rate = 1.0
        recordings.append(
            RawRecording(user_id=user, session_id=session, sample_rate_hz=rate,
                         samples=samples)
        )
    if not recordings:
        log.warning("no rows in recording file: %s", path)
    return recordings


def load_feature_table(path, schema, user_column: str = "user",
                       delimiter: str = ",") -> FeatureTable:
    """Read a delimited feature file (header = user column + schema names)."""
    schema = list(schema)
    rows, users = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty feature file")
        header = [h.strip() for h in header]
        try:
            user_idx = header.index(user_column)
            col_idx = [header.index(c.name) for c in schema]
        except ValueError as exc:
            raise ParseError(f"{path}: header missing column ({exc})") from None
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if max(col_idx + [user_idx]) >= len(raw):
                raise ParseError(f"{path}: line {lineno}: row narrower than header")
            users.append(raw[user_idx].strip())
            row = []
            for col, j in zip(schema, col_idx):
                cell = raw[j].strip()
                if col.kind == "discrete":
                    if cell not in col.categories:
                        raise ParseError(
                            f"{path}: line {lineno}: unknown category {cell!r} "
                            f"for column {col.name!r}"
                        )
                    row.append(float(col.categories.index(cell)))
                else:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"{path}: line {lineno}: non-numeric value {cell!r} "
                            f"for column {col.name!r}"
                        ) from None
                    if not np.isfinite(value):
                        raise ParseError(
                            f"{path}: line {lineno}: non-finite value for "
                            f"column {col.name!r}"
                        )
                    row.append(value)
            rows.append(row)
    rows = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(schema))
    return FeatureTable(schema=schema, rows=rows,
                        user_ids=np.asarray(users, dtype=object))


def save_feature_table(table: FeatureTable, path, user_column: str = "user",
                       delimiter: str = ",") -> None:
    """Write a feature table as delimited text (inverse of load_feature_table).

    Discrete cells are written as their category labels; continuous cells use
    repr so a load/save round trip is exact.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([user_column] + [c.name for c in table.schema])
        for i in range(table.n_rows):
            cells = [str(table.user_ids[i])]
            for j, col in enumerate(table.schema):
                if col.kind == "discrete":
                    cells.append(col.categories[int(table.rows[i, j])])
                else:
                    cells.append(repr(float(table.rows[i, j])))
            writer.writerow(cells)


# ---- synthetic walkers -------------------------------------------------------


@dataclass(frozen=True)
class WalkerParams:
    """Harmonic gait model for one synthetic user.

    Per axis, acceleration is a 3-harmonic sinusoid at the user's step
    frequency plus white noise:
        a(t) = sum_h A[axis, h] * sin(2*pi*(h+1)*f*t + phase[axis, h]) + N(0, sigma)
    """

    step_frequency_hz: float
    harmonic_amplitudes: np.ndarray  # (3 axes, 3 harmonics), m/s^2
    phases: np.ndarray  # (3 axes, 3 harmonics), radians
    noise_std: float

    def __post_init__(self):
        if not 1.4 <= self.step_frequency_hz <= 2.3:
            raise ValidationError("step frequency must lie in [1.4, 2.3] Hz")
        if np.any(np.asarray(self.harmonic_amplitudes) < 0) or self.noise_std < 0:
            raise ValidationError("amplitudes and noise_std must be non-negative")


def draw_walker_params(n_users: int, rng: np.random.Generator):
    """Draw per-user gait parameters with stratified step frequencies.

    The frequency range [1.4, 2.3] Hz is cut into n_users equal bins and each
    user draws from the interior of their own bin, so no two users share a
    fundamental frequency.
    """
    edges = np.linspace(1.4, 2.3, n_users + 1)
    params = []
    for i in range(n_users):
        width = edges[i + 1] - edges[i]
        freq = rng.uniform(edges[i] + 0.1 * width, edges[i + 1] - 0.1 * width)
        base = rng.uniform(0.8, 2.5, size=(3, 1))
        decay = rng.uniform(0.25, 0.6, size=(3, 2))
        amps = np.concatenate([base, base * np.cumprod(decay, axis=1)], axis=1)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(3, 3))
        noise_std = rng.uniform(0.05, 0.2)
        params.append(WalkerParams(freq, amps, phases, float(noise_std)))
    return params


def walker_recording(user_id: str, params: WalkerParams, duration_s: float,
                     sample_rate_hz: float, rng: np.random.Generator,
                     session_id: str = "s0") -> RawRecording:
    """Synthesize one recording from a walker's harmonic parameters."""
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    axes = []
    for axis in range(3):
        signal = np.zeros(n)
        for h in range(3):
            signal += params.harmonic_amplitudes[axis, h] * np.sin(
                2.0 * np.pi * (h + 1) * params.step_frequency_hz * t
                + params.phases[axis, h]
            )
        signal += rng.normal(0.0, params.noise_std, size=n)
        axes.append(signal)
    samples = np.column_stack([t] + axes)
    return RawRecording(user_id=user_id, session_id=session_id,
                        sample_rate_hz=sample_rate_hz, samples=samples)


def generate_walkers(n_users: int, duration_s: float, sample_rate_hz: float,
                     seed: int):
    """Deterministic synthetic corpus: one recording per synthetic walker."""
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    rng = np.random.default_rng(seed)
    params = draw_walker_params(n_users, rng)
    return [
        walker_recording(f"walker{i:02d}", params[i], duration_s, sample_rate_hz, rng)
        for i in range(n_users)
    ]


# ---- splitting ---------------------------------------------------------------


def split_per_user(table: FeatureTable, train_fraction: float, seed: int):
    """Stratified per-user split into (train, test) tables.

    Each user's rows are shuffled and cut at round(train_fraction * n),
    clamped so both sides stay non-empty.  Deterministic per seed.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for user in table.users():
        idx = np.flatnonzero(table.user_mask(user))
        if len(idx) < 2:
            raise ValueError(f"user {user!r} has fewer than 2 rows; cannot split")
        perm = rng.permutation(len(idx))
        n_train = int(np.floor(train_fraction * len(idx) + 0.5))
        n_train = min(max(n_train, 1), len(idx) - 1)
        train_idx.extend(idx[perm[:n_train]].tolist())
        test_idx.extend(idx[perm[n_train:]].tolist())
    return table.subset(np.asarray(sorted(train_idx), dtype=int)), table.subset(
        np.asarray(sorted(test_idx), dtype=int)
    )
