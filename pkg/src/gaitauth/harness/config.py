"""Experiment configuration: YAML schema, validation, seed derivation.

A config names datasets (synthetic walkers, raw recording files, or
precomputed feature files), the feature bank and framing, classifier specs,
augmentation variants, attack parameters, a master seed, and the output
directory.  Every run is seeded: per-cell seeds are derived by hashing the
master seed with the cell coordinates, so cells are independent of matrix
order and of which other cells run.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml

from ..classifiers import ModelSpec

VARIANTS = ("vanilla", "beta", "ctgan")
_VARIANT_ALIASES = {"ictgan": "ctgan", "gan": "ctgan"}


class ConfigError(ValueError):
    """The config file is malformed or references missing resources."""


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    kind: str  # "synthetic" | "raw" | "features"
    path: str = None
    n_users: int = 10
    duration_s: float = 240.0
    sample_rate_hz: float = 50.0
    user_column: str = "user"
    discrete: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)  # raw-file column mapping
    delimiter: str = ","


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out_dir: str
    datasets: tuple
    classifiers: tuple  # of (name, ModelSpec)
    variants: tuple
    frame_seconds: float = 10.0
    overlap: float = 0.5
    feature_stats: tuple = None  # None: full default bank
    train_fraction: float = 0.7
    impostor_cap_ratio: float = 5.0
    synth_ratio: float = 1.0
    gan_overrides: dict = field(default_factory=dict)
    n_probes: int = 100000
    threshold: float = 0.5
    raw: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        """Stable digest of the semantic config content (not the file bytes)."""
        payload = dict(self.raw)
        payload["seed"] = self.seed
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-cell seed from the master seed and cell coordinates."""
    text = "|".join([str(master_seed), *[str(p) for p in parts]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _canonical_variant(name: str) -> str:
    name = str(name).lower()
    name = _VARIANT_ALIASES.get(name, name)
    if name not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; expected one of {VARIANTS}")
    return name


def load_config(path, seed_override: int = None, out_override: str = None,
                probes_override: int = None) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)),
                        seed_override=seed_override, out_override=out_override,
                        probes_override=probes_override)


def parse_config(raw: dict, base_dir: str = ".", seed_override: int = None,
                 out_override: str = None,
                 probes_override: int = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("config must set a seed: unseeded runs are not allowed")
    seed = int(seed)

    out_dir = out_override or raw.get("out_dir", "out")

    datasets = []
    for entry in raw.get("datasets", []):
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError("each dataset needs at least a name")
        kind = entry.get("kind", "synthetic")
        if kind not in ("synthetic", "raw", "features"):
            raise ConfigError(f"dataset {entry['name']!r}: unknown kind {kind!r}")
        path = entry.get("path")
        if kind in ("raw", "features"):
            if not path:
                raise ConfigError(f"dataset {entry['name']!r}: kind {kind} needs a path")
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            if not os.path.exists(path):
                raise ConfigError(f"dataset {entry['name']!r}: path not found: {path}")
        columns = {str(k): str(v) for k, v in (entry.get("columns") or {}).items()}
        bad = set(columns) - {"user", "session", "t", "ax", "ay", "az"}
        if bad:
            raise ConfigError(
                f"dataset {entry['name']!r}: unknown column mapping keys {sorted(bad)}")
        datasets.append(DatasetConfig(
            name=str(entry["name"]),
            kind=kind,
            path=path,
            n_users=int(entry.get("n_users", 10)),
            duration_s=float(entry.get("duration_s", 240.0)),
            sample_rate_hz=float(entry.get("sample_rate_hz", 50.0)),
            user_column=entry.get("user_column", "user"),
            discrete={str(k): tuple(str(c) for c in v)
                      for k, v in (entry.get("discrete") or {}).items()},
            columns=columns,
            delimiter=entry.get("delimiter", ","),
        ))
    if not datasets:
        raise ConfigError("config must declare at least one dataset")

    clf_section = raw.get("classifiers", ["linsvm", "rbfsvm", "rndf", "ffnn"])
    classifiers = []
    if isinstance(clf_section, dict):
        items = clf_section.items()
    else:
        items = [(name, {}) for name in clf_section]
    for name, hp in items:
        spec = ModelSpec(family=str(name), hyperparameters=dict(hp or {}))
        classifiers.append((str(name).lower(), spec))
    if not classifiers:
        raise ConfigError("config must declare at least one classifier")

    variants = tuple(_canonical_variant(v)
                     for v in raw.get("variants", ["vanilla"]))
    if not variants:
        raise ConfigError("config must declare at least one variant")

    features = raw.get("features", {}) or {}
    train = raw.get("train", {}) or {}
    augment = raw.get("augment", {}) or {}
    attack = raw.get("attack", {}) or {}

    n_probes = probes_override if probes_override is not None else int(
        attack.get("n_probes", 100000))

    stats = features.get("stats")
    return ExperimentConfig(
        seed=seed,
        out_dir=out_dir,
        datasets=tuple(datasets),
        classifiers=tuple(classifiers),
        variants=variants,
        frame_seconds=float(features.get("frame_seconds", 10.0)),
        overlap=float(features.get("overlap", 0.5)),
        feature_stats=tuple(stats) if stats else None,
        train_fraction=float(train.get("train_fraction", 0.7)),
        impostor_cap_ratio=float(train.get("impostor_cap_ratio", 5.0)),
        synth_ratio=float(augment.get("ratio", 1.0)),
        gan_overrides=dict(augment.get("gan", {}) or {}),
        n_probes=n_probes,
        threshold=float(attack.get("threshold", 0.5)),
        raw=raw,
    )
