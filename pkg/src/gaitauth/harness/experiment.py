"""Experiment orchestration: dataset -> split -> augment -> train -> attack.

For each dataset the harness materializes a feature table, performs a
per-user train/test split, fits one min-max normalizer on the full training
partition (real rows only -- synthetic rows never touch the normalizer), and
then runs the full (user x classifier x variant) matrix:

* ``vanilla``  -- real impostor rows only,
* ``beta``     -- real impostors plus mirrored-beta noise probes fitted to the
                  genuine training rows,
* ``ctgan``    -- real impostors plus samples from a conditional GAN trained
                  on the user's full impostor pool.

Every trained model is evaluated on held-out genuine and impostor rows
(false-accept / false-reject rates) and probed with uniform random vectors to
estimate its acceptance region.  Reports are deterministic byte-for-byte for
a fixed config and seed; wall-clock metadata lives only in ``run_meta.json``.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..attackeval import equal_error_point, evaluate_model
from ..betagen import fit_beta_params, sample_beta_noise
from ..classifiers import save_model, train
from ..ctgan import TrainConfig, generate, train_synth_model
from ..dataio import (ColumnSpec, CsvFormat, generate_walkers,
                      load_feature_table, load_raw_csv, split_per_user)
from ..features import (DEFAULT_BANK, FeatureBank, apply_minmax,
                        featurize_recordings, fit_minmax, unit_rows)
from .config import ExperimentConfig, derive_seed

REPORT_FIELDS = (
    "dataset", "user", "classifier", "variant",
    "far", "frr", "hter",
    "ar_estimate", "ar_ci_lo", "ar_ci_hi", "n_probes",
    "eer_threshold", "far_at_eer", "frr_at_eer",
    "n_genuine_train", "n_impostor_train", "n_synthetic_train",
    "error",
)


@dataclass
class CellResult:
    dataset: str
    user: str
    classifier: str
    variant: str
    metrics: dict = field(default_factory=dict)
    error: str = ""


@dataclass
class RunRecord:
    config_hash: str
    out_dir: str
    cells: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    @property
    def failed_cells(self):
        return [c for c in self.cells if c.error]


def _fmt(value) -> str:
    """Deterministic text form for report numbers."""
    if isinstance(value, float):  # includes numpy scalars, via __float__
        return repr(float(value))
    return str(value)


def _materialize_dataset(ds, cfg: ExperimentConfig):
    bank = FeatureBank(stats=cfg.feature_stats) if cfg.feature_stats else DEFAULT_BANK
    if ds.kind == "synthetic":
        recordings = generate_walkers(
            n_users=ds.n_users, duration_s=ds.duration_s,
            sample_rate_hz=ds.sample_rate_hz,
            seed=derive_seed(cfg.seed, ds.name, "walkers"))
        return featurize_recordings(recordings, frame_s=cfg.frame_seconds,
                                    overlap_fraction=cfg.overlap, bank=bank)
    if ds.kind == "raw":
        fmt = CsvFormat(delimiter=ds.delimiter,
                        sample_rate_hz=ds.sample_rate_hz or None,
                        **ds.columns)
        recordings = load_raw_csv(ds.path, format_spec=fmt)
        return featurize_recordings(recordings, frame_s=cfg.frame_seconds,
                                    overlap_fraction=cfg.overlap, bank=bank)
    # Precomputed feature file: the header gives the schema; every non-user
    # column is continuous unless declared discrete in the config.
    with open(ds.path) as fh:
        header = [h.strip() for h in fh.readline().rstrip("\n").split(ds.delimiter)]
    schema = []
    for name in header:
        if name == ds.user_column:
            continue
        if name in ds.discrete:
            schema.append(ColumnSpec(name=name, kind="discrete",
                                     categories=ds.discrete[name]))
        else:
            schema.append(ColumnSpec(name=name, kind="continuous"))
    return load_feature_table(ds.path, schema=schema,
                              user_column=ds.user_column,
                              delimiter=ds.delimiter)


def _gan_config(cfg: ExperimentConfig) -> TrainConfig:
    return TrainConfig(**cfg.gan_overrides) if cfg.gan_overrides else TrainConfig()


def _augmented_impostors(variant, genuine_unit, impostor_unit_capped, pool_table,
                         cfg, ds_name, user):
    """Return (impostor_training_rows, n_synthetic) for one (user, variant)."""
    if variant == "vanilla":
        return impostor_unit_capped, 0
    n_synth = int(round(cfg.synth_ratio * impostor_unit_capped.shape[0]))
    if n_synth == 0:
        return impostor_unit_capped, 0
    if variant == "beta":
        params = fit_beta_params(genuine_unit)
        synth = sample_beta_noise(
            params, n_synth, seed=derive_seed(cfg.seed, ds_name, user, "beta"))
    else:  # ctgan
        model = train_synth_model(
            pool_table, config=_gan_config(cfg),
            seed=derive_seed(cfg.seed, ds_name, user, "gan"))
        synth_table = generate(
            model, n_synth, seed=derive_seed(cfg.seed, ds_name, user, "gansample"))
        # A trained generator can stray slightly outside the unit cube, but
        # classifier inputs live on it, so clip the synthetic rows.
        synth = np.clip(unit_rows(synth_table), 0.0, 1.0)
    return np.vstack([impostor_unit_capped, synth]), n_synth


def run_experiment(cfg: ExperimentConfig, log=print, attack: bool = True) -> RunRecord:
    """Run the full matrix; with attack=False, stop after training and saving
    the per-cell models (no evaluation columns, no ROC files, no grids)."""
    t0 = time.time()
    record = RunRecord(config_hash=cfg.config_hash(), out_dir=cfg.out_dir)
    for sub in ("models", "reports", "roc", "summary"):
        os.makedirs(os.path.join(cfg.out_dir, sub), exist_ok=True)

    for ds in cfg.datasets:
        table = _materialize_dataset(ds, cfg)
        train_tab, test_tab = split_per_user(
            table, train_fraction=cfg.train_fraction,
            seed=derive_seed(cfg.seed, ds.name, "split"))
        normalizer = fit_minmax(train_tab)
        train_norm = apply_minmax(normalizer, train_tab)
        test_norm = apply_minmax(normalizer, test_tab)
        train_unit = unit_rows(train_norm)
        test_unit = unit_rows(test_norm)
        users = train_norm.users()
        log(f"[{ds.name}] {len(users)} users, "
            f"{train_unit.shape[0]} train rows, {test_unit.shape[0]} test rows")

        ds_cells = []
        for user in users:
            gmask_tr = train_norm.user_mask(user)
            gmask_te = test_norm.user_mask(user)
            genuine_train = train_unit[gmask_tr]
            genuine_test = test_unit[gmask_te]
            impostor_pool = train_unit[~gmask_tr]
            impostor_test = test_unit[~gmask_te]

            cap = int(round(cfg.impostor_cap_ratio * genuine_train.shape[0]))
            if impostor_pool.shape[0] > cap > 0:
                rng = np.random.default_rng(
                    derive_seed(cfg.seed, ds.name, user, "subsample"))
                keep = np.sort(rng.choice(impostor_pool.shape[0], size=cap,
                                          replace=False))
                impostor_capped = impostor_pool[keep]
            else:
                impostor_capped = impostor_pool

            # The synthesizer sees the full (pre-cap) impostor pool in table
            # form so discrete columns keep their category identity.
            pool_table = train_norm.subset(np.flatnonzero(~gmask_tr))

            # One augmentation per (dataset, user, variant), shared by all
            # classifiers so their cells train on identical rows.
            augmented = {}
            for variant in cfg.variants:
                try:
                    augmented[variant] = _augmented_impostors(
                        variant, genuine_train, impostor_capped, pool_table,
                        cfg, ds.name, user)
                except Exception as exc:  # degrade to per-cell failure
                    augmented[variant] = exc

            for clf_name, spec in cfg.classifiers:
                for variant in cfg.variants:
                    cell = CellResult(dataset=ds.name, user=user,
                                      classifier=clf_name, variant=variant)
                    ds_cells.append(cell)
                    prep = augmented[variant]
                    if isinstance(prep, Exception):
                        cell.error = f"augmentation failed: {prep}"
                        log(f"[{ds.name}/{user}/{clf_name}/{variant}] {cell.error}")
                        continue
                    impostor_train, n_synth = prep
                    try:
                        model = train(
                            spec, genuine_train, impostor_train,
                            seed=derive_seed(cfg.seed, ds.name, user,
                                             clf_name, variant, "train"),
                            user_id=user)
                        model.threshold = cfg.threshold
                        stem = f"{ds.name}_{user}_{clf_name}_{variant}"
                        save_model(model, os.path.join(cfg.out_dir, "models",
                                                       stem + ".model"))
                        if not attack:
                            cell.metrics = {
                                "n_genuine_train": genuine_train.shape[0],
                                "n_impostor_train": impostor_train.shape[0],
                                "n_synthetic_train": n_synth,
                            }
                            log(f"[{ds.name}/{user}/{clf_name}/{variant}] trained")
                            continue
                        report = evaluate_model(
                            model, genuine_test, impostor_test,
                            n_probes=cfg.n_probes,
                            seed=derive_seed(cfg.seed, ds.name, user,
                                             clf_name, variant, "attack"))
                        eer_t, eer_far, eer_frr = equal_error_point(report.roc)
                        _write_roc(os.path.join(cfg.out_dir, "roc", stem + ".csv"),
                                   report.roc)
                        cell.metrics = {
                            "far": report.far, "frr": report.frr,
                            "hter": report.hter,
                            "ar_estimate": report.ar_estimate,
                            "ar_ci_lo": report.ar_ci95[0],
                            "ar_ci_hi": report.ar_ci95[1],
                            "n_probes": report.n_probes,
                            "eer_threshold": eer_t,
                            "far_at_eer": eer_far, "frr_at_eer": eer_frr,
                            "n_genuine_train": genuine_train.shape[0],
                            "n_impostor_train": impostor_train.shape[0],
                            "n_synthetic_train": n_synth,
                        }
                        log(f"[{ds.name}/{user}/{clf_name}/{variant}] "
                            f"hter={report.hter:.4f} ar={report.ar_estimate:.6f}")
                    except Exception as exc:
                        cell.error = str(exc)
                        log(f"[{ds.name}/{user}/{clf_name}/{variant}] "
                            f"FAILED: {exc}")
        record.cells.extend(ds_cells)
        _write_report(os.path.join(cfg.out_dir, "reports", ds.name + ".csv"),
                      ds_cells)

    if attack:
        emit_summary(record, cfg)
    record.wall_clock_s = time.time() - t0
    meta = {
        "config_hash": record.config_hash,
        "version": __version__,
        "wall_clock_s": record.wall_clock_s,
        "n_cells": len(record.cells),
        "n_failed": len(record.failed_cells),
    }
    with open(os.path.join(cfg.out_dir, "run_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return record


def _write_roc(path, roc) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("threshold,far,frr\n")
        for far, frr, thr in roc:
            fh.write(f"{_fmt(thr)},{_fmt(far)},{_fmt(frr)}\n")


def _write_report(path, cells) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_FIELDS)
        for cell in cells:
            row = [cell.dataset, cell.user, cell.classifier, cell.variant]
            for name in REPORT_FIELDS[4:-1]:
                value = cell.metrics.get(name, "")
                row.append(_fmt(value) if value != "" else "")
            row.append(cell.error)
            writer.writerow(row)


def emit_summary(record: RunRecord, cfg: ExperimentConfig) -> None:
    """Per-dataset mean grids (classifier rows x variant columns) + text page."""
    ok = [c for c in record.cells if not c.error and "ar_estimate" in c.metrics]
    summary_dir = os.path.join(cfg.out_dir, "summary")
    os.makedirs(summary_dir, exist_ok=True)
    lines = [f"config {record.config_hash}", ""]
    classifiers = [name for name, _ in cfg.classifiers]
    for ds_name in sorted({c.dataset for c in record.cells}):
        ds_ok = [c for c in ok if c.dataset == ds_name]
        for metric, fname in (("ar_estimate", "ar_grid"), ("hter", "hter_grid")):
            path = os.path.join(summary_dir, f"{ds_name}_{fname}.csv")
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["classifier"] + list(cfg.variants))
                for clf in classifiers:
                    row = [clf]
                    for variant in cfg.variants:
                        vals = [c.metrics[metric] for c in ds_ok
                                if c.classifier == clf and c.variant == variant]
                        row.append(_fmt(float(np.mean(vals))) if vals else "")
                    writer.writerow(row)
        n_failed = sum(1 for c in record.cells
                       if c.dataset == ds_name and c.error)
        lines.append(f"dataset {ds_name} ({len(ds_ok)} cells ok, "
                     f"{n_failed} failed)")
        for clf in classifiers:
            for variant in cfg.variants:
                vals = [c for c in ds_ok
                        if c.classifier == clf and c.variant == variant]
                if not vals:
                    continue
                ar = float(np.mean([c.metrics["ar_estimate"] for c in vals]))
                hter = float(np.mean([c.metrics["hter"] for c in vals]))
                lines.append(f"  {clf:8s} {variant:8s} "
                             f"mean_ar={ar:.6f} mean_hter={hter:.4f}")
        lines.append("")
    with open(os.path.join(summary_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def regenerate_summary(cfg: ExperimentConfig) -> RunRecord:
    """Rebuild summary files from existing per-dataset report CSVs."""
    reports_dir = os.path.join(cfg.out_dir, "reports")
    if not os.path.isdir(reports_dir):
        raise FileNotFoundError(f"no reports directory at {reports_dir}")
    record = RunRecord(config_hash=cfg.config_hash(), out_dir=cfg.out_dir)
    for ds in cfg.datasets:
        path = os.path.join(reports_dir, ds.name + ".csv")
        if not os.path.exists(path):
            continue
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                cell = CellResult(dataset=row["dataset"], user=row["user"],
                                  classifier=row["classifier"],
                                  variant=row["variant"],
                                  error=row.get("error", ""))
                if not cell.error:
                    cell.metrics = {
                        k: float(row[k]) for k in REPORT_FIELDS[4:-1]
                        if row.get(k, "") != ""}
                record.cells.append(cell)
    if not record.cells:
        raise ValueError("no report rows found; run the experiment first")
    emit_summary(record, cfg)
    return record
