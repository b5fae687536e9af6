"""Command-line front end.

Subcommands::

    gaitauth synth-data --users 10 --duration 240 --rate 50 --seed 7 --out walk.csv
    gaitauth featurize  --input walk.csv --out features.csv
    gaitauth train      --config cfg.yaml [--seed N] [--out DIR]
    gaitauth attack     --model out/models/X.model --probes 100000 --seed 1
    gaitauth run        --config cfg.yaml [--seed N] [--out DIR] [--probes N]
    gaitauth report     --config cfg.yaml [--out DIR]

Exit status is 0 on full success, 1 when any experiment cell failed (each
failure is reported on stderr), and 2 for bad invocations or unreadable
configs (argparse uses 2 for usage errors as well).  A config error is
raised before any output directory is created, so failed invocations leave
no partial output trees.
"""

from __future__ import annotations

import argparse
import sys

from ..attackeval import random_vector_attack
from ..classifiers import load_model
from ..dataio import CsvFormat, generate_walkers, load_raw_csv, save_feature_table
from ..features import DEFAULT_BANK, featurize_recordings
from .config import ConfigError, load_config
from .experiment import regenerate_summary, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitauth",
        description="Gait-authentication attack-surface experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="write a synthetic walker corpus")
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--duration", type=float, default=240.0,
                   help="seconds of recording per user")
    p.add_argument("--rate", type=float, default=50.0, help="sample rate in Hz")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("featurize", help="extract feature rows from recordings")
    p.add_argument("--input", required=True, help="recording CSV path")
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--frame-seconds", type=float, default=10.0)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate in Hz (default: derive from timestamps)")

    p = sub.add_parser("train", help="train and save models, no attack")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override output directory")

    p = sub.add_parser("attack", help="random-vector attack on a saved model")
    p.add_argument("--model", required=True, help="saved model path")
    p.add_argument("--probes", type=int, default=100000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threshold", type=float, default=None,
                   help="override the model's stored decision threshold")

    p = sub.add_parser("run", help="full experiment matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--probes", type=int, default=None,
                   help="override attack probe count")

    p = sub.add_parser("report", help="rebuild summaries from existing reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override output directory")
    return parser


def _cmd_synth_data(args) -> int:
    recordings = generate_walkers(n_users=args.users, duration_s=args.duration,
                                  sample_rate_hz=args.rate, seed=args.seed)
    fmt = CsvFormat()
    with open(args.out, "w", newline="") as fh:
        fh.write(",".join([fmt.user, fmt.session, fmt.t,
                           fmt.ax, fmt.ay, fmt.az]) + "\n")
        for rec in recordings:
            for t, ax, ay, az in rec.samples:
                fh.write(f"{rec.user_id},{rec.session_id},"
                         f"{float(t)!r},{float(ax)!r},{float(ay)!r},{float(az)!r}\n")
    n = sum(r.n_samples for r in recordings)
    print(f"wrote {len(recordings)} recordings ({n} samples) to {args.out}")
    return 0


def _cmd_featurize(args) -> int:
    fmt = CsvFormat(sample_rate_hz=args.rate)
    recordings = load_raw_csv(args.input, format_spec=fmt)
    table = featurize_recordings(recordings, frame_s=args.frame_seconds,
                                 overlap_fraction=args.overlap,
                                 bank=DEFAULT_BANK)
    if table.n_rows == 0:
        print("no frames extracted; nothing written", file=sys.stderr)
        return 1
    save_feature_table(table, args.out)
    print(f"wrote {table.n_rows} feature rows ({table.n_cols} columns) "
          f"to {args.out}")
    return 0


def _cmd_attack(args) -> int:
    model = load_model(args.model)
    if args.threshold is not None:
        model.threshold = args.threshold
    estimate, (lo, hi) = random_vector_attack(
        model, n_probes=args.probes, dims=model.feature_dim, seed=args.seed)
    print(f"model={args.model} user={model.user_id} "
          f"family={model.spec.family} threshold={model.threshold!r}")
    print(f"ar_estimate={estimate!r} ci95_lo={lo!r} ci95_hi={hi!r} "
          f"n_probes={args.probes}")
    return 0


def _run_and_report(cfg, attack: bool) -> int:
    record = run_experiment(cfg, attack=attack)
    failed = record.failed_cells
    for cell in failed:
        print(f"FAILED {cell.dataset}/{cell.user}/{cell.classifier}/"
              f"{cell.variant}: {cell.error}", file=sys.stderr)
    print(f"{len(record.cells) - len(failed)}/{len(record.cells)} cells ok; "
          f"outputs in {record.out_dir}")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth-data":
            return _cmd_synth_data(args)
        if args.command == "featurize":
            return _cmd_featurize(args)
        if args.command == "attack":
            return _cmd_attack(args)
        if args.command == "train":
            cfg = load_config(args.config, seed_override=args.seed,
                              out_override=args.out)
            return _run_and_report(cfg, attack=False)
        if args.command == "run":
            cfg = load_config(args.config, seed_override=args.seed,
                              out_override=args.out,
                              probes_override=args.probes)
            return _run_and_report(cfg, attack=True)
        if args.command == "report":
            cfg = load_config(args.config, out_override=args.out)
            record = regenerate_summary(cfg)
            print(f"summaries rebuilt from {len(record.cells)} report rows "
                  f"in {cfg.out_dir}")
            return 0
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
