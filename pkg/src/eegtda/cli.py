"""Command-line entry point.

One subcommand per pipeline stage plus synth, plot-data, and run-all.
Configuration comes from an optional JSON file with flag overrides; the
EEGTDA_OUT environment variable overrides the output directory. Failures
print a machine-parsable JSON object {"error": <category>, "message":
...} to stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from .config import load_config
from .errors import EegTdaError
from .store import Store


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", metavar="FILE", help="JSON config file")
    g.add_argument("--out", dest="output_dir", metavar="DIR",
                   help="store directory (default eegtda-out)")
    g.add_argument("--montage", help="builtin montage name or montage JSON path")
    g.add_argument("--method", choices=["dyca", "pca"], help="reduction method")
    g.add_argument("--n", type=int, help="trajectory dimension")
    g.add_argument("--m", type=int, help="DyCA eigenvector count")
    g.add_argument("--eig-threshold", dest="eig_threshold", type=float,
                   help="pick DyCA eigenvectors by threshold instead of count")
    g.add_argument("--window-seconds", dest="window_seconds", type=float)
    g.add_argument("--csv-rate", dest="csv_rate", type=float,
                   help="sampling rate assumed for CSV inputs")
    g.add_argument("--max-length", dest="max_length", type=float,
                   help="Rips filtration cutoff (default: segment diameter)")
    g.add_argument("--landscape-levels", dest="landscape_levels", type=int)
    g.add_argument("--split-fraction", dest="split_fraction", type=float)
    g.add_argument("--folds", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true",
                   help="recompute this stage even when its outputs are current")
    return p


_OVERRIDE_KEYS = (
    "output_dir", "montage", "method", "n", "m", "eig_threshold",
    "window_seconds", "csv_rate", "max_length", "landscape_levels",
    "split_fraction", "folds", "seed", "workers",
)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="eegtda",
        description="EEG segment classification through dimension reduction "
                    "and persistent homology",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic corpus as ingestible CSVs")
    p.add_argument("--n-pos", type=int, required=True)
    p.add_argument("--n-neg", type=int, required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="read EDF/CSV recordings, montage, segment")
    p.add_argument("inputs", nargs="+", metavar="FILE")
    p.add_argument("--labels", metavar="FILE",
                   help="CSV of source_id,start_sample,label")

    for name, blurb in (
        ("reduce", "project segments to low-dimensional trajectories"),
        ("topo", "compute persistence diagrams and landscapes"),
        ("features", "assemble the 40-column feature matrix"),
        ("train", "grid-search and train the classifier"),
        ("eval", "score the held-out split"),
    ):
        sub.add_parser(name, parents=[common], help=blurb)

    p = sub.add_parser("plot-data", parents=[common],
                       help="export one segment's trajectory and H1 landscape")
    p.add_argument("--ref", required=True, metavar="SOURCE:START")
    p.add_argument("--plot-out", dest="plot_out", metavar="DIR")

    p = sub.add_parser("run-all", parents=[common],
                       help="chain synth/ingest through eval")
    p.add_argument("inputs", nargs="*", metavar="FILE")
    p.add_argument("--labels", metavar="FILE")
    p.add_argument("--n-pos", type=int, default=0)
    p.add_argument("--n-neg", type=int, default=0)
    return parser


def _skip_or_count(name: str, result, unit="segments") -> None:
    if result is None:
        print(f"{name}: outputs are current, skipped (--force recomputes)")
    else:
        print(f"{name}: {result} {unit}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS}
        cfg = load_config(args.config, overrides=overrides)
        store = Store(cfg.output_dir)
        return _dispatch(args, cfg, store)
    except EegTdaError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}),
              file=sys.stderr)
        return 1


def _dispatch(args, cfg, store) -> int:
    cmd = args.command
    if cmd == "synth":
        paths, labels = pipeline.stage_synth(store, cfg, args.n_pos, args.n_neg)
        print(f"synth: wrote {len(paths)} recordings and {labels}")
    elif cmd == "ingest":
        n = pipeline.stage_ingest(store, cfg, args.inputs, args.labels,
                                  force=args.force)
        print(f"ingest: {n} segments into {store.root}")
    elif cmd == "reduce":
        _skip_or_count("reduce", pipeline.stage_reduce(store, cfg, args.force))
    elif cmd == "topo":
        _skip_or_count("topo", pipeline.stage_topo(store, cfg, args.force))
    elif cmd == "features":
        _skip_or_count("features",
                       pipeline.stage_features(store, cfg, args.force))
    elif cmd == "train":
        info = pipeline.stage_train(store, cfg, args.force)
        if info is None:
            print("train: outputs are current, skipped (--force recomputes)")
        else:
            print(f"train: {info['best_kernel']} C={info['best_c']} "
                  f"cv_accuracy={info['cv_accuracy']:.4f} "
                  f"train_accuracy={info['train_accuracy']:.4f}")
    elif cmd == "eval":
        doc = pipeline.stage_eval(store, cfg, args.force)
        if doc is None:
            print("eval: outputs are current, skipped (--force recomputes)")
        else:
            print(store.report_txt_path.read_text(encoding="utf-8"), end="")
    elif cmd == "plot-data":
        traj, ls = pipeline.plot_data(store, cfg, args.ref, args.plot_out)
        print(f"plot-data: wrote {traj} and {ls}")
    elif cmd == "run-all":
        counts = pipeline.run_all(
            store, cfg,
            inputs=args.inputs or None,
            labels_path=args.labels,
            n_pos=args.n_pos, n_neg=args.n_neg,
            force=args.force,
        )
        print(f"run-all: {counts['ingest']} segments, "
              f"eval accuracy {counts['accuracy']:.4f}")
        print(store.report_txt_path.read_text(encoding="utf-8"), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
