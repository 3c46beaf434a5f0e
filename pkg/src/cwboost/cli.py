"""Batch command-line front end: train, predict, and benchmark.

The CLI is a thin shell over the library: every number it prints can be
recomputed from the model/trace files it writes.  Exit codes: 0 success,
1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import tempfile

import numpy as np

from .data_io import DataError, load_csv, load_libsvm, load_model, \
    save_model, split
from .model import TrainConfig, predict_batch
from .training import train

ALGORITHM_KEYS = {
    "cw": "class_wise",
    "shared": "shared",
    "cw-stagewise": "class_wise_stagewise",
}

STAGEWISE_C = 1e8


def _add_data_flags(p, label_col_required: bool):
    p.add_argument("--data", required=True, help="input data file")
    p.add_argument("--format", required=True, choices=("csv", "libsvm"),
                   dest="data_format", help="input data format")
    p.add_argument("--label-col", default=None,
                   help="CSV label column: a header name, or a 0-based index "
                        "for headerless files" +
                        ("" if label_col_required else " (optional)"))


def _add_train_flags(p):
    p.add_argument("--C", type=float, default=None,
                   help="regularization strength (default 1e4; "
                        "cw-stagewise always uses 1e8)")
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="solver KKT tolerance (default 0.1)")
    p.add_argument("--tau-max", type=int, default=None,
                   help="max solver working-set iterations (default 2; "
                        "must be 1 for cw-stagewise)")
    p.add_argument("--iterations", type=int, default=500,
                   help="max boosting iterations (default 500)")
    p.add_argument("--cg-tol", type=float, default=1e-5,
                   help="relative objective-change stop tolerance (default 1e-5)")
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwboost",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write model + trace files")
    _add_data_flags(p, label_col_required=True)
    p.add_argument("--algorithm", required=True, choices=tuple(ALGORITHM_KEYS),
                   help="boosting variant")
    _add_train_flags(p)
    p.add_argument("--test", default=None, help="optional held-out data file")
    p.add_argument("--model-out", required=True, help="output model JSON path")
    p.add_argument("--trace-out", required=True, help="output trace NDJSON path")
    p.add_argument("--zero-timings", action="store_true",
                   help="write 0 for the trace timing fields (byte-reproducible "
                        "trace files across identical runs)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write one predicted label token per row")
    p.add_argument("--model", required=True, help="model JSON file")
    _add_data_flags(p, label_col_required=False)
    p.add_argument("--has-header", action="store_true",
                   help="skip a header row in feature-only CSV input")
    p.add_argument("--out", required=True, help="output path, one token per line")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark",
                       help="compare algorithms over repeated stratified splits")
    _add_data_flags(p, label_col_required=True)
    p.add_argument("--test-fraction", type=float, default=0.25,
                   help="held-out fraction per repeat (default 0.25)")
    p.add_argument("--algorithms", default="cw,shared",
                   help="comma-separated subset of cw,shared,cw-stagewise")
    p.add_argument("--repeats", type=int, default=5,
                   help="independent repeats per algorithm (default 5)")
    _add_train_flags(p)
    p.add_argument("--out-dir", required=True, help="directory for traces and summaries")
    p.set_defaults(func=cmd_benchmark)
    return parser


def _load_labeled(args, parser, path):
    if args.data_format == "csv":
        if args.label_col is None:
            parser.error("--label-col is required for --format csv")
        try:
            label_idx = int(args.label_col)
        except ValueError:
            return load_csv(path, args.label_col, has_header=True)
        return load_csv(path, label_idx, has_header=False)
    return load_libsvm(path)


def _resolve_config(args, parser, algorithm_key) -> TrainConfig:
    algorithm = ALGORITHM_KEYS[algorithm_key]
    if algorithm == "class_wise_stagewise":
        if args.tau_max not in (None, 1):
            parser.error("--tau-max must be 1 with cw-stagewise")
        tau_max = 1
        C = STAGEWISE_C
    else:
        tau_max = 2 if args.tau_max is None else args.tau_max
        C = 1e4 if args.C is None else args.C
    try:
        return TrainConfig(C=C, epsilon=args.epsilon, tau_max=tau_max,
                           max_cg_iterations=args.iterations,
                           cg_rel_tolerance=args.cg_tol,
                           algorithm=algorithm, rng_seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_train(args, parser) -> int:
    config = _resolve_config(args, parser, args.algorithm)
    dataset, label_map = _load_labeled(args, parser, args.data)
    test_set = None
    if args.test is not None:
        test_set, test_map = _load_labeled(args, parser, args.test)
        if test_map.tokens != label_map.tokens:
            raise DataError(
                f"test labels {test_map.tokens} do not match "
                f"training labels {label_map.tokens}")
    model, trace = train(dataset, config, test_set=test_set)
    save_model(args.model_out, model, label_map)
    _atomic_write(args.trace_out, trace.to_ndjson(zero_timings=args.zero_timings))
    last = trace.records[-1]
    print(f"final train error: {last.train_error:.6f}")
    if last.test_error is not None:
        print(f"final test error: {last.test_error:.6f}")
    return 0


def _load_features_only(path, data_format, has_header):
    if data_format == "libsvm":
        dataset, _ = load_libsvm(path)
        return dataset.features
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: file is empty")
    if has_header:
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows after the header")
    width = len(rows[0])
    features = np.empty((len(rows), width))
    first = 2 if has_header else 1
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + first} has {len(row)} cells, "
                            f"expected {width}")
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {r + first}, column {c + 1}: "
                                f"cannot parse {cell!r} as a number") from None
            if not math.isfinite(value):
                raise DataError(f"{path}: row {r + first}, column {c + 1}: "
                                f"non-finite value {cell!r}")
            features[r, c] = value
    return features


def cmd_predict(args, parser) -> int:
    model, label_map = load_model(args.model)
    if args.label_col is not None and args.data_format == "csv":
        dataset, _ = _load_labeled(args, parser, args.data)
        features = dataset.features
    else:
        features = _load_features_only(args.data, args.data_format, args.has_header)
    if features.shape[1] != model.num_features:
        raise DataError(
            f"{args.data}: {features.shape[1]} features, model expects "
            f"{model.num_features}")
    indices = predict_batch(model, features)
    if label_map is not None:
        tokens = [label_map.to_token(int(i)) for i in indices]
    else:
        tokens = [str(int(i)) for i in indices]
    _atomic_write(args.out, "".join(t + "\n" for t in tokens))
    return 0


def cmd_benchmark(args, parser) -> int:
    keys = [k.strip() for k in args.algorithms.split(",") if k.strip()]
    if not keys:
        parser.error("--algorithms must name at least one algorithm")
    for k in keys:
        if k not in ALGORITHM_KEYS:
            parser.error(f"unknown algorithm {k!r}; choose from "
                         f"{','.join(ALGORITHM_KEYS)}")
    if args.repeats < 1:
        parser.error("--repeats must be >= 1")
    if not 0.0 < args.test_fraction < 1.0:
        parser.error("--test-fraction must be in (0, 1)")

    dataset, _ = _load_labeled(args, parser, args.data)
    os.makedirs(args.out_dir, exist_ok=True)

    summary_rows = []
    curve_rows = []
    for key in keys:
        config_proto = _resolve_config(args, parser, key)
        traces = []
        for r in range(args.repeats):
            train_set, test_set = split(dataset, 1.0 - args.test_fraction,
                                        seed=args.seed + r)
            config = TrainConfig(C=config_proto.C, epsilon=config_proto.epsilon,
                                 tau_max=config_proto.tau_max,
                                 max_cg_iterations=config_proto.max_cg_iterations,
                                 cg_rel_tolerance=config_proto.cg_rel_tolerance,
                                 algorithm=config_proto.algorithm,
                                 rng_seed=args.seed + r)
            _, trace = train(train_set, config, test_set=test_set)
            traces.append(trace)
            _atomic_write(os.path.join(args.out_dir, f"trace_{key}_r{r}.ndjson"),
                          trace.to_ndjson())
        finals = [t.records[-1] for t in traces]
        test_errors = np.array([rec.test_error for rec in finals])
        summary_rows.append({
            "algorithm": key,
            "repeats": args.repeats,
            "test_error_mean": float(test_errors.mean()),
            "test_error_std": float(test_errors.std()),
            "total_s_mean": float(np.mean([rec.total_ms for rec in finals]) / 1000.0),
            "solver_s_mean": float(np.mean(
                [sum(rec.solver_ms for rec in t.records) for t in traces]) / 1000.0),
            "stumps_total_mean": float(np.mean(
                [sum(rec.stumps_per_class) for rec in finals])),
        })
        max_iter = max(len(t.records) for t in traces)
        for i in range(max_iter):
            recs = [t.records[i] for t in traces if len(t.records) > i]
            errs = np.array([rec.test_error for rec in recs])
            curve_rows.append({
                "algorithm": key,
                "iter": i + 1,
                "repeats": len(recs),
                "test_error_mean": float(errs.mean()),
                "test_error_std": float(errs.std()),
                "train_error_mean": float(np.mean([rec.train_error for rec in recs])),
                "objective_mean": float(np.mean([rec.objective for rec in recs])),
                "solver_ms_mean": float(np.mean([rec.solver_ms for rec in recs])),
                "total_ms_mean": float(np.mean([rec.total_ms for rec in recs])),
                "stumps_total_mean": float(np.mean(
                    [sum(rec.stumps_per_class) for rec in recs])),
            })

    def _csv_text(rows):
        import io
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    _atomic_write(os.path.join(args.out_dir, "summary.csv"), _csv_text(summary_rows))
    _atomic_write(os.path.join(args.out_dir, "curves.csv"), _csv_text(curve_rows))
    for row in summary_rows:
        print(f"{row['algorithm']}: test error {row['test_error_mean']:.4f} "
              f"+- {row['test_error_std']:.4f}, total {row['total_s_mean']:.2f}s, "
              f"solver {row['solver_s_mean']:.2f}s")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, IndexError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
