"""``somkit`` command line: stats, train, classify, report, plot.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal error.
Machine-readable JSON summaries go to stdout, diagnostics to stderr, and no
file is written unless the whole command succeeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import traceback
from pathlib import Path

from . import analytics, classification, persistence, preprocessing, training, viz
from .errors import ConfigError, SomError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _commit(outputs: dict) -> None:
    """Write every ``path -> text`` pair, or none of them."""
    staged = []
    try:
        for path, text in outputs.items():
            path = Path(path)
            fd, tmp = tempfile.mkstemp(prefix=".somkit-", dir=path.parent)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise SomError(f"cannot write output: {exc}") from exc


def _emit(obj) -> None:
    print(json.dumps(obj, allow_nan=False))


def _load_input(args) -> preprocessing.Dataset:
    return preprocessing.load_csv(
        args.input,
        has_header=args.header,
        label_column=args.label_column,
        delimiter=args.delimiter,
    )


def cmd_stats(args) -> int:
    ds = _load_input(args)
    _emit({"rows": len(ds), "features": preprocessing.summarize(ds)})
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        cfg = training.TrainingConfig(
            side=args.side,
            presentations=args.presentations,
            initial_learning_rate=args.learning_rate,
            initial_radius=args.radius,
            seed=args.seed,
            sampling=args.sampling,
        )
    except ConfigError as exc:
        raise UsageError(f"somkit train: error: {exc}") from None
    ds = _load_input(args)
    params = preprocessing.fit_normalization(ds)
    model, trace = training.train(preprocessing.normalize(ds, params), cfg, params)
    outputs = {args.output: persistence.model_to_json(model)}
    if args.trace:
        outputs[args.trace] = trace.to_csv_text()
    qe = analytics.quantization_error(model, ds)
    _commit(outputs)
    _emit({"quantization_error": qe, "side": cfg.side, "presentations": cfg.presentations})
    return EXIT_OK


def cmd_classify(args) -> int:
    model = persistence.load_model(args.model)
    ds = _load_input(args)
    a = classification.classify(model, ds)
    _commit({args.output: a.to_csv_text()})
    _emit({"samples": len(a), "activation_density": analytics.activation_density(a)})
    return EXIT_OK


def cmd_report(args) -> int:
    model = persistence.load_model(args.model)
    ds = _load_input(args)
    if ds.dim != model.dim:
        raise SomError(f"model has dimension {model.dim}, input has dimension {ds.dim}")
    if args.assignments:
        a = classification.read_assignments(args.assignments, model.side)
        if len(a) != len(ds):
            raise SomError(f"assignments cover {len(a)} samples, input has {len(ds)}")
    else:
        a = classification.classify(model, ds)
    report = analytics.build_report(model, a, ds)
    doc = report.to_dict()
    _commit({args.output: json.dumps(doc, indent=2, allow_nan=False) + "\n"})
    if args.text:
        sys.stdout.write(report.to_text())
    else:
        _emit(doc["metrics"])
    return EXIT_OK


_NEEDS_ASSIGNMENTS = ("activation-heatmap", "activation-bars")


def cmd_plot(args) -> int:
    if args.kind in _NEEDS_ASSIGNMENTS and not args.assignments:
        raise UsageError(f"somkit plot: error: --kind {args.kind} requires --assignments")
    try:
        spec = viz.PlotSpec(args.kind, args.scale, args.cell_size, args.output)
    except ValueError as exc:
        raise UsageError(f"somkit plot: error: {exc}") from None
    model = persistence.load_model(args.model)
    a = None
    if args.assignments:
        a = classification.read_assignments(args.assignments, model.side)
    if args.kind == "activation-heatmap":
        text = viz.render_heatmap(a.activation_counts, spec)
    elif args.kind == "umatrix-heatmap":
        text = viz.render_heatmap(analytics.u_matrix(model), spec)
    elif args.kind == "activation-bars":
        text = viz.render_bars(classification.activation_histogram(a), spec)
    elif args.kind == "surface-data":
        grid = a.activation_counts if a is not None else analytics.u_matrix(model)
        text = viz.surface_json(grid) + "\n"
    else:
        text = viz.render_codebook_tiles(model, spec)
    _commit({args.output: text})
    _emit({"kind": args.kind, "output": str(args.output)})
    return EXIT_OK


def _add_input_flags(p):
    p.add_argument("--input", required=True, help="CSV file of samples")
    p.add_argument("--header", action="store_true", help="first CSV line holds column names")
    p.add_argument("--label-column", help="column (name or 0-based index) holding labels")
    p.add_argument("--delimiter", default=",", help="CSV field separator (default ',')")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="somkit", description="Train, apply and inspect self-organizing maps.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="per-feature statistics of a CSV file")
    _add_input_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="fit normalization and train a map")
    _add_input_flags(p)
    p.add_argument("--side", type=int, required=True, help="grid side length k (k x k neurons)")
    p.add_argument("--presentations", type=int, required=True, help="total pattern presentations P")
    p.add_argument("--learning-rate", type=float, required=True, help="initial learning rate in (0, 1]")
    p.add_argument("--radius", type=float, help="initial neighbourhood radius (default side/2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sampling", choices=training.SAMPLING_MODES, default="random")
    p.add_argument("--output", required=True, help="model JSON to write")
    p.add_argument("--trace", help="optional training trace CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="assign samples to their best matching units")
    p.add_argument("--model", required=True)
    _add_input_flags(p)
    p.add_argument("--output", required=True, help="assignments CSV to write")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="quality metrics and per-neuron report")
    p.add_argument("--model", required=True)
    _add_input_flags(p)
    p.add_argument("--assignments", help="reuse an assignments CSV instead of reclassifying")
    p.add_argument("--output", required=True, help="report JSON to write")
    p.add_argument("--text", action="store_true", help="print a human-readable table")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("plot", help="SVG plots and surface data")
    p.add_argument("--model", required=True)
    p.add_argument("--assignments", help="assignments CSV (needed for activation plots)")
    p.add_argument("--kind", choices=viz.PLOT_KINDS, required=True)
    p.add_argument("--scale", choices=viz.COLOR_SCALES, default="linear")
    p.add_argument("--cell-size", type=int, default=24)
    p.add_argument(
        "--output", required=True,
        help="file to write; surface-data exports activation counts when "
             "--assignments is given, the U-matrix otherwise",
    )
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SomError as exc:
        print(f"somkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
