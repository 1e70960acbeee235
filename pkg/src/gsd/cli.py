"""Command-line interface: train, detect, bench, gen.

Exit codes are stable so shell pipelines can branch on them:

* 0: success (for ``detect``: no drift)
* 1: ``detect`` flagged drift
* 2: data or model error (diagnostics on stderr)
* 3: ``detect`` schema mismatch between model features and batch
* 64: usage error (bad flags or flag values)

All randomness flows from ``--seed``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .bench import (
    PerturbationSpec,
    gen_hyperplane,
    gen_waveform,
    render_results_csv,
    render_results_text,
    run_experiment,
)
from .dataset import load_csv, save_csv
from .detector import (
    DetectorConfig,
    deserialize_model,
    detect,
    serialize_model,
    train,
)
from .errors import GsdError, SchemaMismatchError

EXIT_OK = 0
EXIT_DRIFT = 1
EXIT_DATA_ERROR = 2
EXIT_SCHEMA_MISMATCH = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse parser whose own errors use the usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _usage_error(message: str) -> int:
    print(f"gsd: usage error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _write_or_print(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gsd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gsd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a detector from a labeled CSV")
    p_train.add_argument("--input", required=True, help="labeled CSV path")
    p_train.add_argument("--label-column", required=True,
                         help="label column name or index")
    p_train.add_argument("--model", required=True, help="output model file")
    p_train.add_argument("--n-splits", type=int, default=None,
                         help="ensemble size (default: max(10, n_features))")
    p_train.add_argument("--tau", type=float, default=0.5,
                         help="drifting-split ratio that flags drift (default 0.5)")
    p_train.add_argument("--seed", type=int, default=0)

    p_detect = sub.add_parser("detect", help="check a batch CSV against a model")
    p_detect.add_argument("--model", required=True, help="trained model file")
    p_detect.add_argument("--input", required=True, help="unlabeled batch CSV")
    p_detect.add_argument("--format", choices=("csv", "text"), default="text")
    p_detect.add_argument("--out", default=None, help="write the report here")

    p_bench = sub.add_parser(
        "bench", help="run the four perturbation scenarios and report rates"
    )
    p_bench.add_argument("--dataset", default=None,
                         help="generator name: hyperplane or waveform")
    p_bench.add_argument("--input", default=None, help="labeled CSV path instead")
    p_bench.add_argument("--label-column", default=None,
                         help="label column for --input")
    p_bench.add_argument("--runs", type=int, default=10)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--rows", type=int, default=10000,
                         help="rows per generated dataset")
    p_bench.add_argument("--n-splits", type=int, default=None)
    p_bench.add_argument("--tau", type=float, default=0.5)
    p_bench.add_argument("--kind", choices=("step", "noise"), default=None,
                         help="restrict to one perturbation kind")
    p_bench.add_argument("--target", choices=("most", "least"), default=None,
                         help="restrict to one importance target")
    p_bench.add_argument("--format", choices=("csv", "text"), default="text")
    p_bench.add_argument("--out", default=None)

    p_gen = sub.add_parser("gen", help="materialize a synthetic dataset as CSV")
    p_gen.add_argument("--dataset", required=True,
                       choices=("hyperplane", "waveform"))
    p_gen.add_argument("--rows", type=int, default=10000)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output CSV path")
    return parser


def cmd_train(args) -> int:
    if args.n_splits is not None and args.n_splits < 1:
        return _usage_error(f"--n-splits must be >= 1, got {args.n_splits}")
    if not 0.0 < args.tau <= 1.0:
        return _usage_error(f"--tau must be in (0, 1], got {args.tau}")
    try:
        data = load_csv(args.input, label_column=args.label_column,
                        drop_non_numeric=True)
        model = train(data, n_splits=args.n_splits, tau=args.tau, seed=args.seed)
    except GsdError as e:
        print(f"gsd train: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR
    Path(args.model).write_text(serialize_model(model))

    print(f"model written to {args.model}")
    print(f"splits: {len(model.splits)}  tau: {model.tau}  seed: {model.seed}")
    print(f"{'split':>5}  {'feature':<20} {'alpha':>12}  {'error':>8}")
    for i, s in enumerate(model.splits):
        name = model.feature_names[s.feature_index]
        print(f"{i:>5}  {name:<20} {s.alpha:>12.6g}  {s.error:>8.4f}")
    print("beta tolerances:")
    for f in sorted(model.beta):
        flag = "  (floor fallback)" if f in model.beta_fallback else ""
        print(f"  {model.feature_names[f]:<20} {model.beta[f]:.6g}{flag}")
    return EXIT_OK


def _render_report_text(model, report) -> str:
    lines = [
        f"drift: {'yes' if report.drift else 'no'}",
        f"ratio: {report.ratio:.4f} (gamma={report.gamma} of {len(report.per_split)},"
        f" evaluated={report.evaluated}, tau={model.tau})",
        f"{'feature':<20} {'alpha_train':>12} {'alpha_hat':>12} "
        f"{'delta':>10} {'beta':>10} {'exceeded':>9} {'converged':>10}",
    ]
    for o in report.per_split:
        name = model.feature_names[o.feature_index]
        alpha_hat = f"{o.alpha_hat:.6g}" if o.alpha_hat is not None else "-"
        delta = f"{o.delta:.6g}" if o.delta is not None else "-"
        lines.append(
            f"{name:<20} {o.alpha_train:>12.6g} {alpha_hat:>12} {delta:>10} "
            f"{model.beta[o.feature_index]:>10.4g} "
            f"{str(o.exceeded):>9} {str(o.em_converged):>10}"
        )
    return "\n".join(lines) + "\n"


def _render_report_csv(model, report) -> str:
    lines = [
        "feature,alpha_train,alpha_hat,delta,beta,exceeded,em_converged",
    ]
    for o in report.per_split:
        name = model.feature_names[o.feature_index]
        alpha_hat = repr(o.alpha_hat) if o.alpha_hat is not None else ""
        delta = repr(o.delta) if o.delta is not None else ""
        lines.append(
            f"{name},{o.alpha_train!r},{alpha_hat},{delta},"
            f"{model.beta[o.feature_index]!r},{o.exceeded},{o.em_converged}"
        )
    lines.append(f"# drift={report.drift} gamma={report.gamma} "
                 f"ratio={report.ratio!r} tau={model.tau!r}")
    return "\n".join(lines) + "\n"


def cmd_detect(args) -> int:
    try:
        model = deserialize_model(Path(args.model).read_text())
        batch = load_csv(args.input, label_column=None, drop_non_numeric=True)
    except FileNotFoundError as e:
        print(f"gsd detect: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except GsdError as e:
        print(f"gsd detect: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR
    try:
        report = detect(model, batch)
    except SchemaMismatchError as e:
        print(f"gsd detect: {e}", file=sys.stderr)
        return EXIT_SCHEMA_MISMATCH
    except GsdError as e:
        print(f"gsd detect: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR

    if args.format == "csv":
        _write_or_print(_render_report_csv(model, report), args.out)
    else:
        _write_or_print(_render_report_text(model, report), args.out)
    return EXIT_DRIFT if report.drift else EXIT_OK


def cmd_bench(args) -> int:
    if args.runs < 1:
        return _usage_error(f"--runs must be >= 1, got {args.runs}")
    if args.n_splits is not None and args.n_splits < 1:
        return _usage_error(f"--n-splits must be >= 1, got {args.n_splits}")
    if not 0.0 < args.tau <= 1.0:
        return _usage_error(f"--tau must be in (0, 1], got {args.tau}")
    if (args.dataset is None) == (args.input is None):
        return _usage_error("pass exactly one of --dataset or --input")
    if args.input is not None and args.label_column is None:
        return _usage_error("--input requires --label-column")

    if args.dataset is not None:
        if args.dataset.lower() not in ("hyperplane", "waveform"):
            return _usage_error(f"unknown dataset {args.dataset!r}")
        source = args.dataset.lower()
        name = source
    else:
        source = (args.input, args.label_column)
        name = Path(args.input).stem

    targets = {"most": "most_important", "least": "least_important"}
    kinds = [args.kind] if args.kind else ["noise", "step"]
    wanted = [targets[args.target]] if args.target else list(targets.values())

    config = DetectorConfig(n_splits=args.n_splits, tau=args.tau)
    results = []
    try:
        for target in wanted:
            for kind in kinds:
                spec = PerturbationSpec(kind=kind, target=target)
                results.append(
                    run_experiment(
                        source, spec, n_runs=args.runs, detector_config=config,
                        seed=args.seed, dataset_name=name, n_rows=args.rows,
                    )
                )
    except GsdError as e:
        print(f"gsd bench: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR

    render = render_results_csv if args.format == "csv" else render_results_text
    _write_or_print(render(results), args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.rows < 1:
        return _usage_error(f"--rows must be >= 1, got {args.rows}")
    if args.dataset == "hyperplane":
        data = gen_hyperplane(args.seed, n_rows=args.rows)
    else:
        data = gen_waveform(args.seed, n_rows=args.rows)
    save_csv(data, args.out)
    print(f"{args.dataset} dataset with {data.n_rows} rows x "
          f"{data.n_features} features written to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "detect": cmd_detect,
    "bench": cmd_bench,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return _COMMANDS[args.command](args)


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
