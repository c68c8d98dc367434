"""Command-line front end.

    icpnn run      repeated k-fold evaluation, writes report files
    icpnn fit      train once on a whole dataset, write a model bundle
    icpnn predict  intervals for new rows from a bundle

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import conformal
from .artifacts import FittedBundle, load_bundle, save_bundle
from .data import (
    SplitPlan,
    apply_scaling,
    fit_scaling,
    is_calibration_size,
    kfold_plan,
    load_csv,
    read_index_file,
    split_icp,
    write_index_file,
)
from .errors import ICPError, InsufficientCalibrationError, ParseError, UsageError
from .evaluation import (
    DEFAULT_DELTAS,
    Measure,
    boxplot_csv,
    format_table,
    report_to_kv,
    run_experiments,
)
from .regressors import MlpConfig, fit_residual_model, predict, predict_mu, train_mlp

log = logging.getLogger("icpnn")

# fixed offsets so that one --seed drives every random draw
SPLIT_SEED_OFFSET = 0
MLP_SEED_OFFSET = 1
ICP_SEED_OFFSET = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _label_column(value: str) -> int | str:
    try:
        return int(value)
    except ValueError:
        return value


def _add_data_args(p):
    p.add_argument("--data", required=True, type=Path, help="numeric CSV file")
    p.add_argument("--label-column", type=_label_column, default=-1,
                   help="label column index or header name (default: last)")
    hdr = p.add_mutually_exclusive_group()
    hdr.add_argument("--header", dest="header", action="store_true", default=None)
    hdr.add_argument("--no-header", dest="header", action="store_false")


def _add_model_args(p):
    p.add_argument("--q", type=int, required=True, help="calibration size, of the form 100n-1")
    p.add_argument("--hidden", type=int, required=True, help="hidden tanh units")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="icpnn", description="Inductive conformal prediction with neural network regression.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="repeated k-fold evaluation")
    _add_data_args(run)
    _add_model_args(run)
    run.add_argument("--k", type=int, required=True, help="folds")
    run.add_argument("--repeats", type=int, default=10)
    run.add_argument("--measure", choices=("absolute", "normalized", "all"), default="absolute")
    run.add_argument("--beta", type=float, nargs="+", default=None,
                     help="beta values for the normalized measure (default 0; 'all' uses 0 and 0.5)")
    run.add_argument("--delta", type=float, nargs="+", default=list(DEFAULT_DELTAS))
    run.add_argument("--splits", type=Path, help="reuse fold assignments from an index file")
    run.add_argument("--jobs", type=int, default=1, help="concurrent fold executions")
    run.add_argument("--out", type=Path, default=Path("results"))

    fit = sub.add_parser("fit", help="train on the whole dataset and write a model bundle")
    _add_data_args(fit)
    _add_model_args(fit)
    fit.add_argument("--measure", choices=("absolute", "normalized"), default="absolute")
    fit.add_argument("--beta", type=float, default=0.0)
    fit.add_argument("--out", type=Path, required=True, help="bundle directory")

    pr = sub.add_parser("predict", help="prediction intervals from a model bundle")
    pr.add_argument("--model", type=Path, required=True, help="bundle directory from 'fit'")
    src = pr.add_mutually_exclusive_group(required=True)
    src.add_argument("--x", help="one comma-separated attribute vector")
    src.add_argument("--data", type=Path, help="CSV of attribute rows")
    pr.add_argument("--label-column", type=_label_column, default=None,
                    help="drop this column from --data before predicting")
    pr.add_argument("--confidence", type=float, default=0.95)
    pr.add_argument("--out", type=Path, help="write CSV here instead of stdout")
    return ap


def _delta_from_confidence(confidence: float) -> float:
    if not 0 < confidence < 1:
        raise UsageError(f"confidence must lie in (0, 1), got {confidence}")
    return float(1 - Decimal(str(confidence)))


def _check_q(q: int) -> None:
    if not is_calibration_size(q):
        raise UsageError(f"--q {q} rejected: calibration size must have the form 100n-1 (99, 199, 299, ...)")


def _measures(args) -> list[Measure]:
    if args.measure == "absolute":
        return [Measure("absolute")]
    betas = args.beta if args.beta is not None else ([0.0] if args.measure == "normalized" else [0.0, 0.5])
    ms = [Measure("normalized", b) for b in betas]
    return ([Measure("absolute")] if args.measure == "all" else []) + ms


def _mlp_config(args) -> MlpConfig:
    return MlpConfig(hidden_units=args.hidden, max_epochs=args.max_epochs, restarts=args.restarts,
                     patience=args.patience, seed=args.seed + MLP_SEED_OFFSET)


def cmd_run(args) -> int:
    _check_q(args.q)
    for d in args.delta:
        if not 0 < d < 1:
            raise UsageError(f"--delta {d} must lie in (0, 1)")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    ds = load_csv(args.data, args.label_column, args.header)
    plan = SplitPlan(k=args.k, q=args.q, repeats=args.repeats, seed=args.seed + SPLIT_SEED_OFFSET)
    folds = read_index_file(args.splits) if args.splits else kfold_plan(len(ds), plan)
    if args.splits and (len(folds) != plan.repeats or len(folds[0]) != plan.k):
        raise ParseError(f"{args.splits}: fold layout does not match --k {plan.k} --repeats {plan.repeats}")
    metadata = {
        "dataset": args.data.name, "n_examples": len(ds), "n_attributes": ds.n_attributes,
        "k": plan.k, "repeats": plan.repeats, "q": plan.q, "hidden_units": args.hidden,
        "restarts": args.restarts, "seed": args.seed,
    }
    measures = _measures(args)
    reports = run_experiments(ds, _mlp_config(args), plan, measures, args.delta,
                              jobs=args.jobs, folds=folds, metadata=metadata)
    ordered = [reports[m.label] for m in measures]

    args.out.mkdir(parents=True, exist_ok=True)
    table = format_table(ordered)
    (args.out / "report.txt").write_text(table)
    (args.out / "report.kv").write_text(report_to_kv(ordered))
    (args.out / "boxplot.csv").write_text(boxplot_csv(ordered))
    write_index_file(args.out / "splits.txt", folds)
    sys.stdout.write(table)
    return 0


def fit_bundle(ds, q: int, config: MlpConfig, measure: Measure, seed: int) -> FittedBundle:
    scaling = fit_scaling(ds)
    proper, calib = split_icp(apply_scaling(scaling, ds), q, seed)
    model = train_mlp(proper, config)
    cal_hat = predict(model, calib.attributes)
    residual = None
    if measure.kind == "normalized":
        residual = fit_residual_model(proper, model)
        scores = conformal.scores_normalized(calib.labels, cal_hat,
                                             predict_mu(residual, calib.attributes), measure.beta)
    else:
        scores = conformal.scores_absolute(calib.labels, cal_hat)
    return FittedBundle(measure, scaling, model, residual, conformal.build_calibration(scores))


def cmd_fit(args) -> int:
    _check_q(args.q)
    ds = load_csv(args.data, args.label_column, args.header)
    bundle = fit_bundle(ds, args.q, _mlp_config(args), Measure(args.measure, args.beta),
                        args.seed + ICP_SEED_OFFSET)
    save_bundle(bundle, args.out)
    print(f"wrote model bundle to {args.out} (q={bundle.calibration.q}, measure={bundle.measure.label})")
    return 0


def cmd_predict(args) -> int:
    delta = _delta_from_confidence(args.confidence)
    bundle = load_bundle(args.model)
    if args.x is not None:
        try:
            X = np.array([[float(t) for t in args.x.split(",")]])
        except ValueError:
            raise UsageError(f"--x must be comma-separated numbers, got {args.x!r}") from None
    else:
        if args.label_column is None:
            ds = load_csv(args.data, label_column=-1)
            X = np.column_stack([ds.attributes, ds.labels])
        else:
            X = load_csv(args.data, args.label_column).attributes
    try:
        y_hat, lo, hi = bundle.intervals(X, delta)
    except InsufficientCalibrationError as exc:
        raise InsufficientCalibrationError(
            f"{exc}; refit with a larger --q or request a lower confidence"
        ) from exc
    lines = ["prediction,lower,upper"] + [f"{p!r},{a!r},{b!r}" for p, a, b in zip(y_hat.tolist(), lo.tolist(), hi.tolist())]
    text = "\n".join(lines) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"run": cmd_run, "fit": cmd_fit, "predict": cmd_predict}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ICPError as exc:
        print(f"icpnn {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"icpnn {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
