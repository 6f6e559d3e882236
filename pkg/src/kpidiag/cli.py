"""``kpidiag`` command-line driver.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error. The
first line on stderr of a failed run is ``ERROR <code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .data import NOMINAL, NUMERIC, Attribute, read_dataset, write_csv, write_dataset
from .errors import DataError, KpiDiagError, UsageError
from .evaluation import compare, cross_validate
from .kpi import MODES, TABLE1, DEFAULT_MAPPING, label_dataset, load_config
from .learners import (ALGORITHMS, TrainParams, canonical_algorithm, load_model,
                       predict_dataset, render_model, save_model, train)
from .localization import (DEFAULT_LOCATIONS, localize, norm_gap, render_gaps,
                           render_localization)
from .synth import GeneratorConfig, describe, generate

DEFAULT_SEED = 7
DEFAULT_FOLDS = 10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path):
    try:
        return read_dataset(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise DataError(f"{path} is not UTF-8 text") from None


def _write_text(path, text, out):
    if path in (None, "-"):
        out.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


def _write_dataset(ds, path):
    try:
        write_dataset(ds, path)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


def _params(pairs):
    overrides = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"parameter {item!r} is not of the form key=value")
        overrides[key.strip().replace("-", "_")] = value.strip()
    return TrainParams.from_overrides(overrides)


def _floats(text, what, n=None):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} values")
    return vals


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args, out):
    kw = {"n": args.n, "seed": args.seed}
    if args.priors:
        kw["priors"] = _floats(args.priors, "--priors", 3)
    if args.noise is not None:
        kw["companion_noise"] = args.noise
    if args.jitter is not None:
        kw["boundary_jitter"] = args.jitter
    config = GeneratorConfig(**kw)
    _write_dataset(generate(config), args.out)
    if args.manifest:
        _write_text(args.manifest, describe(config), out)


def cmd_label(args, out):
    ds = _read(args.inp)
    thresholds, mapping = load_config(args.config) if args.config else (TABLE1, DEFAULT_MAPPING)
    _write_dataset(label_dataset(ds, mapping, thresholds, args.mode), args.out)


def cmd_train(args, out):
    ds = _read(args.inp)
    model = train(args.algo, ds, _params(args.params))
    try:
        save_model(model, args.model)
    except OSError as exc:
        raise UsageError(f"cannot write {args.model}: {exc.strerror or exc}") from None


def _emit_report(obj, args, out):
    text = obj.to_json() if args.format == "json" else obj.to_text()
    _write_text(args.report, text, out)


def cmd_eval(args, out):
    ds = _read(args.inp)
    report = cross_validate(args.algo, ds, _params(args.params), args.folds, args.seed)
    _emit_report(report, args, out)


def cmd_compare(args, out):
    ds = _read(args.inp)
    algos = _names(args.algos) if args.algos else list(ALGORITHMS)
    _emit_report(compare(algos, ds, _params(args.params), args.folds, args.seed), args, out)


def cmd_rules(args, out):
    out.write(render_model(load_model(args.model)))


def cmd_predict(args, out):
    model = load_model(args.model)
    ds = _read(args.inp)
    pred, P = predict_dataset(model, ds)
    classes = model.classes
    res = ds.with_column(Attribute("predicted", NOMINAL, tuple(classes)), pred.astype(float))
    res = res.with_column(Attribute("p_max", NUMERIC), P.max(axis=1))
    for c, name in enumerate(classes):
        res = res.with_column(Attribute(f"p_{name}", NUMERIC), P[:, c])
    if args.out in (None, "-"):
        out.write(write_csv(res))
    else:
        _write_dataset(res, args.out)


def cmd_localize(args, out):
    ds = _read(args.inp)
    attrs = _names(args.by) if args.by else list(DEFAULT_LOCATIONS)
    report = localize(ds, attrs)
    text = report.to_json() if args.format == "json" else render_localization(report)
    _write_text(args.out, text, out)


def cmd_explain(args, out):
    model = load_model(args.model)
    ds = _read(args.inp)
    X = model.schema.align(ds)
    pred = model.predict_indices(X)
    norm = model.classes.index("NORM") if "NORM" in model.classes else None
    records, lines = [], []
    for i in range(ds.n_instances):
        if norm is not None and pred[i] == norm:
            continue
        gaps = norm_gap(X[i], model)
        shown = gaps if args.all else gaps[:1]
        records.append({"row": i + 1, "predicted": model.classes[int(pred[i])],
                        "gaps": [g.to_dict(model.schema) for g in shown]})
        lines.append(f"row {i + 1}: predicted {model.classes[int(pred[i])]}")
        lines.append(render_gaps(shown, model, X[i]).rstrip("\n"))
        lines.append("")
    if args.format == "json":
        text = json.dumps({"instances": records}, indent=1) + "\n"
    else:
        text = "\n".join(lines) + ("\n" if lines else "")
    _write_text(args.out, text, out)


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = _Parser(prog="kpidiag", description="KPI alarm labeling, classifier induction, "
                                             "evaluation and fault localization.")
    p.add_argument("--version", action="version", version=f"kpidiag {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="generate a labeled synthetic KPI dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=2100)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--priors", help="WARN,CR,NORM probabilities")
    s.add_argument("--noise", type=float, help="companion noise multiplier")
    s.add_argument("--jitter", type=float, help="boundary jitter probability")
    s.add_argument("--manifest", help="also write the generation manifest here")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("label", help="derive KPIAlarms from the driver KPIs")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=MODES, default="severity-max")
    s.add_argument("--config", help="threshold / mapping file")
    s.set_defaults(func=cmd_label)

    algo_help = "one of " + ", ".join(ALGORITHMS)
    s = sub.add_parser("train", help="train a classifier and save it as JSON")
    s.add_argument("--algo", required=True, help=algo_help)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--params", nargs="*", metavar="K=V")
    s.set_defaults(func=cmd_train)

    for name, func, helptext in (("eval", cmd_eval, "cross-validate one classifier"),
                                 ("compare", cmd_compare, "cross-validate several classifiers")):
        s = sub.add_parser(name, help=helptext)
        if name == "eval":
            s.add_argument("--algo", required=True, help=algo_help)
        else:
            s.add_argument("--algos", help="comma-separated; default all")
        s.add_argument("--in", dest="inp", required=True)
        s.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
        s.add_argument("--seed", type=int, default=DEFAULT_SEED)
        s.add_argument("--report", help="write the report here instead of stdout")
        s.add_argument("--format", choices=("text", "json"), default="text")
        s.add_argument("--params", nargs="*", metavar="K=V")
        s.set_defaults(func=func)

    s = sub.add_parser("rules", help="print a saved model")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_rules)

    s = sub.add_parser("predict", help="append predictions to a dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("localize", help="fault localization tables and ranking")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--by", help="comma-separated nominal attributes (default Period,BSC)")
    s.add_argument("--out")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("explain", help="NORM-gap for every non-NORM prediction")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out")
    s.add_argument("--all", action="store_true", help="list every NORM rule, not just the best")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_explain)
    return p


def run(argv=None, out=None, err=None):
    """Run the CLI and return the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "algo", None) is not None:
            args.algo = canonical_algorithm(args.algo)
        args.func(args, out)
    except KpiDiagError as exc:
        err.write(f"ERROR {exc.exit_code}: {exc}\n")
        return exc.exit_code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return 0


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:  # e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)
