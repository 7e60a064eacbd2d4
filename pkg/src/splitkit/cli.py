"""Command-line interface: ``splitkit split|validate|kfold|bench``.

Exit status: 0 success, 2 bad input or violated contract, 3 solver did not
converge and ``--strict`` was given.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, _accel
from .bench import STUDIES
from .data import DataError, load_csv, write_csv, write_split
from .encoding import SCHEMES
from .solver import SolverConfig
from .splitter import (SPLITTERS, SplitResult, kfold, stratified_split,
                       validation_split)

log = logging.getLogger("splitkit")

EXIT_INPUT = 2
EXIT_NONCONVERGED = 3


def _schema_spec(args):
    spec = {}
    for name in filter(None, (args.categorical or "").split(",")):
        spec[name.strip()] = "categorical"
    for item in args.ordinal or []:
        name, sep, scores = item.partition("=")
        if not sep:
            spec[name.strip()] = "ordinal"
            continue
        try:
            spec[name.strip()] = [float(s) for s in scores.split(",")]
        except ValueError:
            raise DataError(f"bad --ordinal scores in {item!r}") from None
    return spec


def _solver_cfg(args):
    return SolverConfig(n=1, seed=args.seed, max_iter=args.max_iter, tol=args.tol,
                        workers=args.workers)


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--categorical", help="comma-separated columns to treat as categorical")
    p.add_argument("--ordinal", action="append", metavar="COL=s1,s2,...",
                   help="ordinal column with scores for its levels (repeatable)")
    p.add_argument("--coding", choices=SCHEMES, default="helmert")


def _add_solver_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="exit 3 if the solver does not converge")


def _converged(diag, key="converged"):
    return diag.get(key, True)


def cmd_split(args):
    data = load_csv(args.data, _schema_spec(args))
    method = args.method
    if method == "split":
        res = SPLITTERS["split"](data, args.ratio, _solver_cfg(args), args.coding)
    elif method == "random":
        res = SPLITTERS["random"](data, args.ratio, args.seed, args.coding)
    elif method == "stratified":
        if not args.label:
            raise DataError("--method stratified needs --label")
        res = stratified_split(data, args.ratio, args.label, args.seed, args.coding)
    else:
        res = SPLITTERS[method](data, args.ratio, args.coding)
    write_split(data, res, args.test_out, args.train_out)
    if args.json:
        res.to_json(args.json)
    log.info("%s: %d test / %d train rows", method, len(res.test_indices), len(res.train_indices))
    if args.strict and not _converged(res.diagnostics):
        log.error("support points did not converge in %d iterations", args.max_iter)
        return EXIT_NONCONVERGED
    return 0


def cmd_validate(args):
    data = load_csv(args.data, _schema_spec(args))
    existing = SplitResult.from_json(args.split)
    res = validation_split(data, existing, args.n_valid, _solver_cfg(args), args.coding)
    if args.json:
        res.to_json(args.json)
    else:
        print(res.to_json())
    if args.valid_out:
        write_csv(data, res.valid_indices, args.valid_out)
    if args.train_out:
        write_csv(data, res.train_indices, args.train_out)
    if args.strict and not _converged(res.diagnostics, "valid_converged"):
        return EXIT_NONCONVERGED
    return 0


def cmd_kfold(args):
    data = load_csv(args.data, _schema_spec(args))
    existing = SplitResult.from_json(args.split)
    existing.check_partition(data.n_rows)
    folds = kfold(data, existing.train_indices, args.k, _solver_cfg(args), args.coding)
    text = json.dumps(folds.to_dict(), indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_bench(args):
    kwargs = {"seed": args.seed, "max_iter": args.max_iter}
    if args.study == "bias":
        kwargs.update(reps=args.reps or 100, fixed_data=args.fixed_data)
    elif args.study == "marginal":
        kwargs.update(reps=args.reps or 20)
    elif args.reps:
        kwargs["replicates_per_level"] = args.reps
    report = STUDIES[args.study](**kwargs)
    if args.out:
        report.to_csv(args.out)
        log.info("wrote %s (+ .json sidecar)", args.out)
    else:
        sys.stdout.write(report.to_csv())
    for row in report.summary:
        log.info("%s", row)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="splitkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="split a CSV into test and train files")
    _add_data_flags(p)
    p.add_argument("--ratio", type=float, required=True, help="fraction of rows for testing")
    p.add_argument("--test-out", required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--method", choices=sorted(SPLITTERS), default="split")
    p.add_argument("--label", help="label column for --method stratified")
    p.add_argument("--json", help="write the split record here")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("validate", help="carve a validation set out of an existing split")
    _add_data_flags(p)
    p.add_argument("--split", required=True, help="split record written by `split --json`")
    p.add_argument("--n-valid", type=int, required=True)
    p.add_argument("--json")
    p.add_argument("--valid-out")
    p.add_argument("--train-out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("kfold", help="divide the training rows of a split into K folds")
    _add_data_flags(p)
    p.add_argument("--split", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--json")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_kfold)

    p = sub.add_parser("bench", help="run a reproduction study")
    p.add_argument("study", choices=sorted(STUDIES))
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--fixed-data", action="store_true", help="bias study: one dataset for all reps")
    p.add_argument("--out", help="CSV report path (JSON sidecar written next to it)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    log.debug("kernel backend: %s", _accel.backend())
    try:
        return args.func(args)
    except DataError as exc:
        print(f"splitkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
