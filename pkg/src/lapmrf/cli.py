"""Command-line entry point.

``lapmrf run`` (the default when the first argument is a flag) runs the
experiment grid and writes per-fit and summary CSV files. ``sample``,
``fit`` and ``check`` expose the individual stages.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import MRFError
from .estimation import fit_ml, fit_pl, write_result
from .graph import MODEL_KINDS, build_model
from .harness import (ESTIMATORS, ExperimentConfig, aggregate, derive_seed, run_experiment,
                      write_rows, write_summary)
from .lap import MERGE_RULES, fit_lap
from .model import random_model, read_model, write_model
from .optimize import OptimizerConfig
from .sampling import SamplerConfig, gibbs_sample, read_csv, write_csv

SUBCOMMANDS = ("run", "sample", "fit", "check")


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _estimators(text: str) -> tuple:
    names = tuple(v.strip().lower() for v in text.split(",") if v.strip())
    bad = [n for n in names if n not in ESTIMATORS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
    return names


def _model_args(p, required=True):
    p.add_argument("--model", choices=MODEL_KINDS, required=required)
    p.add_argument("--dims", type=_ints, required=required, help="a[,b[,c]]")


def _sampler_args(p):
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--thin", type=int, default=10)


def _fit_args(p):
    p.add_argument("--merge", choices=MERGE_RULES, default="owner")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--backend", choices=("brute", "ve", "auto"), default="auto")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lapmrf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run the estimator comparison experiment")
    _model_args(run, required=False)
    run.set_defaults(model="grid2d", dims=(4, 4))
    run.add_argument("--samples", type=_ints, default=(100, 1000, 10000))
    run.add_argument("--runs", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--estimators", type=_estimators, default=ESTIMATORS)
    _sampler_args(run)
    _fit_args(run)
    run.add_argument("--out", type=Path, default=Path("results.csv"))
    run.add_argument("--summary", type=Path, default=None,
                     help="summary CSV path (default: <out stem>.summary.csv)")
    run.add_argument("--fixed-params", action="store_true",
                     help="share one generating parameter draw across runs")
    run.add_argument("--no-timing", action="store_true",
                     help="write 0 in the seconds column so output is byte-reproducible")

    sample = sub.add_parser("sample", help="Gibbs-sample a dataset to CSV")
    _model_args(sample, required=False)
    sample.add_argument("--params", type=Path, help="model text file (overrides --model/--dims)")
    sample.add_argument("--samples", type=int, required=True)
    sample.add_argument("--seed", type=int, default=0)
    _sampler_args(sample)
    sample.add_argument("--out", type=Path, required=True)
    sample.add_argument("--params-out", type=Path, help="write the generating model here")

    fit = sub.add_parser("fit", help="fit one estimator to a dataset CSV")
    _model_args(fit, required=False)
    fit.add_argument("--structure", type=Path, help="model text file giving the cliques")
    fit.add_argument("--data", type=Path, required=True)
    fit.add_argument("--estimator", choices=ESTIMATORS, default="lap_e")
    _fit_args(fit)
    fit.add_argument("--out", type=Path, help="output file (default: stdout)")

    check = sub.add_parser("check", help="run the invariant suite")
    check.add_argument("--full", action="store_true", help="include the long experiments")
    return parser


def _structure(args):
    if getattr(args, "structure", None) or getattr(args, "params", None):
        path = args.structure if getattr(args, "structure", None) else args.params
        with open(path) as fh:
            model, _ = read_model(fh)
        return model
    if args.model is None or args.dims is None:
        raise SystemExit("error: give --model and --dims, or a model file")
    return build_model(args.model, args.dims)


def _optimizer(args) -> OptimizerConfig:
    return OptimizerConfig(tol_grad_inf=args.tol, max_iters=args.max_iters)


def cmd_run(args) -> int:
    cfg = ExperimentConfig(
        model=args.model, dims=args.dims, sample_sizes=args.samples, runs=args.runs,
        seed=args.seed, estimators=args.estimators, merge=args.merge,
        sampler=SamplerConfig(args.burnin, args.thin, 0), optimizer=_optimizer(args),
        backend=args.backend, workers=args.workers, fixed_params=args.fixed_params,
        record_timing=not args.no_timing,
    )
    rows = run_experiment(cfg)
    summary_path = args.summary or args.out.with_name(args.out.stem + ".summary.csv")
    with open(args.out, "w", newline="") as fh:
        write_rows(rows, fh)
    with open(summary_path, "w", newline="") as fh:
        write_summary(aggregate(rows), fh)
    print(f"wrote {len(rows)} rows to {args.out} and summary to {summary_path}")
    return 0


def cmd_sample(args) -> int:
    if args.params:
        model = _structure(args)
    else:
        graph, cliques = _structure(args)
        rng = np.random.Generator(np.random.PCG64(derive_seed(args.seed, 0, 0)))
        model = random_model(graph, cliques, rng)
    data = gibbs_sample(model, args.samples, SamplerConfig(args.burnin, args.thin, args.seed))
    with open(args.out, "w") as fh:
        write_csv(data, fh)
    if args.params_out:
        with open(args.params_out, "w") as fh:
            write_model(model, fh)
    return 0


def cmd_fit(args) -> int:
    spec = _structure(args)
    graph, cliques = (spec.graph, spec.cliques) if hasattr(spec, "cliques") else spec
    with open(args.data) as fh:
        data = read_csv(fh)
    cfg = _optimizer(args)
    if args.estimator == "ml":
        result = fit_ml(graph, cliques, data, args.backend, cfg)
    elif args.estimator == "pl":
        result = fit_pl(graph, cliques, data, cfg)
    else:
        strategy = {"lap_e": "exact", "lap_d": "dense", "lap_p": "pairwise"}[args.estimator]
        result = fit_lap(graph, cliques, data, strategy, args.backend, cfg, args.merge, args.workers)
    if args.out:
        with open(args.out, "w") as fh:
            write_result(result, graph, cliques, fh)
    else:
        write_result(result, graph, cliques, sys.stdout)
    return 0 if result.converged else 3


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(full=args.full)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or (argv[0].startswith("-") and argv[0] not in ("-h", "--help", "-v", "--verbose")):
        argv = ["run"] + argv
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        build_parser().print_help()
        return 2
    handler = {"run": cmd_run, "sample": cmd_sample, "fit": cmd_fit, "check": cmd_check}
    try:
        return handler[args.command](args)
    except MRFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
