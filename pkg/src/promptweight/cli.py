"""Command-line interface.

Subcommands: ``synth`` (write a synthetic bundle), ``optimize`` (fit
template weights), ``prune`` (prune-and-reoptimize), ``suite`` (run every
method and compare).

Exit codes: 0 success, 1 invalid flags or flag combinations, 2 dataset
errors, 3 non-convergence under ``--strict``.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import DegenerateClassError
from .data import DatasetError, SyntheticConfig, generate_synthetic, load_dataset, save_dataset
from .engine import DEFAULT_TAU, compute_logit_tensor, zero_shot_predictions
from .evaluate import SuiteConfig, accuracy, format_table, report_to_json, run_suite
from .kernels import active_backend
from .optimizer import (
    DATASET_LAMBDA_ZS,
    MODE_DATASET,
    MODE_SINGLE_SAMPLE,
    SINGLE_SAMPLE_LAMBDA_ZS,
    OptimizerConfig,
    optimize,
    optimize_per_sample,
)
from .pruning import PruneSchedule, optimize_with_pruning

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NO_CONVERGENCE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the CLI contract reserves 2
    # for dataset errors, so usage problems exit 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source_args(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--data", metavar="BUNDLE", help="dataset bundle directory or manifest path")
    group.add_argument(
        "--synthetic", action="store_true", help="generate a synthetic dataset in memory"
    )
    parser.add_argument("--num-samples", type=int, default=200)
    parser.add_argument("--num-templates", type=int, default=5)
    parser.add_argument("--num-classes", type=int, default=10)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--clean-templates", type=int, default=3)
    parser.add_argument("--noise-sigma", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=42)


def _add_optimizer_args(parser):
    parser.add_argument("--tau", type=float, default=DEFAULT_TAU, help="softmax temperature (default 1/33.3)")
    parser.add_argument(
        "--lambda-zs",
        type=float,
        default=None,
        help=f"anchor regularization (default {SINGLE_SAMPLE_LAMBDA_ZS:g} single-sample, {DATASET_LAMBDA_ZS:g} dataset)",
    )
    parser.add_argument("--lambda-beta", type=float, default=0.01, help="weight entropy barrier")
    parser.add_argument("--tol", type=float, default=1e-6, help="L1 convergence tolerance on the weights")
    parser.add_argument("--max-iters", type=int, default=100)
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="thread budget echoed in reports; kernels are serial and deterministic",
    )


def _validate_common(args):
    if args.tau <= 0:
        raise UsageError("--tau must be > 0")
    if args.lambda_zs is not None and args.lambda_zs < 0:
        raise UsageError("--lambda-zs must be >= 0")
    if args.lambda_beta <= 0:
        raise UsageError("--lambda-beta must be > 0")
    if args.tol <= 0:
        raise UsageError("--tol must be > 0")
    if args.max_iters < 1:
        raise UsageError("--max-iters must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")


def _synthetic_config(args) -> SyntheticConfig:
    try:
        cfg = SyntheticConfig(
            num_samples=args.num_samples,
            num_templates=args.num_templates,
            num_classes=args.num_classes,
            dim=args.dim,
            clean_template_count=args.clean_templates,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if cfg.dim < 2:
        raise UsageError("--dim must be >= 2")
    return cfg


def _load_source(args):
    if args.data is not None:
        ds = load_dataset(args.data)
        return ds, args.data
    return generate_synthetic(_synthetic_config(args)), None


def _optimizer_config(args, mode: str) -> OptimizerConfig:
    lam_zs = args.lambda_zs
    if lam_zs is None:
        lam_zs = SINGLE_SAMPLE_LAMBDA_ZS if mode == MODE_SINGLE_SAMPLE else DATASET_LAMBDA_ZS
    return OptimizerConfig(
        lambda_zs=lam_zs,
        lambda_beta=args.lambda_beta,
        tau=args.tau,
        max_iters=args.max_iters,
        tol=args.tol,
        mode=mode,
    )


def _config_echo(cfg: OptimizerConfig, args, source_path) -> dict:
    return {
        "mode": cfg.mode,
        "tau": cfg.tau,
        "lambda_zs": cfg.lambda_zs,
        "lambda_beta": cfg.lambda_beta,
        "tol": cfg.tol,
        "max_iters": cfg.max_iters,
        "threads": args.threads,
        "backend": active_backend(),
        "data": source_path,
        "seed": None if source_path is not None else args.seed,
    }


def _emit(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_synth(args) -> int:
    cfg = _synthetic_config(args)
    ds = generate_synthetic(cfg)
    save_dataset(ds, args.out)
    print(f"wrote bundle to {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    mode = MODE_SINGLE_SAMPLE if args.mode == "single-sample" else MODE_DATASET
    cfg = _optimizer_config(args, mode)
    ds, source_path = _load_source(args)
    logits = compute_logit_tensor(ds)
    anchor = zero_shot_predictions(logits, ds.zero_shot_template_index, cfg.tau)

    payload: dict = {"config": _config_echo(cfg, args, source_path)}
    if mode == MODE_DATASET:
        res = optimize(logits, anchor, cfg)
        payload.update(
            beta=[float(v) for v in res.weights],
            objective_trace=[float(v) for v in res.objective_trace],
            iterations=res.iterations_used,
            converged=res.converged,
        )
        if ds.labels is not None:
            payload["accuracy"] = accuracy(res.predictions.argmax(axis=1), ds.labels)
        all_converged = res.converged
    else:
        res = optimize_per_sample(logits, anchor, cfg)
        payload.update(
            mean_beta=[float(v) for v in res.weights.mean(axis=0)],
            converged_fraction=float(res.converged.mean()),
            mean_iterations=float(res.iterations.mean()),
            per_sample=[
                {
                    "beta": [float(v) for v in res.weights[i]],
                    "iterations": int(res.iterations[i]),
                    "converged": bool(res.converged[i]),
                }
                for i in range(res.weights.shape[0])
            ],
        )
        if ds.labels is not None:
            payload["accuracy"] = accuracy(res.predictions.argmax(axis=1), ds.labels)
        all_converged = bool(res.converged.all())

    _emit(payload, args.out)
    if args.strict and not all_converged:
        print("optimization did not converge (--strict)", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_prune(args) -> int:
    if args.cycles < 1:
        raise UsageError("--cycles must be >= 1")
    if not 0.0 < args.prune_frac < 1.0:
        raise UsageError("--prune-frac must lie in (0, 1)")
    cfg = _optimizer_config(args, MODE_DATASET)
    schedule = PruneSchedule(cycles=args.cycles, fraction_per_cycle=args.prune_frac)
    ds, source_path = _load_source(args)
    logits = compute_logit_tensor(ds)
    anchor = zero_shot_predictions(logits, ds.zero_shot_template_index, cfg.tau)

    try:
        res = optimize_with_pruning(logits, anchor, cfg, schedule)
    except ValueError as exc:  # infeasible schedule for this template count
        raise UsageError(str(exc)) from exc

    payload = {
        "config": _config_echo(cfg, args, source_path),
        "cycles": args.cycles,
        "prune_fraction": args.prune_frac,
        "beta": [float(v) for v in res.weights],
        "active_mask": [bool(v) for v in res.active_mask],
        "survivors": int(res.active_mask.sum()),
        "objective_trace": [float(v) for v in res.objective_trace],
        "iterations": res.iterations_used,
        "converged": res.converged,
    }
    if ds.labels is not None:
        payload["accuracy"] = accuracy(res.predictions.argmax(axis=1), ds.labels)
    _emit(payload, args.out)
    if args.strict and not res.converged:
        print("optimization did not converge (--strict)", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_suite(args) -> int:
    suite_cfg = SuiteConfig(
        tau=args.tau,
        lambda_beta=args.lambda_beta,
        lambda_zs_single=args.lambda_zs if args.lambda_zs is not None else SINGLE_SAMPLE_LAMBDA_ZS,
        lambda_zs_dataset=args.lambda_zs if args.lambda_zs is not None else DATASET_LAMBDA_ZS,
        tol=args.tol,
        max_iters=args.max_iters,
        schedule=PruneSchedule(cycles=args.cycles, fraction_per_cycle=args.prune_frac),
        threads=args.threads,
    )
    ds, source_path = _load_source(args)
    reports = run_suite(ds, suite_cfg)
    payload = report_to_json(reports, ds, suite_cfg, source_path)

    if args.format in ("table", "both"):
        print(format_table(reports))
    if args.format in ("json", "both") and not args.out:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="promptweight", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset bundle")
    p_synth.add_argument("--out", required=True, help="bundle directory to create")
    p_synth.add_argument("--num-samples", type=int, default=200)
    p_synth.add_argument("--num-templates", type=int, default=5)
    p_synth.add_argument("--num-classes", type=int, default=10)
    p_synth.add_argument("--dim", type=int, default=64)
    p_synth.add_argument("--clean-templates", type=int, default=3)
    p_synth.add_argument("--noise-sigma", type=float, default=0.1)
    p_synth.add_argument("--seed", type=int, default=42)
    p_synth.set_defaults(func=_cmd_synth)

    p_opt = sub.add_parser("optimize", help="fit template weights")
    _add_source_args(p_opt)
    _add_optimizer_args(p_opt)
    p_opt.add_argument("--mode", choices=["dataset", "single-sample"], default="dataset")
    p_opt.add_argument("--strict", action="store_true", help="exit 3 on non-convergence")
    p_opt.add_argument("--out", default=None, help="report file (default: stdout)")
    p_opt.set_defaults(func=_cmd_optimize)

    p_prune = sub.add_parser("prune", help="prune-and-reoptimize template weights")
    _add_source_args(p_prune)
    _add_optimizer_args(p_prune)
    p_prune.add_argument("--cycles", type=int, default=4)
    p_prune.add_argument("--prune-frac", type=float, default=0.15)
    p_prune.add_argument("--strict", action="store_true", help="exit 3 on non-convergence")
    p_prune.add_argument("--out", default=None, help="report file (default: stdout)")
    p_prune.set_defaults(func=_cmd_prune)

    p_suite = sub.add_parser("suite", help="run all methods and compare")
    _add_source_args(p_suite)
    _add_optimizer_args(p_suite)
    p_suite.add_argument("--cycles", type=int, default=4)
    p_suite.add_argument("--prune-frac", type=float, default=0.15)
    p_suite.add_argument("--format", choices=["table", "json", "both"], default="table")
    p_suite.add_argument("--out", default=None, help="JSON report file")
    p_suite.set_defaults(func=_cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if hasattr(args, "tau"):
            _validate_common(args)
        if getattr(args, "cycles", 1) < 1:
            raise UsageError("--cycles must be >= 1")
        if not 0.0 < getattr(args, "prune_frac", 0.15) < 1.0:
            raise UsageError("--prune-frac must lie in (0, 1)")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, DegenerateClassError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
