"""Command line interface.

Exit codes: 0 ok, 2 usage or configuration error, 3 corrupt artifact,
4 training failure. ``LATENTGAN_OUT`` overrides the output directory.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_CORRUPT, EXIT_TRAIN = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _out_dir(default) -> Path:
    return Path(os.environ.get("LATENTGAN_OUT") or default)


def _load_state(path):
    from .checkpoint import CheckpointError, load_checkpoint

    try:
        return load_checkpoint(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except CheckpointError as exc:
        raise CliError(str(exc), EXIT_CORRUPT) from None


def _require(path, what):
    if path is None:
        raise CliError(f"no {what} path given")
    if not Path(path).exists():
        raise CliError(f"{what} not found: {path}")
    return path


def cmd_train(args) -> int:
    from .config import ConfigError, load_config
    from .training import TrainingError, train

    try:
        cfg = load_config(_require(args.config, "config file"))
        overrides = {}
        if args.epochs is not None:
            overrides["epochs"] = args.epochs
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        cfg = cfg.with_overrides(**overrides)
    except ConfigError as exc:
        raise CliError(f"{args.config}: {exc}") from None
    _require(cfg.train_images, "training images")
    try:
        state, metrics = train(cfg, resume=args.resume, max_steps=args.max_steps)
    except TrainingError as exc:
        raise CliError(str(exc), EXIT_TRAIN) from None
    out = _out_dir(cfg.output_dir)
    print(f"trained {state.step} steps; checkpoint {out / 'checkpoint.lgc'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import evaluate_classification
    from .training import load_images

    state = _load_state(args.checkpoint)
    cfg = state.config
    paths = {
        "training images": args.train_images or cfg.train_images,
        "training labels": args.train_labels or cfg.train_labels,
        "test images": args.test_images or cfg.test_images,
        "test labels": args.test_labels or cfg.test_labels,
    }
    for what, p in paths.items():
        _require(p, what)
    preset = state.bundle.preset
    xtr, ytr = load_images(paths["training images"], paths["training labels"], preset)
    xte, yte = load_images(paths["test images"], paths["test labels"], preset)
    err, assignment = evaluate_classification(state, xtr, ytr, xte, yte, args.method or cfg.assignment)
    out = Path(args.out) if args.out else _out_dir(cfg.output_dir) / "eval.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerow(["test_error", repr(err)])
        w.writerow(["train_accuracy", repr(assignment.train_accuracy)])
        w.writerow(["step", state.step])
    print(f"test_error {err:.4f}")
    return EXIT_OK


def cmd_sample(args) -> int:
    from .evaluation import emit_samples

    state = _load_state(args.checkpoint)
    out = Path(args.out) if args.out else _out_dir(state.config.output_dir) / "samples.png"
    emit_samples(state, args.n, args.seed, out)
    print(out)
    return EXIT_OK


def cmd_traverse(args) -> int:
    from .evaluation import emit_traversal

    state = _load_state(args.checkpoint)
    spec = state.config.codes
    if args.vary not in spec.code_names():
        raise CliError(f"unknown code {args.vary!r}; available: {', '.join(spec.code_names())}")
    cols = args.cols
    if cols is None:
        cols = spec.categoricals[int(args.vary[3:])] if args.vary.startswith("cat") else 10
    out = Path(args.out) if args.out else _out_dir(state.config.output_dir) / f"traverse_{args.vary}.png"
    try:
        emit_traversal(state, args.vary, args.rows, cols, args.seed, out, value_range=args.range)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    print(out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .data import MixtureSpec
    from .oracle import OracleFailure, run_oracle, save_scatter

    if args.k < 2 or args.k > args.modes:
        raise CliError(f"--k must lie in [2, {args.modes}], got {args.k}")
    spec = MixtureSpec.ring(args.modes, args.radius, args.stddev)
    try:
        report = run_oracle(spec, args.k, args.steps, args.seed, lambda_disc=args.lambda_disc)
    except OracleFailure as exc:
        raise CliError(str(exc), EXIT_TRAIN) from None
    out = Path(args.out) if args.out else _out_dir("runs/oracle") / "oracle.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(out)
    if args.scatter:
        save_scatter(report.generated[:2000], spec, args.scatter)
    print(f"mmd2 {report.mmd2:.5f} purity {report.purity:.4f} (baseline {report.baseline:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="latentgan",
        description="Train and inspect a LatentGAN autoencoder.",
        epilog="exit codes: 0 ok, 2 usage or config error, 3 corrupt artifact, 4 training failure",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train from a config file")
    t.add_argument("config")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="output directory")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--max-steps", type=int, help="stop after this global step")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="unsupervised classification test error")
    e.add_argument("checkpoint")
    for name in ("train-images", "train-labels", "test-images", "test-labels"):
        e.add_argument(f"--{name}")
    e.add_argument("--method", choices=["hungarian", "majority"])
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="grid of random samples")
    s.add_argument("checkpoint")
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("traverse", help="grid varying one code")
    v.add_argument("checkpoint")
    v.add_argument("--vary", required=True, help="code to sweep, e.g. cat0, u1")
    v.add_argument("--rows", type=int, default=10, help="independent code draws (default 10)")
    v.add_argument("--cols", type=int, help="sweep steps (default K for categoricals, 10 otherwise)")
    v.add_argument("--range", type=float, nargs=2, metavar=("LOW", "HIGH"), help="continuous sweep interval")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_traverse)

    o = sub.add_parser("oracle", help="latent GAN against a Gaussian-mixture ring")
    o.add_argument("--k", type=int, default=8)
    o.add_argument("--modes", type=int, default=8)
    o.add_argument("--radius", type=float, default=2.0)
    o.add_argument("--stddev", type=float, default=0.1)
    o.add_argument("--steps", type=int, default=5000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--lambda-disc", type=float, default=1.0)
    o.add_argument("--out")
    o.add_argument("--scatter", help="also write a 2-D scatter PNG (needs matplotlib)")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"latentgan {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"latentgan {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
