"""Command line interface: ``adapt run``, ``adapt learn`` and ``adapt synth``.

Input CSV files are UTF-8, comma separated, with a header row and one sample
per row. Feature columns come first; an optional final column named
``label`` holds integer class labels. Target labels are only used to score
predictions.
"""
import argparse
import json
import logging
import sys

import numpy as np

from .config import ExperimentConfig
from .errors import SdlkError
from .kernels import KernelSpec
from .learner import LearnerInputs, learn
from .pipeline import generate_synthetic, load_csv, run_experiment, save_csv
from .subspace import METHODS
from .trust_region import TrSettings
from .types import DomainPair, build_anchors

log = logging.getLogger("sdlk")


def _kernel(text):
    try:
        return KernelSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _load_pair(args):
    source = load_csv(args.source, has_labels=True)
    target = load_csv(args.target, has_labels=not args.unlabeled_target)
    return DomainPair(source, target)


def _add_kernel_args(p):
    defaults = ExperimentConfig()
    p.add_argument("--kernel-base", type=_kernel, default=defaults.base,
                   help="base kernel, e.g. poly:a=0.01,b=0,d=1")
    p.add_argument("--kernel-beta", type=_kernel, default=defaults.beta,
                   help="anchor feature kernel, e.g. rbf:sigma=3")
    p.add_argument("--eta", type=float, default=defaults.eta)
    p.add_argument("--mu-kernel", type=float, default=defaults.mu_kernel,
                   help="Frobenius regularizer of the kernel-learning objective")
    p.add_argument("--tol", type=float, default=defaults.tol)
    p.add_argument("--max-outer", type=int, default=defaults.max_outer)
    p.add_argument("--anchors", default=defaults.anchors,
                   help="source | target | union | union-subsample:K")
    p.add_argument("--seed", type=int, default=defaults.seed)


def build_parser():
    parser = argparse.ArgumentParser(prog="adapt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run repeated domain-adaptation trials")
    run.add_argument("--source", required=True)
    run.add_argument("--target", required=True)
    run.add_argument("--unlabeled-target", action="store_true", help=argparse.SUPPRESS)
    run.add_argument("--method", choices=METHODS, default="tca")
    _add_kernel_args(run)
    run.add_argument("--mu", type=float, default=ExperimentConfig.mu_sub,
                     help="subspace regularizer")
    run.add_argument("--lambda", dest="lambda_", type=float,
                     default=ExperimentConfig.lambda_sub)
    run.add_argument("--gamma", type=float, default=ExperimentConfig.gamma,
                     help="label-kernel mixing weight for sstca")
    run.add_argument("--dim", type=int, default=ExperimentConfig.dim)
    run.add_argument("--trials", type=int, default=ExperimentConfig.trials)
    run.add_argument("--knn-k", type=int, default=ExperimentConfig.knn_k)
    run.add_argument("--split", default=ExperimentConfig.split,
                     help="fraction:F | per-class:K | all")
    run.add_argument("--no-kernel-learning", action="store_true",
                     help="use the base kernel directly")
    run.add_argument("--out", required=True, help="report JSON path")
    run.add_argument("--diagnostics", help="write solver traces as JSON lines")

    lrn = sub.add_parser("learn", help="learn a composite kernel and write it as JSON")
    lrn.add_argument("--source", required=True)
    lrn.add_argument("--target", required=True)
    _add_kernel_args(lrn)
    lrn.add_argument("--out", required=True)
    lrn.add_argument("--diagnostics", help="write the solver trace as JSON lines")

    syn = sub.add_parser("synth", help="generate a synthetic domain pair")
    syn.add_argument("--kind", choices=("shifted-gaussians", "rotated-moons"),
                     default="shifted-gaussians")
    syn.add_argument("--n", type=int, default=100, help="samples per class")
    syn.add_argument("--shift", type=float, default=2.0)
    syn.add_argument("--dim", type=int, default=5)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out-source", required=True)
    syn.add_argument("--out-target", required=True)
    return parser


def cmd_run(args):
    config = ExperimentConfig(
        base=args.kernel_base,
        beta=args.kernel_beta,
        eta=args.eta,
        mu_kernel=args.mu_kernel,
        mu_sub=args.mu,
        lambda_sub=args.lambda_,
        gamma=args.gamma,
        dim=args.dim,
        tol=args.tol,
        trials=args.trials,
        seed=args.seed,
        knn_k=args.knn_k,
        method=args.method,
        anchors=args.anchors,
        split=args.split,
        kernel_learning=not args.no_kernel_learning,
        max_outer=args.max_outer,
    )
    pair = _load_pair(args)
    diag = open(args.diagnostics, "w", encoding="utf-8") if args.diagnostics else None

    def on_trial(i, out):
        log.info("trial %d: accuracy %.4f", i, out.result.accuracy)
        if diag is not None and out.learned is not None:
            for line in out.learned.diagnostics.to_jsonl().splitlines():
                doc = json.loads(line)
                doc["trial"] = i
                diag.write(json.dumps(doc, sort_keys=True) + "\n")

    try:
        report = run_experiment(config, pair, on_trial=on_trial)
    finally:
        if diag is not None:
            diag.close()
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(indent=2))
        fh.write("\n")
    print(f"mean accuracy {report.mean_accuracy:.4f} +- {report.std_accuracy:.4f} "
          f"over {config.trials} trials")
    return 0


def cmd_learn(args):
    args.unlabeled_target = True
    pair = _load_pair(args)
    anchors = build_anchors(pair, args.anchors, np.random.default_rng(args.seed))
    learned = learn(
        LearnerInputs(
            pair, anchors, args.kernel_base, args.kernel_beta, args.eta,
            args.mu_kernel, TrSettings(tol=args.tol, max_outer=args.max_outer), args.seed,
        )
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(learned.to_dict(), fh, sort_keys=True)
    if args.diagnostics:
        with open(args.diagnostics, "w", encoding="utf-8") as fh:
            fh.write(learned.diagnostics.to_jsonl())
    print(f"learnable MMD part {learned.mmd_before:.6g} -> {learned.mmd_after:.6g} "
          f"({learned.diagnostics.exit_reason}, {learned.diagnostics.iterations} iterations)")
    return 0


def cmd_synth(args):
    pair = generate_synthetic(args.kind, args.n, args.shift, args.seed, d=args.dim)
    save_csv(args.out_source, pair.source)
    save_csv(args.out_target, pair.target)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"run": cmd_run, "learn": cmd_learn, "synth": cmd_synth}
    try:
        return handlers[args.command](args)
    except (SdlkError, ValueError, OSError) as exc:
        print(f"adapt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
