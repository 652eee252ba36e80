"""Command line: ``pnsampler run CONFIG``, ``pnsampler exact MODEL``, ``pnsampler version``."""
from __future__ import annotations

import argparse
import sys

from . import __version__, kernels, models
from .harness import ConfigError, ExperimentConfig, parse_model_spec, run_experiment

EXIT_OK = 0
EXIT_INVALID = 2


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    path = run_experiment(cfg, workers=args.workers)
    print(path)
    return EXIT_OK


def _cmd_exact(args) -> int:
    model = parse_model_spec(args.model)
    if not hasattr(model, "log_weights_table"):
        raise ConfigError(f"{args.model!r} is not an enumerable discrete model")
    p = models.exact_distribution(model, max_states=args.max_states)
    names = getattr(model, "names", None)
    out = sys.stdout
    out.write("key,state,probability\n")
    for k, v in enumerate(p):
        label = names[k] if names is not None else format(k, f"0{model.n_bits}b")[::-1]
        out.write(f"{k},{label},{v:.17g}\n")
    return EXIT_OK


def _cmd_version(args) -> int:
    print(f"pnsampler {__version__} (kernels: {kernels.BACKEND})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pnsampler", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config and write its CSV")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=None, help="override PNSAMPLER_WORKERS")
    r.set_defaults(func=_cmd_run)

    e = sub.add_parser("exact", help="print the exact distribution of a discrete model")
    e.add_argument("model", help="e.g. triangle, hypercube16, qubo:n=8,std=1,seed=0")
    e.add_argument("--max-states", type=int, default=models.MAX_EXACT_STATES)
    e.set_defaults(func=_cmd_exact)

    v = sub.add_parser("version", help="print version and kernel backend")
    v.set_defaults(func=_cmd_version)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
