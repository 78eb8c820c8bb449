"""Command-line entry point.

::

    sheetapprox <subcommand> --config run.cfg [--seed S] [--workers K] [--out DIR]

Exit status: 0 all gates pass, 2 a statistical gate failed, 3 usage error,
4 resource error.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DomainError, ResourceError, SheetApproxError, StructuralError
from .harness.config import load_config, parse_config
from .harness.suite import EXIT_RESOURCE, EXIT_USAGE, run_suite

SUBCOMMANDS = {
    "simulate": ("simulate",),
    "verify-moments": ("moments",),
    "gof": ("gof",),
    "cramer-wold": ("cramer-wold",),
    "bound-scan": ("bound-scan",),
    "appendix": ("appendix-checks", "rn-decay"),
    "run": None,  # whatever the config's ``experiments`` key lists
}

HELP = {
    "simulate": "draw X_n(t) samples for every n in n_grid",
    "verify-moments": "empirical even moments against the Gaussian limit",
    "gof": "Kolmogorov-Smirnov (gated) and ECF (reported) tests of the marginal",
    "cramer-wold": "KS tests of random linear combinations at the largest n",
    "bound-scan": "empirical moment-bound constant and its trend in n",
    "appendix": "deterministic lattice covariance and remainder checks",
    "run": "run the experiments listed in the config",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    from . import __version__

    p = _Parser(prog="sheetapprox", description="Approximation of Wiener integrals on the "
                "Brownian sheet by Donsker and Kac-Stroock kernels.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("--config", required=name not in ("appendix",),
                       help="flat key = value configuration file")
        s.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        s.add_argument("--workers", type=_positive, help="worker processes (overrides the config)")
        s.add_argument("--out", help="output directory (overrides the config)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config("kernel = donsker\n")
        experiments = SUBCOMMANDS[args.command] or cfg.experiments
        cfg = cfg.with_overrides(seed=args.seed, workers=args.workers, out=args.out,
                                 experiments=tuple(experiments))
        manifest = run_suite(cfg)
    except ConfigError as exc:
        print(f"sheetapprox: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, StructuralError) as exc:
        print(f"sheetapprox: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as exc:
        print(f"sheetapprox: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SheetApproxError as exc:
        print(f"sheetapprox: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for name, info in manifest.experiments.items():
        print(f"{name}: {info['status']} ({info['rows']} rows, {info['seconds']:.2f} s)")
    print(f"manifest: {cfg.out}/manifest.json")
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
