"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 non-convergence, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .harness import (default_config, format_summary, load_config, run_converge_trace,
                      run_dispersion_check, run_profile, run_simulate)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4


def _add_common(sub):
    sub.add_argument("--config", metavar="PATH", help="key = value config file")
    sub.add_argument("--seed", type=int, metavar="N", help="override link rng seed")
    sub.add_argument("--out", metavar="DIR", help="directory for CSV outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shpol",
                                     description="Self-homodyne link with adaptive polarization control")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run tx -> channel -> controller -> rx")
    _add_common(sim)
    sim.add_argument("--controller", choices=["on", "off"], default="on")

    prof = subs.add_parser("profile", help="sweep the controller-angle power profile")
    _add_common(prof)
    prof.add_argument("--grid", type=int, default=64, metavar="N")

    disp = subs.add_parser("dispersion-check", help="compare convergence with dispersion on vs off")
    _add_common(disp)

    trace = subs.add_parser("converge-trace", help="fit the controller and dump its trace")
    _add_common(trace)

    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg.rng_seed = args.seed
        cfg.channel.rng_seed = args.seed + 1
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "simulate":
            summary = run_simulate(cfg, controller_on=args.controller == "on", out_dir=args.out)
        elif args.command == "profile":
            summary = run_profile(cfg, grid_n=args.grid, out_dir=args.out)
        elif args.command == "dispersion-check":
            summary = run_dispersion_check(cfg, out_dir=args.out)
        else:
            summary = run_converge_trace(cfg, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(format_summary(summary))
    if "converged" in summary and not summary["converged"] and args.command != "simulate":
        return EXIT_NO_CONVERGENCE
    if args.command == "simulate" and summary.get("controller") == "on" and not summary["converged"]:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
