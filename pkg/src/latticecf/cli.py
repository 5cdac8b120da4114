"""Command-line entry point: ``latticecf {rates,rd-curve,wz-sim,cf-sim}``."""
import argparse
import sys

from .experiment import DEFAULTS, SUBCOMMANDS, ConfigError, parse_config, run_experiment

_HELP = {
    "rates": "closed-form rates (CSV: param,value,wz_rd,...)",
    "rd-curve": "Wyner-Ziv rate/distortion sweep over D, theory and simulation",
    "wz-sim": "Monte Carlo of the lattice Wyner-Ziv codec",
    "cf-sim": "Monte Carlo of block-Markov lattice compress-and-forward",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="latticecf", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--seed", help="master seed (default 42)")
        p.add_argument("--out", metavar="PATH", help="CSV output path (default stdout)")
        p.add_argument("--workers", help="process pool size for sweep points")
        p.add_argument("--sweep", metavar="NAME:START:STOP:STEPS",
                       help="vary one parameter linearly (inclusive)")
        keys = [k for k in DEFAULTS[name] if k not in ("trials", "n")]
        if "trials" in DEFAULTS[name]:
            p.add_argument("--trials", help="trials (cf-sim: independent runs)")
        if "n" in DEFAULTS[name]:
            p.add_argument("--n", help="lattice dimension")
        for key in keys:
            p.add_argument(f"--{key}", dest=key, help=f"default {DEFAULTS[name][key]}")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config")}
    try:
        cfg = parse_config(args.subcommand, flags, args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
