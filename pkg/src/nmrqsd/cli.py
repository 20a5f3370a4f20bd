"""Command-line entry point: ``nmrqsd {run,reproduce-figures,compare-oracle,sweep}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (degenerate
trajectory, unstable or failed oracle comparison), 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiment as exp
from .lindblad import OracleInstabilityError
from .qsd import DegenerateTrajectoryError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

_CONFIG_FLAGS = {
    "alpha": float,
    "beta": float,
    "omega0": float,
    "temperature": float,
    "duration": float,
    "steps": int,
    "seed": int,
    "convention": str,
    "frame": str,
    "noise_sharing": str,
    "expectation_source": str,
    "ensemble_size": int,
    "gate": str,
    "exact_thermal": str,
}


def _add_config_flags(parser: argparse.ArgumentParser, skip=()) -> None:
    parser.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parser.add_argument("--out-dir", default=".", help="directory for CSV, plots and reports")
    for name, typ in _CONFIG_FLAGS.items():
        if name in skip:
            continue
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None,
                            help=exp._FIELD_DOCS[name])


def _config_from_args(args) -> exp.SimulationConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k, None) is not None}
    return exp.load_config(args.config, overrides)


def _parse_pairs(text: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        a, b = chunk.split(",")
        pairs.append((float(a), float(b)))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nmrqsd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_config_flags(p)
    p.add_argument("--name", default="run", help="output file stem")
    p.add_argument("--plot", action="store_true", help="also write an SVG plot")

    p = sub.add_parser("reproduce-figures", help="run the five coupling presets with plots")
    _add_config_flags(p, skip=("alpha", "beta"))

    p = sub.add_parser("compare-oracle", help="QSD ensemble mean vs master equation")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--initial-state", default="excited", choices=sorted(exp.INITIAL_STATES))
    p.add_argument("--trajectories", type=int, default=2000)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="summary table over (alpha, beta) pairs")
    _add_config_flags(p, skip=("alpha", "beta"))
    p.add_argument("--pairs", default=";".join(f"{a:g},{b:g}" for a, b in exp.COUPLING_PRESETS),
                   help="semicolon-separated alpha,beta pairs")

    sub.add_parser("default-config", help="print a documented config template")
    return parser


def _dispatch(args) -> int:
    if args.command == "default-config":
        sys.stdout.write(exp.default_config_text())
        return EXIT_OK

    if args.command == "run":
        report = exp.run(_config_from_args(args), args.out_dir, name=args.name, plot=args.plot)
        print(f"wrote {report.csv_path}")
        for key, value in report.summary.items():
            print(f"  {key}: {value:.6g}")
        return EXIT_OK

    if args.command == "reproduce-figures":
        for report in exp.reproduce_figures(args.out_dir, _config_from_args(args)):
            s = report.summary
            print(f"{report.csv_path}: median |Re Mx| {s['median_mx_abs_re']:.3e}, "
                  f"median |Re My| {s['median_my_abs_re']:.3e}")
        return EXIT_OK

    if args.command == "compare-oracle":
        report = exp.compare_oracle(args.initial_state, args.trajectories, args.duration,
                                    args.steps, args.seed, out_dir=args.out_dir)
        status = "PASS" if report.passed else "FAIL"
        print(f"{status}: max deviation {report.max_deviation:.3e}, "
              f"worst deviation / 4-sigma bound {report.max_ratio:.3f} ({report.csv_path})")
        return EXIT_OK if report.passed else EXIT_NUMERICAL

    if args.command == "sweep":
        try:
            pairs = _parse_pairs(args.pairs)
        except ValueError as exc:
            raise exp.ConfigError([f"pairs: {exc}"]) from None
        rows = exp.sweep(pairs, _config_from_args(args), out_dir=args.out_dir)
        print(exp.SWEEP_CSV_HEADER)
        for r in rows:
            print(",".join(f"{r[k]:.6g}" for k in exp.SWEEP_CSV_HEADER.split(",")))
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return _dispatch(args)
    except exp.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateTrajectoryError, OracleInstabilityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
