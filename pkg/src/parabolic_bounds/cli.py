"""Command line entry point: ``parabolic-bounds run|list-configs``."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import (
    FORMATS,
    OUTPUT_ENV,
    ConfigError,
    bundled_configs,
    load_config,
    run_and_emit,
)

EXIT_VIOLATION = 3
EXIT_CONFIG = 2


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="parabolic-bounds",
        description="Guaranteed error bounds for parabolic problems: run experiments and write tables.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a config file or a bundled config",
                         epilog=f"Output goes to --out, the config's 'output', ${OUTPUT_ENV}/<name> "
                                "or ./results/<name>, in that order.")
    run.add_argument("config", help="path to a JSON config or the name of a bundled config")
    run.add_argument("--out", help="output directory")
    run.add_argument("--preset", help="problem preset id")
    run.add_argument("--mesh", type=_int_list, help="cells per axis, N or N,N")
    run.add_argument("--slabs", type=int, help="number of time steps K")
    run.add_argument("--flux", help="average, optimize or optimize+enrich")
    run.add_argument("--mu", help="zero, one or optimal")
    run.add_argument("--kappa", type=float, help="two-sided weight of the L2 term")
    run.add_argument("--theta", type=_float_list, help="bulk parameters, comma separated")
    run.add_argument("--seed", type=int, help="random seed")
    run.add_argument("--format", choices=FORMATS, help="table format")
    run.add_argument("--workers", type=int, help="processes for sweeps")

    sub.add_parser("list-configs", help="list the bundled configs")
    return parser


def _overrides(args):
    over = {}
    if args.preset is not None:
        over["preset"] = args.preset
    if args.mesh is not None:
        over["cells"] = args.mesh[0] if len(args.mesh) == 1 else args.mesh
    for key in ("slabs", "flux", "mu", "kappa", "theta", "seed", "workers"):
        value = getattr(args, key)
        if value is not None:
            over[key] = value
    return over


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-configs":
        for name in bundled_configs():
            print(name)
        return 0

    try:
        config = load_config(args.config).replace(**_overrides(args))
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, out = run_and_emit(config, args.out, args.format)
    for s in report.summary:
        print(f"{s['label']}: I_maj={s['i_maj']} I_min={s['i_min']} I_eff={s['i_eff']}")
    print(f"wrote {out}")
    if report.violations:
        print(f"guarantee violated {len(report.violations)} time(s)", file=sys.stderr)
        return EXIT_VIOLATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
