"""``simulate`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
The output directory is ``--out`` if given, else ``$MEMS3D_OUTPUT_DIR``,
else ``output.directory`` from the config file.
"""

import argparse
import logging
import sys

from .config import parse_config
from .errors import ConfigError, SolverError
from .scenarios import run_scenario, write_outputs

ENV_OUTPUT_DIR = "MEMS3D_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _parser():
    p = argparse.ArgumentParser(prog="simulate", description="Run a multilayer cantilever scenario.")
    p.add_argument("config", help="scenario configuration file (TOML)")
    p.add_argument("--out", metavar="DIR", help=f"output directory (overrides ${ENV_OUTPUT_DIR} and the config)")
    p.add_argument("--workers", type=int, default=1, metavar="N", help="parallel processes for sweeps and drive levels")
    p.add_argument("--oracle-only", action="store_true", help="skip the finite-element solve (fabricate scenario)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    return p


def main(argv=None, environ=None):
    import os

    environ = os.environ if environ is None else environ
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        config = parse_config(text)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        out_dir = args.out or environ.get(ENV_OUTPUT_DIR) or config.output.directory
        report = run_scenario(config, workers=args.workers, oracle_only=args.oracle_only)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    try:
        write_outputs(report, config, out_dir, config_text=text, workers=args.workers)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(report.text())
    if not report.ok:
        print(f"solver failure: {len(report.failures)} level(s) did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
