"""Command-line entry point: ``fnls-lab <command> [options]``.

Each subcommand calls the matching tool, prints its JSON result on stdout and
exits with the result's exit code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from typing import NoReturn

import scipy.fft

from fnls_lab.config import LabConfig, get_config
from fnls_lab.models import EXIT_CODES
from fnls_lab.tools.criteria import check_scenario_criteria
from fnls_lab.tools.ground_state import compute_ground_state
from fnls_lab.tools.runs import evolve_scenario
from fnls_lab.tools.sweep import sweep_scenario
from fnls_lab.tools.verification import run_verification
from fnls_lab.tools.virial import virial_check

logger = logging.getLogger(__name__)


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the config-error code; 2 means a detected blow-up."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CODES["config-error"], f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="fnls-lab", description="Fractional NLS blow-up laboratory")
    common = LabArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default: FNLS_OUTPUT_DIR)")
    common.add_argument("--threads", type=int, default=None, help="FFT workers (default: FNLS_THREADS)")
    common.add_argument("--seed", type=int, default=None, help="seed for random data and corpora")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)
    scenario_commands = {
        "ground-state": "solve for the ground state Q",
        "evolve": "run a scenario with virial diagnostics",
        "virial-check": "check the localized virial identities along a trajectory",
        "criteria": "evaluate the blow-up criteria for the initial datum",
        "sweep": "run a scenario over a parameter grid",
    }
    commands = {}
    for name, help_text in scenario_commands.items():
        commands[name] = sub.add_parser(name, parents=[common], help=help_text)
        commands[name].add_argument("--config", required=True, help="scenario TOML file")
    commands["virial-check"].add_argument("--eta", type=float, default=0.1, help="splitting parameter")
    commands["virial-check"].add_argument("--linear", action="store_true", help="drop the nonlinearity")
    commands["sweep"].add_argument(
        "--axis", action="append", default=[], metavar="NAME=V1,V2,...", help="sweep axis (repeatable)"
    )
    sub.add_parser("verify", parents=[common], help="run the quadrature, identity and inequality suite")
    return parser


def dispatch(args: argparse.Namespace, config: LabConfig) -> dict:
    if args.command == "ground-state":
        return compute_ground_state(config, args.config, out=args.out)
    if args.command == "evolve":
        return evolve_scenario(config, args.config, out=args.out, seed=args.seed)
    if args.command == "virial-check":
        return virial_check(config, args.config, out=args.out, eta=args.eta, nonlinear=not args.linear)
    if args.command == "criteria":
        return check_scenario_criteria(config, args.config, out=args.out)
    if args.command == "sweep":
        return sweep_scenario(config, args.config, axes=args.axis, out=args.out, seed=args.seed)
    return run_verification(config, out=args.out, seed=args.seed or 0)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = get_config()
    except ValueError as exc:
        print(f"fnls-lab: invalid environment configuration: {exc}", file=sys.stderr)
        return EXIT_CODES["config-error"]
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be at least 1")
        config = config.model_copy(update={"threads": args.threads})

    logging.basicConfig(level=config.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    logger.info("fnls-lab %s with %d FFT worker(s)", args.command, config.threads)
    with scipy.fft.set_workers(config.threads):
        result = dispatch(args, config)
    print(json.dumps(result, indent=2, default=str))
    return int(result.get("exit_code", 0))


if __name__ == "__main__":
    sys.exit(main())
