#!/usr/bin/env python3
"""
Simulate launcher - run an ensemble of charge-conserving random circuits and write the result files
"""
# Standard library imports
import argparse
import logging
import sys
from typing import Optional, Sequence

# Local imports
from errors import InvalidArgumentError, InvariantViolationError, OutputError, SimulationError
from experiment import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_OK,
    EXIT_VIOLATION,
    emit_summary,
    run_experiment,
)
from run_config import MODES, build_config, environment_overrides, parse_alphas

LOG_FORMAT = "%(asctime)s (%(name)s) %(levelname)s: %(message)s"

logger = logging.getLogger("simulate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Entanglement growth in charge-conserving random circuits")
    parser.add_argument("--config", help="key=value file mirroring the long flags")
    parser.add_argument("--spins", type=int, dest="num_spins", help="chain length 2n")
    parser.add_argument("--depth", type=int, help="number of brick-wall layers T")
    parser.add_argument("--ensemble", type=int, dest="ensemble_size", help="number of realizations")
    parser.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    parser.add_argument("--alphas", type=parse_alphas, help="Renyi indices, e.g. 2,3,inf")
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--proof", action="store_true", help="shorthand for --mode proof")
    parser.add_argument("--measure-every", type=int, dest="measure_every")
    parser.add_argument("--m-const", type=float, dest="m_const", help="K in the m(t) schedule")
    parser.add_argument("--m-exponent", type=float, dest="m_exponent",
                        help="z in m(t) = ceil(K t^z sqrt(ln t)); 0.5 is diffusive")
    parser.add_argument("--p-degree", type=int, dest="p_degree", help="degree of p(t) = t^d")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", dest="output_path", help="CSV output path")
    parser.add_argument("--circuit", choices=("haar", "identity"))
    parser.add_argument("--log-then-mean", action="store_true", help="quenched averaging for growth fits")
    parser.add_argument("--bootstrap", type=int, help="bootstrap resamples for fit intervals")
    parser.add_argument("--strict-parity", action="store_true", help="reject even n in proof mode")
    parser.add_argument("--log-level", type=str.upper, dest="log_level")
    return parser


def flags_from_args(args: argparse.Namespace) -> dict:
    flags = {name: value for name, value in vars(args).items()
             if name not in ("config", "proof", "log_then_mean", "strict_parity")}
    if args.proof:
        flags["mode"] = "proof"
    if args.log_then_mean:
        flags["averaging"] = "log_then_mean"
    if args.strict_parity:
        flags["strict_parity"] = True
    return flags


def setup_logging(level: str):
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        early_level = args.log_level or environment_overrides().get("log_level", "INFO")
        setup_logging(early_level)
        config = build_config(flags_from_args(args), args.config)
        setup_logging(config.log_level)
    except InvalidArgumentError as e:
        print(f"❌ Invalid configuration: {e}")
        return EXIT_INVALID

    print(f"🧮 Simulating 2n={config.num_spins}, T={config.depth}, "
          f"{config.ensemble_size} realization(s), mode {config.mode}...")
    try:
        experiment = run_experiment(config)
        summary = emit_summary(experiment)
    except InvalidArgumentError as e:
        print(f"❌ Invalid configuration: {e}")
        return EXIT_INVALID
    except InvariantViolationError as e:
        print(f"❌ Invariant violation: {e}")
        for failure in e.failures:
            print(f"   - {failure}")
        return EXIT_VIOLATION
    except OutputError as e:
        print(f"❌ Could not write results: {e}")
        return EXIT_IO
    except SimulationError as e:
        logger.exception(f"Simulation failed: {e}")
        return EXIT_INVALID

    print(summary.report)
    if summary.exit_code == EXIT_OK:
        print(f"✅ Results written to {config.output_path}")
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
