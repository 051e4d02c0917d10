#!/usr/bin/env python3
import logging
import sys

from cavitylink.utils import ConfigError, DomainError, SolverError
from .config import SCENARIOS, OUTPUT_FORMATS, parse_config
from .pipelines import run

logger = logging.getLogger('cavitylink')

EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_ERROR = 3


def main(argv=None):
    # parse args
    import argparse

    parser = argparse.ArgumentParser(prog='cavitylink',
                                     description='Simulate two laser-driven cavities coupled through a lossy fiber')
    parser.add_argument("scenario", choices=SCENARIOS, help='Scenario to run')
    parser.add_argument("--config", required=True, help='Path to the TOML configuration file')
    parser.add_argument("--out", help='Directory for the output files (overrides output.dir)')
    parser.add_argument("--seed", type=int, help='Seed for stochastic solvers (overrides numerics.seed)')
    parser.add_argument("--format", choices=OUTPUT_FORMATS, dest='output_format',
                        help='Output format (overrides output.format)')
    parser.add_argument("-v", "--verbose", action='count', default=0, help='-v for INFO, -vv for DEBUG logging')

    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)

    try:
        config = parse_config(args.config, args.scenario)
        result = run(config, out=args.out, seed=args.seed, output_format=args.output_format)
    except ConfigError as error:
        logger.error(f'Invalid configuration: {error}')
        return EXIT_CONFIG_ERROR
    except (SolverError, DomainError) as error:
        logger.error(f'{type(error).__name__}: {error}')
        return EXIT_SOLVER_ERROR

    for name, path in result.artifacts.items():
        print(path)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
