"""
Command-line entry point.

Usage:
    python -m sounder.cli synth --preset aisle-scan --out runs/aisle
    python -m sounder.cli hardening --input runs/aisle/tensor.cht
    python -m sounder.cli report --input runs/aisle/tensor.cht --strict

Exit codes:
    0  success
    2  invalid configuration or arguments
    3  data cannot support the analysis (including CHT format errors)
    4  --strict and some result rows lack samples for their probability
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

# Add project root to path for imports
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

import sounder
from mimo.hardening.validation import ChtFormatError, ConfigError, DataError
from sounder.commands import register_commands, to_run_config
from sounder.runner import run

logger = logging.getLogger("sounder")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def create_parser() -> argparse.ArgumentParser:
    """Build the top-level parser with every subcommand registered."""
    parser = argparse.ArgumentParser(
        prog="sounder",
        description="Channel hardening, tail and shadowing analysis of massive MIMO channel tensors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {sounder.__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_commands(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 for --help/--version
        return int(e.code or 0)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        result = run(to_run_config(args))
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except ChtFormatError as e:
        logger.error("CHT format error [%s]: %s", e.code, e)
        return EXIT_DATA
    except DataError as e:
        logger.error("data error: %s", e)
        return EXIT_DATA

    for name in result.artifacts:
        logger.info("wrote %s", os.path.join(result.output_dir, name))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
