"""
Subcommand definitions for the sounder CLI.

Each subcommand registers its arguments on a shared parent parser; parsed
arguments become a RunConfig through to_run_config().
"""

import argparse
from pathlib import Path
from typing import Any, Dict, List

from pydantic import ValidationError

from mimo.hardening.core import Polarization, SubsetMode
from mimo.hardening.validation import ConfigError
from sounder.schemas import Command, RunConfig


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", dest="output_dir", type=Path,
                        help="output directory (default: $HARDENING_OUTPUT_DIR or ./hardening-output)")
    common.add_argument("--seed", type=int, help="seed for every stochastic step")
    common.add_argument("--strict", action="store_true",
                        help="exit 4 when any result row lacks samples for its probability")
    common.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return common


def _input_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--input", "-i", type=Path, required=required, help="CHT v1 tensor file")


def _conditioning_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threshold-db", type=float, help="lost-sample dip threshold (dB)")
    parser.add_argument("--window", type=int, help="odd median window for lost-sample detection")
    parser.add_argument("--missing", choices=["drop", "interpolate"], default="drop",
                        help="how lost samples are handled before statistics")


def _subset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--subset-mode", choices=[m.value for m in SubsetMode], default=SubsetMode.FIRST_K.value)
    parser.add_argument("--polarization", choices=[p.value for p in Polarization])
    parser.add_argument("--sizes", type=_int_list, help="comma-separated subset sizes")


def _qc_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-lag", type=int, help="largest autocorrelation lag (samples)")
    parser.add_argument("--envelope", action="store_true", help="correlate |h| instead of h")
    parser.add_argument("--ue-speed", dest="ue_speed_mps", type=float, help="declared UE speed (m/s)")
    parser.add_argument("--autocorr-full", action="store_true",
                        help="write one autocorrelation row per (lag, f, m)")


def _tail_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=["mle", "mom"])
    parser.add_argument("--scale-mode", choices=["joint", "constrained"])
    parser.add_argument("--offset-unit", choices=["db", "linear"])
    parser.add_argument("--offset-p", type=float, default=1e-3, help="probability of the CDF offset")


def _margin_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p-list", type=_float_list, help="comma-separated outage probabilities")


def _shadowing_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--from-sample", type=int, help="ignore samples before this time index")
    parser.add_argument("--trim-seconds", type=float, help="drop the first seconds of the recording")


def register_commands(subparsers: Any) -> None:
    """Register every subcommand with an argparse subparsers object."""
    common = _common_parser()

    synth = subparsers.add_parser(Command.SYNTH.value, parents=[common],
                                  help="generate a synthetic CHT tensor")
    synth.add_argument("--config", dest="synth_config", type=Path, help="synth config YAML")
    synth.add_argument("--preset", help="scenario preset name")

    qc = subparsers.add_parser(Command.QC.value, parents=[common],
                               help="lost samples, autocorrelation and speed check")
    _input_args(qc)
    _conditioning_args(qc)
    _qc_args(qc)

    hardening = subparsers.add_parser(Command.HARDENING.value, parents=[common],
                                      help="combined-gain std versus subset size")
    _input_args(hardening)
    _conditioning_args(hardening)
    _subset_args(hardening)

    tails = subparsers.add_parser(Command.TAILS.value, parents=[common],
                                  help="ECDFs, gamma fits and CDF offsets")
    _input_args(tails)
    _conditioning_args(tails)
    _subset_args(tails)
    _tail_args(tails)

    margin = subparsers.add_parser(Command.MARGIN.value, parents=[common],
                                   help="fading margin table")
    _input_args(margin)
    _conditioning_args(margin)
    _subset_args(margin)
    _margin_args(margin)

    shadowing = subparsers.add_parser(Command.SHADOWING.value, parents=[common],
                                      help="linear trend and log-normal shadowing fit")
    _input_args(shadowing)
    _conditioning_args(shadowing)
    _shadowing_args(shadowing)

    report = subparsers.add_parser(Command.REPORT.value, parents=[common],
                                   help="qc, hardening, tails, margin and shadowing in one directory")
    _input_args(report, required=False)
    report.add_argument("--preset", help="scenario preset to synthesize when no input is given")
    _conditioning_args(report)
    _subset_args(report)
    _qc_args(report)
    _tail_args(report)
    _margin_args(report)
    _shadowing_args(report)


_NON_CONFIG = {"command", "log_level"}


def to_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Build a validated RunConfig from parsed arguments.

    Raises:
        ConfigError: With one bullet per invalid field
    """
    values: Dict[str, Any] = {
        k: v for k, v in vars(args).items() if k not in _NON_CONFIG and v is not None
    }
    try:
        return RunConfig(command=Command(args.command), **values)
    except ValidationError as e:
        details = "\n".join(
            f"  - {'.'.join(str(p) for p in err['loc']) or args.command}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"invalid {args.command} arguments:\n{details}") from e
