"""
zs-scatter command line.

Reproduces the benchmark experiments as data files:

    zs-scatter order --A 5.25 --M 1024,2048 --out order.csv
    zs-scatter scan --schemes es4,bo --M 512,1024,2048
    zs-scatter discrete --A-sweep 1:8:0.25 --format json
    zs-scatter parseval --oracle-only

Settings precedence: built-in defaults < ZS_* environment / .env <
--config FILE (key=value lines) < explicit flags.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from colorama import Fore, Style, init
from dotenv import dotenv_values
from pydantic import ValidationError

from .config import settings
from .errors import ConfigError, NumericError
from .schemas.experiment import DEFAULT_NODES, ExperimentCommand, ExperimentConfig, ExperimentReport
from .services.experiment_service import ExperimentService
from .services.report_service import ReportService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _scheme_list(text: str) -> List[str]:
    return [part.strip().lower() for part in text.split(",") if part.strip()]


def parse_sweep(text: str) -> List[float]:
    """'start:stop:step' with stop included, e.g. '1:8:0.25'."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"sweep {text!r} needs step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [float(v) for v in np.round(start + step * np.arange(count), 12)]


def _flag(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


# flag/file key -> (ExperimentConfig field, converter)
OPTIONS: Dict[str, tuple] = {
    "a": ("amplitude", float),
    "c": ("chirp", float),
    "sigma": ("sigma", int),
    "l": ("length", float),
    "m": ("nodes", _int_list),
    "schemes": ("schemes", _scheme_list),
    "xi_min": ("xi_min", float),
    "xi_max": ("xi_max", float),
    "n": ("xi_points", int),
    "out": ("output", Path),
    "format": ("output_format", str),
    "threads": ("threads", int),
    "signal_file": ("signal_file", Path),
    "levels": ("levels", int),
    "a_sweep": ("amplitude_sweep", parse_sweep),
    "oracle_only": ("oracle_only", _flag),
}


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--A", dest="a", type=float, help="amplitude A of q = A sech(t)^(1+iC)")
    parser.add_argument("--C", dest="c", type=float, help="chirp C")
    parser.add_argument("--sigma", type=int, choices=[1, -1], help="+1 anomalous, -1 normal dispersion")
    parser.add_argument("--L", dest="l", type=float, help="half-width of the time interval")
    parser.add_argument("--M", dest="m", type=_int_list, help="comma-separated grid sizes, e.g. 1024,2048")
    parser.add_argument("--schemes", type=_scheme_list, help="comma-separated subset of bo,es4,tes4,ct4,rk4")
    parser.add_argument("--xi-min", dest="xi_min", type=float, help="lower end of the xi grid")
    parser.add_argument("--xi-max", dest="xi_max", type=float, help="upper end of the xi grid")
    parser.add_argument("--N", dest="n", type=int, help="number of xi points")
    parser.add_argument("--out", type=Path, help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=["csv", "json"], help="output format")
    parser.add_argument("--threads", type=int, help="worker threads, 0 = one per CPU, 1 = serial")
    parser.add_argument("--signal-file", dest="signal_file", type=Path, help="CSV signal t,re,im")
    parser.add_argument("--levels", type=int, help="Romberg levels for RK4 derivatives")
    parser.add_argument("--config", type=Path, help="key=value file with default options")
    parser.add_argument("--log-level", dest="log_level", help="logging level (default from ZS_LOG_LEVEL)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zs-scatter",
        description=__doc__,
        formatter_class=argparse.RawTextHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)
    helps = {
        ExperimentCommand.SCAN: "MSE of a, b against the oracle over an M sweep",
        ExperimentCommand.ORDER: "approximation order per xi from two grids",
        ExperimentCommand.ENERGY: "quadratic invariant and continuous-spectrum energy errors",
        ExperimentCommand.DISCRETE: "errors of a, b and r at the largest eigenvalue",
        ExperimentCommand.PARSEVAL: "residual of the nonlinear Parseval equality",
    }
    for command, text in helps.items():
        sub = commands.add_parser(command.value, help=text)
        _add_common(sub)
        if command is ExperimentCommand.DISCRETE:
            sub.add_argument("--A-sweep", dest="a_sweep", type=parse_sweep, help="amplitudes start:stop:step")
        if command is ExperimentCommand.PARSEVAL:
            sub.add_argument("--oracle-only", dest="oracle_only", action="store_true", default=None,
                             help="use the exact a instead of a scheme")
    return parser


def _defaults(command: ExperimentCommand) -> Dict[str, Any]:
    discrete = command is ExperimentCommand.DISCRETE
    return {
        "command": command,
        "length": settings.discrete_length if discrete else settings.default_length,
        "nodes": DEFAULT_NODES[command],
        "xi_min": -settings.xi_max,
        "xi_max": settings.xi_max,
        "xi_points": settings.xi_points,
        "output_format": settings.output_format,
        "threads": settings.threads,
    }


def _file_values(path: Path) -> Dict[str, Any]:
    """Options from a key=value file; keys use the flag names (A, L, M, xi_min, ...)."""
    if not path.is_file():
        raise ConfigError(f"Config file {path} does not exist")
    values: Dict[str, Any] = {}
    for key, raw in dotenv_values(path).items():
        name = key.strip().lower().replace("-", "_")
        if name not in OPTIONS:
            raise ConfigError(f"Unknown key {key!r} in {path}")
        if raw is None:
            continue
        field, convert = OPTIONS[name]
        try:
            values[field] = convert(raw)
        except (ValueError, argparse.ArgumentTypeError) as e:
            raise ConfigError(f"Bad value for {key} in {path}: {e}") from e
    return values


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge defaults, settings, the optional config file and explicit flags.

    Raises:
        ConfigError: invalid file or option values
    """
    command = ExperimentCommand(args.command)
    values = _defaults(command)
    if args.config is not None:
        values.update(_file_values(args.config))
    for name, (field, _) in OPTIONS.items():
        given = getattr(args, name, None)
        if given is not None:
            values[field] = given
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment configuration: {e}") from e


def _summary(report: ExperimentReport) -> List[str]:
    """One line per scheme with the headline metric of the experiment."""
    headline: Dict[ExperimentCommand, str] = {
        ExperimentCommand.SCAN: "mse_a",
        ExperimentCommand.ORDER: "median_order",
        ExperimentCommand.ENERGY: "max_h_deviation",
        ExperimentCommand.DISCRETE: "error_r0",
        ExperimentCommand.PARSEVAL: "parseval_residual",
    }
    metric = headline[report.config.command]
    lines = []
    for scheme in dict.fromkeys(row.scheme for row in report.rows if row.metric == metric):
        value = report.values(metric, scheme)[-1]
        seconds = report.wall_clock.get(scheme)
        timing = f" ({seconds:.2f}s)" if seconds is not None else ""
        lines.append(f"{Fore.GREEN}✓ {scheme:<7}{Style.RESET_ALL} {metric} = {value:.6g}{timing}")
    return lines


def run(args: argparse.Namespace, out: Callable[[str], Any] = print) -> int:
    config = build_config(args)
    report = ExperimentService().run(config)
    reports = ReportService(config.output_format)
    if config.output is not None:
        reports.write(report.rows, config.output)
    else:
        out(reports.render(report.rows))
    for line in _summary(report):
        print(line, file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    init()
    args = build_parser().parse_args(argv)
    level = (args.log_level or settings.log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}", exc_info=True)
        print(f"{Fore.RED}✗ {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as e:
        logger.error(f"Numeric failure: {e}", exc_info=True)
        print(f"{Fore.RED}✗ {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
