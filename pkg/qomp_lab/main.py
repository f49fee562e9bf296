import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from qomp_lab.commands.bench import cmd_bench
from qomp_lab.commands.hardness import cmd_reduce_x3c
from qomp_lab.commands.recovery import cmd_estimate_mu, cmd_tomography
from qomp_lab.commands.solvers import cmd_omp, cmd_qomp
from qomp_lab.commands.sweep import cmd_sweep
from qomp_lab.config import get_log_level
from qomp_lab.errors import QompLabError
from qomp_lab.schemas import ExperimentConfig
from qomp_lab.utils import create_error_response

logger = logging.getLogger(__name__)

EXIT_ERROR = 1

COMMANDS: Dict[str, Callable[[ExperimentConfig], int]] = {
    "omp": cmd_omp,
    "qomp": cmd_qomp,
    "sweep": cmd_sweep,
    "reduce-x3c": cmd_reduce_x3c,
    "estimate-mu": cmd_estimate_mu,
    "tomography": cmd_tomography,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qomp-lab",
        description="Simulate quantum orthogonal matching pursuit and its sparse recovery toolchain",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="experiment configuration JSON")
    parser.add_argument("--seed", type=int, help="overrides the configured seed")
    parser.add_argument("--out", help="output path; stdout when omitted")
    return parser


def load_config(
    path: Optional[str], seed: Optional[int] = None, out: Optional[str] = None
) -> ExperimentConfig:
    """Config file values, with the command-line flags applied on top before validation."""
    raw = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["output"] = out
    return ExperimentConfig.parse_obj(raw)


def _report_error(command: str, error: Exception) -> None:
    if isinstance(error, QompLabError):
        detail, suggestion, criticality = error.detail, error.recovery_suggestion, error.criticality
    elif isinstance(error, ValidationError):
        detail = str(error)
        suggestion = "Please check the configuration fields and their allowed ranges"
        criticality = "critical"
    else:
        detail, suggestion, criticality = str(error), None, "critical"
    logger.critical(f"command-failed: {command}: {detail}")
    payload = create_error_response(
        detail=detail,
        criticality=criticality,
        recovery_suggestion=suggestion,
        command=command,
        errorType=type(error).__name__,
    )
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=get_log_level(), format="%(levelname)s %(name)s %(message)s")
    try:
        config = load_config(args.config, args.seed, args.out)
        return COMMANDS[args.command](config)
    except (QompLabError, OSError, ValueError, ValidationError) as error:
        _report_error(args.command, error)
        return EXIT_ERROR


def run() -> None:
    sys.exit(main())
