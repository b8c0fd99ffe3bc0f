"""
Singular Elliptic Laboratory
Command-line entry point.
"""

# -------------------------------------------------
# Ensure repo root is on PYTHONPATH
# -------------------------------------------------
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

# -------------------------------------------------
# Standard imports
# -------------------------------------------------
import argparse
import copy
import json
import logging
import os
from typing import Any, Dict, List, Optional, Union

# -------------------------------------------------
# Optional dotenv loading
# -------------------------------------------------
try:
    from dotenv import load_dotenv
    load_dotenv()
except Exception:
    pass

# -------------------------------------------------
# Logging configuration
# -------------------------------------------------
logging.basicConfig(
    level=os.getenv("SINGULAR_LOG_LEVEL", "INFO").upper(),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)
logger = logging.getLogger(__name__)

from pydantic import ValidationError

from singular_src.config.settings import settings
from singular_src.services.errors import (
    ConfigError,
    HypothesisViolationError,
    ParameterError,
    SingularLabError,
    SolverFailureError,
)
from singular_src.services.states import RunConfig

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESIS = 2
EXIT_SOLVER = 3


# -------------------------------------------------
# Arguments
# -------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    """Flags mirror the configuration keys and override the file."""
    parser = argparse.ArgumentParser(
        prog="singular_app.py",
        description="Solve and verify singular degenerate elliptic Dirichlet problems.",
    )
    parser.add_argument("command", nargs="?", choices=list(settings.COMMANDS),
                        help="; ".join(f"{k}: {v}" for k, v in settings.COMMANDS.items()))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--log-level", help="Overrides SINGULAR_LOG_LEVEL")

    problem = parser.add_argument_group("problem")
    problem.add_argument("--alpha", type=float)
    problem.add_argument("--gamma", type=float)
    problem.add_argument("--dim", type=int)
    problem.add_argument("--geometry", choices=["interval", "ball"])
    problem.add_argument("--size", type=float, help="Interval length or ball radius")
    problem.add_argument("--operator", choices=["trace", "pucci_plus", "pucci_minus"])
    problem.add_argument("--a", type=float, dest="a", help="Lower ellipticity constant")
    problem.add_argument("--A", type=float, dest="A", help="Upper ellipticity constant")
    problem.add_argument("--c", dest="coeff_c", help="Zero order coefficient (number or expression)")
    problem.add_argument("--h", dest="coeff_h", help="Drift coefficient (number or expression)")
    problem.add_argument("--p", dest="coeff_p", help="Singular coefficient (number or expression)")

    numeric = parser.add_argument_group("numeric")
    numeric.add_argument("--nodes", type=int)
    numeric.add_argument("--tol", type=float)
    numeric.add_argument("--inner-tol", type=float)
    numeric.add_argument("--level-tol", type=float)
    numeric.add_argument("--eigen-tol", type=float)
    numeric.add_argument("--grad-reg", type=float)
    numeric.add_argument("--delta0", type=float)
    numeric.add_argument("--ladder-factor", type=float)
    numeric.add_argument("--barrier-s", type=float)
    numeric.add_argument("--fit-window", type=float, nargs=2)
    numeric.add_argument("--seed", type=int)

    sweep = parser.add_argument_group("sweep")
    sweep.add_argument("--sweep-command", choices=["oned", "radial", "eigen", "scheme"])
    sweep.add_argument("--sweep-parameter")
    sweep.add_argument("--sweep-values", type=float, nargs="+")
    sweep.add_argument("--jobs", type=int)

    output = parser.add_argument_group("output")
    output.add_argument("--output", help="Output directory (defaults to SINGULAR_OUTPUT_DIR)")
    output.add_argument("--formats", nargs="+", choices=["csv", "json", "md"])
    return parser


def _coefficient(text: str) -> Union[float, str]:
    try:
        return float(text)
    except ValueError:
        return text


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON run configuration."""
    try:
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"configuration file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"configuration file {path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"configuration file {path} must hold a JSON object")
    return payload


def _set(block: Dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        block[key] = value


def merge_overrides(payload: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """File values overridden by the flags that were given."""
    merged = copy.deepcopy(payload)
    _set(merged, "command", args.command)

    problem = merged.setdefault("problem", {})
    for key in ("alpha", "gamma", "dim"):
        _set(problem, key, getattr(args, key))
    for key in ("coeff_c", "coeff_h", "coeff_p"):
        text = getattr(args, key)
        _set(problem, key, None if text is None else _coefficient(text))
    if args.geometry is not None or args.size is not None:
        geometry = problem.setdefault("geometry", {})
        _set(geometry, "kind", args.geometry)
        _set(geometry, "size", args.size)
    if args.operator is not None or args.a is not None or args.A is not None:
        operator = problem.setdefault("operator", {})
        _set(operator, "kind", args.operator)
        _set(operator, "a", args.a)
        _set(operator, "A", args.A)

    numeric = merged.setdefault("numeric", {})
    for key in ("nodes", "tol", "inner_tol", "level_tol", "eigen_tol", "grad_reg", "delta0",
                "ladder_factor", "barrier_s", "fit_window", "seed"):
        _set(numeric, key, getattr(args, key))
    if any(v is not None for v in (args.sweep_command, args.sweep_parameter, args.sweep_values, args.jobs)):
        sweep = numeric.setdefault("sweep", {})
        _set(sweep, "command", args.sweep_command)
        _set(sweep, "parameter", args.sweep_parameter)
        _set(sweep, "values", args.sweep_values)
        _set(sweep, "jobs", args.jobs)

    output = merged.setdefault("output", {})
    _set(output, "directory", args.output)
    _set(output, "formats", args.formats)
    return merged


def build_config(args: argparse.Namespace) -> RunConfig:
    payload = load_config_file(args.config) if args.config else {}
    merged = merge_overrides(payload, args)
    if "command" not in merged:
        raise ConfigError("no command given on the command line or in the configuration")
    if "alpha" not in merged["problem"] or "gamma" not in merged["problem"]:
        raise ConfigError("alpha and gamma are required (--alpha/--gamma or the problem block)")
    return RunConfig.model_validate(merged)


# -------------------------------------------------
# Command dispatcher
# -------------------------------------------------
def run_command(config: RunConfig) -> Dict[str, Any]:
    """
    Run the selected command. Library errors escaping a solver are wrapped
    in SolverFailureError.
    """
    try:
        return _dispatch(config)
    except (SingularLabError, ValidationError):
        raise
    except (ValueError, ArithmeticError) as e:
        raise SolverFailureError(f"{type(e).__name__}: {e}") from e


def _dispatch(config: RunConfig) -> Dict[str, Any]:
    """Lazy-load and run the selected command."""

    if config.command == "oned":
        from singular_src.commands.oned_command import run_oned_command
        return run_oned_command(config)

    elif config.command == "radial":
        from singular_src.commands.radial_command import run_radial_command
        return run_radial_command(config)

    elif config.command == "scheme":
        from singular_src.commands.scheme_command import run_scheme_command
        return run_scheme_command(config)

    elif config.command == "eigen":
        from singular_src.commands.eigen_command import run_eigen_command
        return run_eigen_command(config)

    elif config.command == "verify":
        from singular_src.commands.verify_command import run_verify_command
        return run_verify_command(config)

    elif config.command == "sweep":
        from singular_src.commands.sweep_command import run_sweep_command
        return run_sweep_command(config)

    raise ConfigError(f"Unknown command: {config.command}")


# -------------------------------------------------
# Main
# -------------------------------------------------
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())

    try:
        try:
            settings.validate()
        except ValueError as e:
            raise ConfigError(f"invalid settings: {e}") from e
        config = build_config(args)
        run_command(config)

    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (ConfigError, ParameterError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except HypothesisViolationError as e:
        logger.error(f"Hypothesis violated: {e}")
        return EXIT_HYPOTHESIS
    except SingularLabError as e:
        logger.error(f"Solver failure ({type(e).__name__}): {e}")
        return EXIT_SOLVER

    logger.info(f"{config.command} finished")
    return EXIT_OK


def run(config_path: str) -> int:
    """Run the command stored in a configuration file; returns the exit code."""
    return main(["--config", config_path])


if __name__ == "__main__":
    sys.exit(main())
