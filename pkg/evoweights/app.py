"""
Command-line entry point

    evoweights run      --data flights.csv --config flights.yaml [--out-trace t.csv] [--out-summary s.json]
    evoweights analyze  --data flights.csv --config flights.yaml
    evoweights validate --data flights.csv --config flights.yaml

Every command runs the same task flow up to the point it needs:

    load inputs -> build population -> simulate -> export -> report

Exit codes: 0 success, 2 invalid input, 3 runtime failure. Errors are
written to stderr as one JSON document; stdout carries command output only.
"""

import argparse
import functools
import json
import logging
import sys
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

from evoweights import __version__
from evoweights.components.analysis import static_analysis, summarize
from evoweights.components.reports import build_summary, format_run_overview, format_static_report
from evoweights.core.engine import SimConfig, Trace, simulate
from evoweights.core.model import Population, RawTable, build_population
from evoweights.exceptions import ErrorDetail, SimulationError, ValidationError
from evoweights.utils.data_utils import (
    RunConfigFile,
    build_sim_config,
    config_echo,
    feature_specs,
    read_run_config,
    read_table_csv,
)
from evoweights.utils.trace_io import dumps_summary, write_summary_json, write_trace_csv

logger = logging.getLogger(__name__)

# ============================================================================
# CONFIGURATION
# ============================================================================

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]
STRATEGY_PRESETS = ["dombal", "altsel", "self_consistent"]


@dataclass(frozen=True)
class RunInputs:
    """Validated inputs shared by all commands"""

    config: RunConfigFile
    table: RawTable
    population: Population
    data_path: str


# ============================================================================
# ERROR REPORTING
# ============================================================================

def error_document(exit_code: int, errors: Sequence[ErrorDetail]) -> str:
    """Machine-readable error list written to stderr"""
    return json.dumps({
        "status": "error",
        "exit_code": exit_code,
        "errors": [error.to_dict() for error in errors],
    }, ensure_ascii=False)


def exit_codes(handler: Callable[[argparse.Namespace], int]) -> Callable[[argparse.Namespace], int]:
    """
    Map exceptions of a command to exit codes

    Notes:
        - ValidationError -> 2
        - SimulationError and I/O failures -> 3
    """
    @functools.wraps(handler)
    def wrapper(args: argparse.Namespace) -> int:
        try:
            return handler(args)
        except ValidationError as e:
            logger.error("❌ %s", e)
            print(error_document(EXIT_VALIDATION, e.errors), file=sys.stderr)
            return EXIT_VALIDATION
        except (SimulationError, OSError) as e:
            logger.error("❌ %s", e)
            print(error_document(EXIT_RUNTIME, [ErrorDetail(str(e))]), file=sys.stderr)
            return EXIT_RUNTIME
    return wrapper


# ============================================================================
# TASK 1: LOAD INPUTS
# ============================================================================

def load_inputs_task(args: argparse.Namespace) -> RunInputs:
    """
    Read config and table, then build the population

    Args:
        args: Parsed arguments with config and optional data

    Returns:
        RunInputs

    Raises:
        ValidationError: Any problem with either file or their combination

    Notes:
        - --data overrides the config 'data' key
        - the population is built once and never changes afterwards
    """
    logger.info("🔍 Loading inputs...")
    config = read_run_config(args.config)

    data_path = args.data or config.data
    if not data_path:
        raise ValidationError.single("no data file given (use --data or the config key 'data')")

    table = read_table_csv(data_path, config.row_name_column)
    population = build_population(table, feature_specs(config, table))
    return RunInputs(config, table, population, str(data_path))


# ============================================================================
# TASK 2: SIMULATE
# ============================================================================

def simulate_task(inputs: RunInputs, args: argparse.Namespace) -> Trace:
    sim_config = sim_config_task(inputs, args)
    logger.info("⚙️ Simulating with %s mix...", sim_config.mix.mode.value)
    return simulate(inputs.population, sim_config)


def sim_config_task(inputs: RunInputs, args: argparse.Namespace) -> SimConfig:
    return build_sim_config(
        inputs.config,
        inputs.table.column_names,
        iterations=getattr(args, "iterations", None),
        strategy=getattr(args, "strategy", None),
        workers=getattr(args, "workers", None),
    )


# ============================================================================
# TASK 3: EXPORT
# ============================================================================

def export_task(inputs: RunInputs, trace: Trace, args: argparse.Namespace) -> dict:
    """
    Write the trace CSV and the summary JSON

    Returns:
        The summary document

    Notes:
        - CLI output paths override the config 'outputs' block
        - with no summary path the summary goes to stdout
    """
    trace_path = args.out_trace or inputs.config.outputs.trace
    summary_path = args.out_summary or inputs.config.outputs.summary

    report = summarize(trace, inputs.population)
    echo = config_echo(trace.config, inputs.config, inputs.data_path)
    summary = build_summary(report, trace, echo, str(trace_path) if trace_path else None)

    if trace_path:
        write_trace_csv(trace, trace_path)
    if summary_path:
        write_summary_json(summary, summary_path)
        print(format_run_overview(report))
    else:
        sys.stdout.write(dumps_summary(summary))
    return summary


# ============================================================================
# COMMANDS
# ============================================================================

@exit_codes
def cli_run(args: argparse.Namespace) -> int:
    """Simulate and write trace + summary"""
    inputs = load_inputs_task(args)
    trace = simulate_task(inputs, args)
    export_task(inputs, trace, args)
    return EXIT_OK


@exit_codes
def cli_analyze(args: argparse.Namespace) -> int:
    """Static diagnostics only: population, kinships, r0, rho, iteration-0 signs"""
    inputs = load_inputs_task(args)
    sim_config = sim_config_task(inputs, args)
    gamma0 = sim_config.initial_state(inputs.population.m).gamma
    print(format_static_report(static_analysis(inputs.population, gamma0)))
    return EXIT_OK


@exit_codes
def cli_validate(args: argparse.Namespace) -> int:
    """Schema and type checks of a data/config pair"""
    inputs = load_inputs_task(args)
    sim_config_task(inputs, args)
    print(f"✅ Valid: {inputs.table.n} rows x {inputs.table.m} genes")
    return EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="CSV decision table (overrides the config 'data' key)")
    common.add_argument("--config", required=True, help="YAML or JSON run configuration")
    common.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS, type=str.upper,
                        help="Log level for messages on stderr (default: WARNING)")

    parser = argparse.ArgumentParser(
        prog="evoweights",
        description="Feature relevance weights from evolutionary game dynamics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="Run the simulation")
    run.add_argument("--out-trace", help="Long-format trace CSV")
    run.add_argument("--out-summary", help="Summary JSON (stdout if omitted)")
    run.add_argument("--iterations", type=int, help="Override max_iterations (early stopping)")
    run.add_argument("--strategy", choices=STRATEGY_PRESETS, help="Strategy preset overriding the config")
    run.add_argument("--workers", type=int, help="Threads for strategy evaluation")
    run.set_defaults(handler=cli_run)

    analyze = commands.add_parser("analyze", parents=[common], help="Print static diagnostics")
    analyze.set_defaults(handler=cli_analyze)

    validate = commands.add_parser("validate", parents=[common], help="Check data and config")
    validate.set_defaults(handler=cli_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format=LOG_FORMAT, force=True)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
