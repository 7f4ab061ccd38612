"""Options and error handling shared by every sub-command."""

import contextlib
import functools
import logging
import os
from pathlib import Path
from typing import Iterator, List, Optional, TextIO, Tuple

import click
from prometheus_client import REGISTRY, write_to_textfile

from ..config import ExperimentFile, get_default_workers, load_experiment
from ..errors import ConfigError, ContractViolation, ElliptrackError
from ..reporting import fingerprint
from ..simulation import ScenarioConfig, TrackerSpec, build_scenario, parse_tracker

logger = logging.getLogger(__name__)

config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Experiment YAML file; omitted keys use the defaults.",
)

out_option = click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, allow_dash=True),
    required=True,
    help="CSV output path, '-' for stdout.",
)

runs_option = click.option(
    "--runs", type=int, default=100, show_default=True, help="Monte Carlo runs."
)

workers_option = click.option(
    "--workers",
    type=int,
    default=None,
    help="Worker threads for Monte Carlo runs [default: ELLIPTRACK_WORKERS or 1].",
)

metrics_option = click.option(
    "--metrics-out",
    "metrics_out",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write Prometheus metrics in textfile-collector format.",
)


def handle_errors(command):
    """
    Map ElliptrackError to its exit code with the detail on stderr, and
    export metrics once the command is done.
    """

    @functools.wraps(command)
    def wrapper(*args, metrics_out: Optional[str] = None, **kwargs):
        try:
            return command(*args, **kwargs)
        except ElliptrackError as e:
            logger.error(f"{command.__name__} failed: {str(e)}")
            click.echo(f"Error: {str(e)}", err=True)
            raise click.exceptions.Exit(e.exit_code)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except Exception as e:
            logger.exception(f"Unexpected error in {command.__name__}")
            click.echo(f"Error: unexpected failure: {str(e)}", err=True)
            raise click.exceptions.Exit(1)
        finally:
            if metrics_out:
                write_to_textfile(metrics_out, REGISTRY)
                logger.info(f"Metrics written to {metrics_out}")

    return wrapper


def check_output_path(out_path: str) -> None:
    """
    Fail before any work is done if ``out_path`` cannot be written.

    Raises:
        ConfigError: If the file or its directory is not writable
    """
    if out_path == "-":
        return
    path = Path(out_path)
    if path.exists():
        writable = path.is_file() and os.access(path, os.W_OK)
    else:
        parent = path.parent
        writable = parent.is_dir() and os.access(parent, os.W_OK)
    if not writable:
        raise ConfigError(f"Cannot write output file {out_path}")


@contextlib.contextmanager
def open_output(out_path: str) -> Iterator[TextIO]:
    """UTF-8 text stream for ``out_path`` ('-' is stdout)."""
    try:
        stream = click.open_file(out_path, "w", encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot write output file {out_path}: {str(e)}")
    with stream:
        yield stream


def check_runs(runs: int) -> None:
    if runs < 1:
        raise ConfigError("runs must be ≥ 1")


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        return get_default_workers()
    if workers < 1:
        raise ConfigError(f"workers must be ≥ 1, got {workers}")
    return workers


def load_scenario(
    config_path: Optional[str], **updates
) -> Tuple[ExperimentFile, ScenarioConfig, str]:
    """
    Load the experiment file, apply command-line overrides and return it
    with its scenario and fingerprint.
    """
    experiment = load_experiment(config_path)
    if updates:
        try:
            experiment = ExperimentFile(
                **{**experiment.model_dump(), **updates}
            )
        except ValueError as e:
            raise ConfigError(f"Invalid override: {str(e)}")
    try:
        scenario = build_scenario(experiment)
    except ContractViolation as e:
        raise ConfigError(f"Invalid configuration: {e.detail}")
    return experiment, scenario, fingerprint(experiment.canonical_text())


def parse_trackers(text: str) -> List[TrackerSpec]:
    parts = [part for part in text.split(",") if part.strip()]
    if not parts:
        raise ConfigError("At least one tracker is required")
    try:
        return [parse_tracker(part) for part in parts]
    except ContractViolation as e:
        raise ConfigError(e.detail)


def parse_int_list(text: str, name: str, allow_symbolic: bool = False) -> List:
    """Comma-separated positive integers; ``L`` is kept as-is when allowed."""
    values = []
    for part in (part.strip() for part in text.split(",")):
        if not part:
            continue
        if allow_symbolic and part == "L":
            values.append(part)
            continue
        try:
            value = int(part)
        except ValueError:
            raise ConfigError(f"{name} must be integers, got {part!r}")
        if value < 1:
            raise ConfigError(f"{name} must be ≥ 1, got {value}")
        values.append(value)
    if not values:
        raise ConfigError(f"{name} must not be empty")
    return values
