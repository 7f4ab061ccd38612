"""Command-line entry point for Elliptrack."""

import logging

import click
from dotenv import load_dotenv

# .env must be loaded before logging reads LOG_LEVEL and friends
load_dotenv(override=False)

from . import logging_config  # noqa: E402,F401 - Import to setup logging
from .commands import bench, evaluate, simulate, sweep  # noqa: E402
from .telemetry import elliptrack_info  # noqa: E402
from .version import version  # noqa: E402

logger = logging.getLogger(__name__)


@click.group()
@click.version_option(version=version, prog_name="elliptrack")
def cli():
    """Batch and sequential MEM trackers for elliptical extended objects."""
    elliptrack_info.labels(version=version).set(1)
    logger.debug(f"Starting Elliptrack version {version}")


# Register commands
cli.add_command(evaluate.command)
cli.add_command(bench.command)
cli.add_command(sweep.command)
cli.add_command(simulate.command)

if __name__ == "__main__":
    cli()
