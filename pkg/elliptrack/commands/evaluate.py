"""Monte Carlo accuracy comparison of the trackers."""

import logging

import click

from ..reporting import RunReport, evaluation_summary, write_evaluation_csv
from ..simulation import run_monte_carlo
from .common import (
    check_output_path,
    check_runs,
    config_option,
    handle_errors,
    load_scenario,
    metrics_option,
    open_output,
    out_option,
    parse_trackers,
    resolve_workers,
    runs_option,
    workers_option,
)

logger = logging.getLogger(__name__)


@click.command("evaluate")
@config_option
@click.option(
    "--trackers",
    default="ekf_star,eif_yl",
    show_default=True,
    help="Comma-separated trackers: ekf_star, eif_yl, eif_y0:U=<n>, eif_y0:U=L.",
)
@runs_option
@workers_option
@out_option
@metrics_option
@handle_errors
def command(config_path, trackers, runs, workers, out_path):
    """Write per-step mean/std GW error for each tracker."""
    check_output_path(out_path)
    check_runs(runs)
    specs = parse_trackers(trackers)
    workers = resolve_workers(workers)
    _, scenario, config_hash = load_scenario(config_path)
    logger.info(f"Evaluating {', '.join(s.label for s in specs)} on config {config_hash}")

    reports = [
        RunReport.from_result(
            run_monte_carlo(scenario, spec, runs, workers=workers), config_hash
        )
        for spec in specs
    ]

    with open_output(out_path) as stream:
        write_evaluation_csv(stream, reports, config_hash)
    click.echo(evaluation_summary(reports), err=out_path == "-")
