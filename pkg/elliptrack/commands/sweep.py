"""Chunk-count sweep for MEM-EIF[y_0] against the two reference trackers."""

import logging

import click

from ..reporting import RunReport, evaluation_summary, write_sweep_csv
from ..simulation import TrackerSpec, run_monte_carlo
from .common import (
    check_output_path,
    check_runs,
    config_option,
    handle_errors,
    load_scenario,
    metrics_option,
    open_output,
    out_option,
    parse_int_list,
    resolve_workers,
    runs_option,
    workers_option,
)

logger = logging.getLogger(__name__)


def sweep_trackers(chunks) -> list:
    """Reference trackers followed by one eif_y0 tracker per chunk count."""
    specs = [TrackerSpec("ekf_star"), TrackerSpec("eif_yl")]
    for value in chunks:
        if value == "L":
            specs.append(TrackerSpec("eif_y0", chunk_per_measurement=True))
        else:
            specs.append(TrackerSpec("eif_y0", chunk_count=value))
    return specs


@click.command("sweep")
@config_option
@click.option(
    "--chunks",
    default="1,2,4,L",
    show_default=True,
    help="Comma-separated chunk counts U; 'L' means one chunk per measurement.",
)
@click.option(
    "--rate",
    type=float,
    default=None,
    help="Override the Poisson measurement rate of the config.",
)
@runs_option
@workers_option
@out_option
@metrics_option
@handle_errors
def command(config_path, chunks, rate, runs, workers, out_path):
    """Write the per-step mean GW error for each chunk count."""
    check_output_path(out_path)
    check_runs(runs)
    chunks = parse_int_list(chunks, "chunks", allow_symbolic=True)
    workers = resolve_workers(workers)
    updates = {} if rate is None else {"poisson_rate": rate}
    _, scenario, config_hash = load_scenario(config_path, **updates)
    logger.info(f"Sweeping chunk counts {chunks} on config {config_hash}")

    reports = [
        RunReport.from_result(
            run_monte_carlo(scenario, spec, runs, workers=workers), config_hash
        )
        for spec in sweep_trackers(chunks)
    ]

    with open_output(out_path) as stream:
        write_sweep_csv(stream, reports, config_hash)
    click.echo(evaluation_summary(reports), err=out_path == "-")
