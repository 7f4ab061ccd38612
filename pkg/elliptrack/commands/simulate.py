"""Single seeded run with per-step estimates and ground truth."""

import click

from ..reporting import write_trace_csv
from ..simulation import generate_trajectory, run_single, simulate_scans
from .common import (
    check_output_path,
    config_option,
    handle_errors,
    load_scenario,
    metrics_option,
    open_output,
    out_option,
    parse_trackers,
)


@click.command("simulate")
@config_option
@click.option(
    "--trackers",
    default="ekf_star,eif_yl",
    show_default=True,
    help="Comma-separated trackers: ekf_star, eif_yl, eif_y0:U=<n>, eif_y0:U=L.",
)
@click.option(
    "--run",
    "run_index",
    type=click.IntRange(min=0),
    default=0,
    show_default=True,
    help="Run index selecting the RNG stream.",
)
@out_option
@metrics_option
@handle_errors
def command(config_path, trackers, run_index, out_path):
    """Trace one run: estimate, ground truth and GW error per step."""
    check_output_path(out_path)
    specs = parse_trackers(trackers)
    _, scenario, config_hash = load_scenario(config_path)
    truth = generate_trajectory(scenario)
    scans = simulate_scans(scenario, truth, run_index)
    traces = {
        spec.label: run_single(scenario, spec, truth, scans, run_index)
        for spec in specs
    }
    with open_output(out_path) as stream:
        write_trace_csv(
            stream, truth, traces, [len(scan) for scan in scans], config_hash
        )
