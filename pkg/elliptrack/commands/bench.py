"""Runtime scaling of the sequential and batch updates."""

import logging
import statistics
import timeit
from typing import Callable

import click
import numpy as np

from ..errors import ConfigError
from ..filters_core import GaussianState
from ..memeif import BatchUpdateConfig, batch_update_yl
from ..memekf_star import MeasurementBatch, TrackState, sequential_update
from ..reporting import fit_linear, scaling_summary, write_bench_csv
from ..simulation import draw_measurements, generate_trajectory, run_rng
from .common import (
    check_output_path,
    config_option,
    handle_errors,
    load_scenario,
    metrics_option,
    open_output,
    out_option,
    parse_int_list,
)

logger = logging.getLogger(__name__)


def synthetic_prior() -> TrackState:
    """Fixed prior used for every benchmark size."""
    return TrackState(
        GaussianState(
            np.array([0.0, 0.0, 5.0, 0.0, 0.0, 0.0]),
            np.diag([100.0, 100.0, 25.0, 25.0, 1.0, 1.0]),
        ),
        GaussianState(np.array([0.0, 170.0, 40.0]), np.diag([0.02, 400.0, 100.0])),
    )


def median_seconds(update: Callable[[], object], reps: int) -> float:
    """
    Median per-call time of ``update`` over ``reps`` samples. Each sample
    times a loop of calls sized by ``Timer.autorange`` (at least 0.2 s), which
    also serves as the warm-up.
    """
    timer = timeit.Timer(update)
    number, _ = timer.autorange()
    samples = timer.repeat(repeat=reps, number=number)
    return statistics.median(samples) / number


@click.command("bench")
@config_option
@click.option(
    "--sizes",
    default="10,50,100,500,1000",
    show_default=True,
    help="Comma-separated measurement counts L.",
)
@click.option(
    "--reps",
    type=int,
    default=7,
    show_default=True,
    help="Timed samples per size; each sample loops for at least 0.2 s.",
)
@out_option
@metrics_option
@handle_errors
def command(config_path, sizes, reps, out_path):
    """Time sequential_update and batch_update_yl for each batch size."""
    check_output_path(out_path)
    sizes = parse_int_list(sizes, "sizes")
    if reps < 1:
        raise ConfigError(f"reps must be ≥ 1, got {reps}")
    _, scenario, config_hash = load_scenario(config_path)
    gt = generate_trajectory(scenario)[0]
    prior = synthetic_prior()
    noise = scenario.noise
    batch_cfg = BatchUpdateConfig(clamp_factor=scenario.clamp_factor)

    rows = []
    for size in sizes:
        batch: MeasurementBatch = draw_measurements(
            gt, size, scenario.C_v, run_rng(scenario.rng_seed, size)
        )
        timings = {
            "ekf_star": median_seconds(
                lambda: sequential_update(prior, batch, noise), reps
            ),
            "eif_yl": median_seconds(
                lambda: batch_update_yl(prior, batch, noise, batch_cfg), reps
            ),
        }
        for tracker, seconds in timings.items():
            logger.info(f"L={size} {tracker}: {seconds:.6f} s per update")
            rows.append((size, tracker, seconds))

    with open_output(out_path) as stream:
        write_bench_csv(stream, rows, config_hash)

    fits = {
        tracker: fit_linear(
            [row[0] for row in rows if row[1] == tracker],
            [row[2] for row in rows if row[1] == tracker],
        )
        for tracker in ("ekf_star", "eif_yl")
    }
    click.echo(scaling_summary(fits), err=out_path == "-")
