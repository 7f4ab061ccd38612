"""
Scenario simulation and Monte Carlo evaluation.

Ground truth follows a constant-speed path of straight and coordinated-turn
segments; measurements are drawn under the multiplicative error model with a
Poisson-distributed count per scan. Every run draws from its own RNG stream
derived from (rng_seed, run index), so results do not depend on how many
runs are executed or in which order.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import (
    CONFIDENCE_SCALE_95,
    DEFAULT_CLAMP_FACTOR,
    DEFAULT_DT,
    DEFAULT_INITIAL_KINEMATIC_COV,
    DEFAULT_INITIAL_SHAPE_COV,
    DEFAULT_MEASUREMENT_NOISE,
    DEFAULT_NUM_STEPS,
    DEFAULT_POISSON_RATE,
    DEFAULT_RNG_SEED,
    DEFAULT_SEGMENT_PLAN,
    DEFAULT_SEMI_AXES,
    DEFAULT_SPEED,
    KNOWN_TRACKERS,
    ExperimentFile,
)
from .errors import (
    ContractViolation,
    ElliptrackError,
    InitializationDeferred,
    TrackerFailure,
)
from .filters_core import GaussianState
from .helpers import as_matrix, check_spd
from .mem_model import MemNoiseConfig, shape_matrix
from .memeif import (
    BatchUpdateConfig,
    BatchVariant,
    batch_update_y0,
    batch_update_yl,
    clamp_shape_covariance,
)
from .memekf_star import MeasurementBatch, TrackState, sequential_update
from .metrics import Ellipse, extent_matrix, gw_distance
from .motion import MotionConfig, predict
from .telemetry import (
    initializations_deferred_total,
    measurements_processed_total,
    monte_carlo_runs_total,
    tracker_errors_total,
    update_duration,
    updates_total,
)

logger = logging.getLogger(__name__)

# Samples fewer than this cannot span a 2-D sample covariance
MIN_INIT_MEASUREMENTS = 3

# Relative eigenvalue floor below which a sample covariance is rank-deficient
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Segment:
    """A straight or coordinated-turn piece of the reference path."""

    kind: str
    steps: int
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("straight", "turn"):
            raise ContractViolation(f"Unknown segment kind {self.kind!r}")
        if self.steps < 1:
            raise ContractViolation(
                f"Segment needs at least one step, got {self.steps}"
            )
        if self.kind == "straight" and self.angle != 0.0:
            raise ContractViolation("Straight segments cannot turn")


def _default_plan() -> List[Segment]:
    return [Segment(kind, steps, angle) for kind, steps, angle in DEFAULT_SEGMENT_PLAN]


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Simulation inputs plus the tracker tuning shared by all runs."""

    semi_axes: Tuple[float, float] = DEFAULT_SEMI_AXES
    speed: float = DEFAULT_SPEED
    poisson_rate: float = DEFAULT_POISSON_RATE
    num_steps: int = DEFAULT_NUM_STEPS
    dt: float = DEFAULT_DT
    segment_plan: List[Segment] = field(default_factory=_default_plan)
    C_v: np.ndarray = field(
        default_factory=lambda: np.array(DEFAULT_MEASUREMENT_NOISE)
    )
    rng_seed: int = DEFAULT_RNG_SEED
    noise: Optional[MemNoiseConfig] = None
    motion: Optional[MotionConfig] = None
    initial_kinematic_cov: Sequence[float] = tuple(DEFAULT_INITIAL_KINEMATIC_COV)
    initial_shape_cov: Sequence[float] = tuple(DEFAULT_INITIAL_SHAPE_COV)
    clamp_factor: float = DEFAULT_CLAMP_FACTOR

    def __post_init__(self):
        if not self.poisson_rate > 0:
            raise ContractViolation(
                f"poisson_rate must be positive, got {self.poisson_rate}"
            )
        if self.num_steps < 1:
            raise ContractViolation(
                f"num_steps must be >= 1, got {self.num_steps}"
            )
        if min(self.semi_axes) <= 0:
            raise ContractViolation(
                f"semi_axes must be positive, got {self.semi_axes}"
            )
        planned = sum(segment.steps for segment in self.segment_plan)
        if planned != self.num_steps:
            raise ContractViolation(
                f"segment_plan covers {planned} steps, num_steps is "
                f"{self.num_steps}"
            )
        C_v = check_spd(as_matrix(self.C_v, "C_v", (2, 2)), "C_v")
        object.__setattr__(self, "C_v", C_v)
        if self.noise is None:
            object.__setattr__(self, "noise", MemNoiseConfig(C_v=C_v))
        if self.motion is None:
            object.__setattr__(self, "motion", MotionConfig(dt=self.dt))


@dataclass(frozen=True, eq=False)
class GroundTruthStep:
    """True target state at scan ``k``."""

    k: int
    center: np.ndarray
    orientation: float
    semi_axes: Tuple[float, float]
    velocity: np.ndarray

    @property
    def shape(self) -> np.ndarray:
        return np.array([self.orientation, *self.semi_axes])

    def ellipse(self) -> Ellipse:
        return Ellipse(self.center, extent_matrix(self.shape))


def generate_trajectory(cfg: ScenarioConfig) -> List[GroundTruthStep]:
    """
    Deterministic reference path starting at the origin with heading 0.
    Turn segments add ``angle / steps`` to the heading at every step; the
    target then advances ``speed * dt`` along its heading.
    """
    steps = []
    center = np.zeros(2)
    heading = 0.0
    k = 0
    for segment in cfg.segment_plan:
        increment = segment.angle / segment.steps if segment.kind == "turn" else 0.0
        for _ in range(segment.steps):
            heading += increment
            direction = np.array([math.cos(heading), math.sin(heading)])
            steps.append(
                GroundTruthStep(
                    k=k,
                    center=center.copy(),
                    orientation=heading,
                    semi_axes=tuple(cfg.semi_axes),
                    velocity=cfg.speed * direction,
                )
            )
            center = center + cfg.speed * cfg.dt * direction
            k += 1
    return steps


def _unit_disk(count: int, rng: np.random.Generator) -> np.ndarray:
    # rejection sampling from the enclosing square
    accepted = np.zeros((0, 2))
    while accepted.shape[0] < count:
        missing = count - accepted.shape[0]
        candidates = rng.uniform(-1.0, 1.0, size=(2 * missing + 4, 2))
        inside = candidates[np.einsum("ij,ij->i", candidates, candidates) <= 1.0]
        accepted = np.vstack([accepted, inside])
    return accepted[:count]


def sample_measurements(
    gt: GroundTruthStep, rate: float, C_v, rng: np.random.Generator
) -> MeasurementBatch:
    """
    Draw L ~ Poisson(rate) measurements y = center + S(p) h + v with h
    uniform on the unit disk and v ~ N(0, C_v). Empty scans are legal.
    """
    if not rate > 0:
        raise ContractViolation(f"Poisson rate must be positive, got {rate}")
    return draw_measurements(gt, int(rng.poisson(rate)), C_v, rng)


def draw_measurements(
    gt: GroundTruthStep, count: int, C_v, rng: np.random.Generator
) -> MeasurementBatch:
    """Exactly ``count`` measurements of ``gt`` under the MEM."""
    h = _unit_disk(count, rng)
    v = rng.multivariate_normal(np.zeros(2), np.asarray(C_v, dtype=float), size=count)
    S = shape_matrix(gt.shape)
    return MeasurementBatch(gt.center + h @ S.T + v, k=gt.k)


def _wrap_orientation(alpha: float) -> float:
    """Map an axis direction onto [0, pi)."""
    return float(np.mod(alpha, math.pi))


def initialize_track(
    batch: MeasurementBatch,
    initial_kinematic_cov: Sequence[float] = DEFAULT_INITIAL_KINEMATIC_COV,
    initial_shape_cov: Sequence[float] = DEFAULT_INITIAL_SHAPE_COV,
) -> TrackState:
    """
    Initialise a track from the sample statistics of one batch: the sample
    mean gives the position, the 95% confidence ellipse of the sample
    covariance gives the shape. Velocity and acceleration start at zero.

    Raises:
        InitializationDeferred: If the batch has fewer than three
            measurements or a rank-deficient sample covariance
    """
    measurements = batch.measurements
    if len(batch) < MIN_INIT_MEASUREMENTS:
        raise InitializationDeferred(
            f"Need {MIN_INIT_MEASUREMENTS} measurements to initialise, "
            f"got {len(batch)}",
            {"scan": batch.k},
        )
    mean = measurements.mean(axis=0)
    sample_cov = np.cov(measurements.T, ddof=1)
    eigvals, eigvecs = np.linalg.eigh(sample_cov)
    if eigvals[1] <= 0 or eigvals[0] <= RANK_TOLERANCE * eigvals[1]:
        raise InitializationDeferred(
            "Sample covariance is rank-deficient", {"scan": batch.k}
        )
    leading = eigvecs[:, 1]
    alpha = _wrap_orientation(math.atan2(leading[1], leading[0]))
    l1, l2 = np.sqrt(CONFIDENCE_SCALE_95 * eigvals[::-1])

    kinematic = GaussianState(
        np.concatenate([mean, np.zeros(4)]), np.diag(initial_kinematic_cov)
    )
    shape = GaussianState(np.array([alpha, l1, l2]), np.diag(initial_shape_cov))
    return TrackState(kinematic, shape)


@dataclass(frozen=True)
class TrackerSpec:
    """
    Tracker selected on the command line: ``ekf_star``, ``eif_yl``,
    ``eif_y0:U=<n>`` or ``eif_y0:U=L``.
    """

    kind: str
    chunk_count: int = 1
    chunk_per_measurement: bool = False

    @property
    def label(self) -> str:
        if self.kind != "eif_y0":
            return self.kind
        return f"eif_y0:U={'L' if self.chunk_per_measurement else self.chunk_count}"


def parse_tracker(text: str) -> TrackerSpec:
    """
    Raises:
        ContractViolation: On unknown identifiers or bad chunk counts
    """
    name, _, option = text.strip().partition(":")
    if name not in KNOWN_TRACKERS:
        raise ContractViolation(
            f"Unknown tracker {text!r}, expected one of {', '.join(KNOWN_TRACKERS)}"
        )
    if name != "eif_y0":
        if option:
            raise ContractViolation(f"Tracker {name} takes no options")
        return TrackerSpec(name)
    if not option:
        return TrackerSpec(name)
    key, _, value = option.partition("=")
    if key != "U" or not value:
        raise ContractViolation(f"Expected eif_y0:U=<n> or eif_y0:U=L, got {text!r}")
    if value == "L":
        return TrackerSpec(name, chunk_per_measurement=True)
    try:
        chunks = int(value)
    except ValueError:
        raise ContractViolation(f"Chunk count must be an integer or L, got {value!r}")
    if chunks < 1:
        raise ContractViolation(f"Chunk count must be >= 1, got {chunks}")
    return TrackerSpec(name, chunk_count=chunks)


def apply_update(
    track: TrackState,
    batch: MeasurementBatch,
    noise: MemNoiseConfig,
    spec: TrackerSpec,
    clamp_factor: float = DEFAULT_CLAMP_FACTOR,
) -> TrackState:
    """Run the selected measurement update and record its telemetry."""
    if len(batch) == 0:
        return track
    start_time = time.perf_counter()
    try:
        if spec.kind == "ekf_star":
            updated = sequential_update(track, batch, noise)
        elif spec.kind == "eif_yl":
            updated = batch_update_yl(
                track, batch, noise, BatchUpdateConfig(clamp_factor=clamp_factor)
            )
        else:
            chunks = len(batch) if spec.chunk_per_measurement else spec.chunk_count
            updated = batch_update_y0(
                track,
                batch,
                noise,
                BatchUpdateConfig(
                    variant=BatchVariant.EIF_Y0,
                    chunk_count=chunks,
                    clamp_factor=clamp_factor,
                ),
            )
    except ElliptrackError as e:
        tracker_errors_total.labels(
            tracker=spec.label, error_type=type(e).__name__
        ).inc()
        raise
    update_duration.labels(tracker=spec.label).observe(
        time.perf_counter() - start_time
    )
    updates_total.labels(tracker=spec.label).inc()
    measurements_processed_total.labels(tracker=spec.label).inc(len(batch))
    return updated


def run_rng(seed: int, run: int) -> np.random.Generator:
    """Independent stream for run ``run`` of a seeded experiment."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run,)))


def simulate_scans(
    cfg: ScenarioConfig, truth: List[GroundTruthStep], run: int
) -> List[MeasurementBatch]:
    """All measurement batches of one run, drawn up front."""
    rng = run_rng(cfg.rng_seed, run)
    return [sample_measurements(gt, cfg.poisson_rate, cfg.C_v, rng) for gt in truth]


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Per-step estimates and GW errors of one run (None/NaN before init)."""

    errors: np.ndarray
    estimates: List[Optional[TrackState]]
    update_seconds: float
    update_count: int


def run_single(
    cfg: ScenarioConfig,
    spec: TrackerSpec,
    truth: List[GroundTruthStep],
    scans: List[MeasurementBatch],
    run: int = 0,
    initial_track: Optional[TrackState] = None,
) -> RunTrace:
    """
    Track one simulated run. The track is initialised from the first scan
    (or taken from ``initial_track``); later steps predict, clamp, update
    and score against the ground truth. Scans that cannot initialise a
    track are pooled with the next one.

    Raises:
        TrackerFailure: Wrapping any tracker error with run and step indices
    """
    errors = np.full(len(truth), np.nan)
    estimates: List[Optional[TrackState]] = [None] * len(truth)
    track = initial_track
    pending = np.zeros((0, 2))
    update_seconds = 0.0
    update_count = 0

    for gt, batch in zip(truth, scans):
        try:
            if track is None:
                pending = np.vstack([pending, batch.measurements])
                try:
                    track = initialize_track(
                        MeasurementBatch(pending, k=gt.k),
                        cfg.initial_kinematic_cov,
                        cfg.initial_shape_cov,
                    )
                except InitializationDeferred as e:
                    initializations_deferred_total.inc()
                    logger.info(f"Run {run}: initialization deferred ({str(e)})")
                    continue
            elif gt.k > 0:
                track = predict(track, cfg.motion)
                track = clamp_shape_covariance(track, cfg.clamp_factor)
                start_time = time.perf_counter()
                track = apply_update(track, batch, cfg.noise, spec, cfg.clamp_factor)
                if len(batch):
                    update_seconds += time.perf_counter() - start_time
                    update_count += 1
            errors[gt.k] = gw_distance(track.ellipse(), gt.ellipse())
            estimates[gt.k] = track
        except TrackerFailure:
            raise
        except ElliptrackError as e:
            raise TrackerFailure(
                f"Tracker {spec.label} failed: {e.detail}",
                {**e.context, "run": run, "step": gt.k},
            ) from e

    return RunTrace(errors, estimates, update_seconds, update_count)


def column_stats(errors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-step mean and (population) std over the finite entries of each column."""
    finite = np.isfinite(errors)
    counts = finite.sum(axis=0)
    values = np.where(finite, errors, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = values.sum(axis=0) / counts
        centered = np.where(finite, errors - mean, 0.0)
        std = np.sqrt((centered**2).sum(axis=0) / counts)
    return mean, std


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    tracker: str
    errors: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    seconds_per_update: float
    runs: int

    @property
    def overall_mean(self) -> float:
        return float(np.nanmean(self.mean))


def run_monte_carlo(
    cfg: ScenarioConfig,
    spec: TrackerSpec,
    runs: int,
    workers: int = 1,
    initial_track: Optional[TrackState] = None,
) -> MonteCarloResult:
    """
    Run ``runs`` seeded simulations of ``cfg`` with the tracker ``spec``
    and aggregate the per-step GW errors. Runs may execute on ``workers``
    threads; the result is identical to serial execution.

    Raises:
        ContractViolation: If runs or workers is below 1
        TrackerFailure: If any run fails
    """
    if runs < 1:
        raise ContractViolation("runs must be ≥ 1")
    if workers < 1:
        raise ContractViolation("workers must be ≥ 1")

    truth = generate_trajectory(cfg)
    logger.info(
        f"Starting {runs} Monte Carlo runs for {spec.label} "
        f"({cfg.num_steps} steps, {workers} worker(s))"
    )

    def one_run(run: int) -> RunTrace:
        trace = run_single(
            cfg, spec, truth, simulate_scans(cfg, truth, run), run, initial_track
        )
        monte_carlo_runs_total.labels(tracker=spec.label).inc()
        if (run + 1) % 10 == 0:
            logger.info(f"{spec.label}: finished run {run + 1}/{runs}")
        return trace

    if workers == 1:
        traces = [one_run(run) for run in range(runs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            traces = list(executor.map(one_run, range(runs)))

    errors = np.vstack([trace.errors for trace in traces])
    mean, std = column_stats(errors)
    total_updates = sum(trace.update_count for trace in traces)
    total_seconds = sum(trace.update_seconds for trace in traces)
    logger.info(
        f"Finished {spec.label}: overall mean GW error "
        f"{float(np.nanmean(mean)):.3f} m"
    )
    return MonteCarloResult(
        tracker=spec.label,
        errors=errors,
        mean=mean,
        std=std,
        seconds_per_update=total_seconds / total_updates if total_updates else 0.0,
        runs=runs,
    )


def build_scenario(experiment: ExperimentFile) -> ScenarioConfig:
    """Turn a validated experiment file into a ScenarioConfig."""
    C_v = np.array(experiment.measurement_noise, dtype=float)
    return ScenarioConfig(
        semi_axes=tuple(experiment.semi_axes),
        speed=experiment.speed,
        poisson_rate=experiment.poisson_rate,
        num_steps=experiment.num_steps,
        dt=experiment.dt,
        segment_plan=[
            Segment(segment.kind, segment.steps, segment.angle)
            for segment in experiment.segment_plan
        ],
        C_v=C_v,
        rng_seed=experiment.rng_seed,
        noise=MemNoiseConfig(
            C_v=C_v, C_h=np.array(experiment.multiplicative_noise, dtype=float)
        ).validate(),
        motion=MotionConfig(
            dt=experiment.dt,
            jerk_psd=experiment.jerk_psd,
            shape_process_noise=np.array(experiment.shape_process_noise, dtype=float),
        ),
        initial_kinematic_cov=tuple(experiment.initial_kinematic_cov),
        initial_shape_cov=tuple(experiment.initial_shape_cov),
        clamp_factor=experiment.clamp_factor,
    )
