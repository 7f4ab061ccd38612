"""Prometheus metrics definitions for the Elliptrack trackers and CLI."""

from prometheus_client import Counter, Gauge, Histogram

# Tracker update dispatch
updates_total = Counter(
    "elliptrack_updates_total",
    "Total number of measurement updates performed",
    ["tracker"],
)

update_duration = Histogram(
    "elliptrack_update_duration_seconds",
    "Time spent in a single measurement update",
    ["tracker"],
    buckets=(1e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1, 0.5, 1.0),
)

measurements_processed_total = Counter(
    "elliptrack_measurements_processed_total",
    "Total number of measurements consumed by updates",
    ["tracker"],
)

tracker_errors_total = Counter(
    "elliptrack_tracker_errors_total",
    "Total number of errors raised by tracker updates",
    ["tracker", "error_type"],
)

# Numerical repairs inside the batch updates
degenerate_linearizations_total = Counter(
    "elliptrack_degenerate_linearizations_total",
    "Total number of residual covariances repaired by eigenvalue flooring",
    ["matrix"],
)

shape_clamps_total = Counter(
    "elliptrack_shape_clamps_total",
    "Total number of semi-axis variances clamped",
    ["axis"],
)

# Simulation pipeline
initializations_deferred_total = Counter(
    "elliptrack_initializations_deferred_total",
    "Total number of scans that could not initialise a track",
)

monte_carlo_runs_total = Counter(
    "elliptrack_monte_carlo_runs_total",
    "Total number of completed Monte Carlo runs",
    ["tracker"],
)

elliptrack_info = Gauge("elliptrack_info", "Info about the package", ["version"])
