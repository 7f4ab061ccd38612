"""CSV writers, config fingerprints and text summaries for the CLI."""

import csv
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, TextIO, Tuple

import numpy as np
from scipy import stats

from .simulation import GroundTruthStep, MonteCarloResult, RunTrace

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK_64 = 0xFFFFFFFFFFFFFFFF

REFERENCE_TRACKER = "ekf_star"


def fnv1a_64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of ``text``."""
    value = FNV_OFFSET_BASIS
    for byte in text.encode("utf-8"):
        value = ((value ^ byte) * FNV_PRIME) & _MASK_64
    return value


def fingerprint(canonical_text: str) -> str:
    return f"{fnv1a_64(canonical_text):016x}"


@dataclass(frozen=True, eq=False)
class RunReport:
    """Aggregated Monte Carlo output of one tracker on one scenario."""

    fingerprint: str
    tracker: str
    gw_mean: np.ndarray
    gw_std: np.ndarray
    seconds_per_update: float
    runs: int

    @classmethod
    def from_result(cls, result: MonteCarloResult, config_hash: str) -> "RunReport":
        return cls(
            fingerprint=config_hash,
            tracker=result.tracker,
            gw_mean=result.mean,
            gw_std=result.std,
            seconds_per_update=result.seconds_per_update,
            runs=result.runs,
        )

    @property
    def overall_mean(self) -> float:
        finite = self.gw_mean[np.isfinite(self.gw_mean)]
        return float(finite.mean()) if finite.size else math.nan


def _writer(stream: TextIO, config_hash: str, header: Sequence[str]):
    stream.write(f"# config_fnv1a64={config_hash}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    return writer


def _num(value: float) -> str:
    return f"{value:.6f}"


def write_evaluation_csv(
    stream: TextIO, reports: Sequence[RunReport], config_hash: str
) -> None:
    writer = _writer(stream, config_hash, ["k", "tracker", "gw_mean", "gw_std"])
    for report in reports:
        for k, (mean, std) in enumerate(zip(report.gw_mean, report.gw_std)):
            writer.writerow([k, report.tracker, _num(mean), _num(std)])


def write_sweep_csv(
    stream: TextIO, reports: Sequence[RunReport], config_hash: str
) -> None:
    writer = _writer(stream, config_hash, ["k", "config", "gw_mean"])
    for report in reports:
        for k, mean in enumerate(report.gw_mean):
            writer.writerow([k, report.tracker, _num(mean)])


def write_bench_csv(
    stream: TextIO,
    rows: Iterable[Tuple[int, str, float]],
    config_hash: str,
) -> None:
    writer = _writer(stream, config_hash, ["L", "tracker", "seconds_per_update"])
    for size, tracker, seconds in rows:
        writer.writerow([size, tracker, f"{seconds:.9f}"])


def write_trace_csv(
    stream: TextIO,
    truth: Sequence[GroundTruthStep],
    traces: Dict[str, RunTrace],
    counts: Sequence[int],
    config_hash: str,
) -> None:
    writer = _writer(
        stream,
        config_hash,
        [
            "k", "tracker", "num_measurements",
            "x", "y", "alpha", "l1", "l2",
            "gt_x", "gt_y", "gt_alpha", "gt_l1", "gt_l2",
            "gw",
        ],
    )
    for tracker, trace in traces.items():
        for gt, count, estimate, error in zip(
            truth, counts, trace.estimates, trace.errors
        ):
            if estimate is None:
                estimated = [math.nan] * 5
            else:
                estimated = [*estimate.center, *estimate.shape.mean]
            writer.writerow(
                [gt.k, tracker, count]
                + [_num(value) for value in estimated]
                + [_num(value) for value in (*gt.center, *gt.shape)]
                + [_num(error)]
            )


def fit_linear(
    sizes: Sequence[float], seconds: Sequence[float]
) -> Tuple[float, float, float]:
    """Least-squares line through (L, seconds); returns slope, intercept, R^2."""
    if len(sizes) < 2:
        return math.nan, math.nan, math.nan
    fit = stats.linregress(sizes, seconds)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


def evaluation_summary(reports: Sequence[RunReport]) -> str:
    """Overall mean GW error per tracker and its ratio to the sequential tracker."""
    reference = next(
        (report for report in reports if report.tracker == REFERENCE_TRACKER), None
    )
    lines = ["tracker            mean_gw[m]  ratio_vs_ekf_star  s/update"]
    for report in reports:
        if reference is not None and reference.overall_mean > 0:
            ratio = f"{report.overall_mean / reference.overall_mean:.3f}"
        else:
            ratio = "-"
        lines.append(
            f"{report.tracker:<18} {report.overall_mean:>10.3f}  {ratio:>17}  "
            f"{report.seconds_per_update:.3e}"
        )
    return "\n".join(lines)


def scaling_summary(fits: Dict[str, Tuple[float, float, float]]) -> str:
    """Fitted linear-scaling lines and the sequential/batch slope ratio."""
    lines = ["tracker            slope[s/meas]  intercept[s]  r2"]
    for tracker, (slope, intercept, r2) in fits.items():
        lines.append(f"{tracker:<18} {slope:>13.3e}  {intercept:>12.3e}  {r2:.4f}")
    sequential = fits.get("ekf_star")
    batch = fits.get("eif_yl")
    if sequential and batch and batch[0] > 0:
        lines.append(f"slope ratio ekf_star/eif_yl: {sequential[0] / batch[0]:.1f}")
    return "\n".join(lines)

