"""Beampattern evaluation and accuracy metrics.

A beampattern is the array response 20*log10|w^H a(theta)| over a uniform
angle grid, normalized so its maximum is exactly 0 dB and floored at
-120 dB. Metrics extracted from it: main-lobe width (half-power by
default), highest sidelobe level, and the pattern value at each known
interferer direction (the null depth is measured at the ground-truth angle,
not at the nearest pattern minimum, so it stays meaningful when nulls are
shallow).
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, steering_matrix
from .beamform import BeamWeights

FLOOR_DB = -120.0

MLW_MODES = ("-3db", "null-to-null")


class MetricExtractionError(ValueError):
    """Pattern has no peak near the steer direction (beamformer failed)."""


@dataclass(frozen=True)
class Beampattern:
    """Normalized pattern (max exactly 0 dB) on a strictly increasing grid."""

    angles_deg: np.ndarray
    power_db: np.ndarray


@dataclass(frozen=True)
class BeamMetrics:
    mlw_deg: float
    sll_db: float
    null_depths_db: tuple
    peak_doa_deg: float


def beampattern(weights, geom: ArrayGeometry, grid_step_deg: float = 0.05) -> Beampattern:
    """Evaluate |w^H a(theta)|^2 in dB over [-90, 90] and normalize to 0 dB."""
    if grid_step_deg <= 0.0:
        raise ValueError("grid step must be positive")
    w = weights.w if isinstance(weights, BeamWeights) else np.asarray(weights)
    n = round(180.0 / grid_step_deg) + 1
    angles = np.linspace(-90.0, 90.0, n)
    response = np.abs(w.conj() @ steering_matrix(geom, angles))
    with np.errstate(divide="ignore"):
        power = 20.0 * np.log10(response)
    power -= power.max()
    np.maximum(power, FLOOR_DB, out=power)
    return Beampattern(angles_deg=angles, power_db=power)


def _crossing(angles, power, i_from, direction, level):
    """Angle where the pattern first crosses ``level`` walking from a peak."""
    i = i_from
    last = len(power) - 1
    while 0 < i < last and power[i + direction] > level:
        i += direction
    j = i + direction
    if not 0 <= j <= last:
        return angles[i]
    # linear interpolation between the straddling grid points
    p0, p1 = power[i], power[j]
    if p1 == p0:
        return angles[j]
    frac = (level - p0) / (p1 - p0)
    return angles[i] + frac * (angles[j] - angles[i])


def _lobe_edge(power, i_from, direction):
    """Index of the first local minimum walking from the peak."""
    i = i_from
    last = len(power) - 1
    while 0 < i < last and power[i + direction] < power[i]:
        i += direction
    return i


def extract_metrics(pattern: Beampattern, target_doa_deg: float, interferer_doas_deg,
                    mlw_mode: str = "-3db") -> BeamMetrics:
    """Main-lobe width, sidelobe level and per-interferer null depths.

    Parameters
    ----------
    pattern : Beampattern
        Normalized pattern.
    target_doa_deg : float
        Where the main lobe is supposed to be; the pattern peak must lie
        within 2 degrees of it or ``MetricExtractionError`` is raised.
    interferer_doas_deg : sequence of float
        Ground-truth interferer directions; the null depth is the pattern
        value at the nearest grid angle.
    mlw_mode : str
        "-3db" (half-power width, default) or "null-to-null".
    """
    if mlw_mode not in MLW_MODES:
        raise ValueError(f"mlw_mode must be one of {MLW_MODES}")
    angles, power = pattern.angles_deg, pattern.power_db
    peak = int(np.argmax(power))
    peak_doa = float(angles[peak])
    if abs(peak_doa - target_doa_deg) > 2.0:
        raise MetricExtractionError(
            f"pattern peaks at {peak_doa:.2f} deg, more than 2 deg from the "
            f"{target_doa_deg:.2f} deg steer direction"
        )
    left_edge = _lobe_edge(power, peak, -1)
    right_edge = _lobe_edge(power, peak, +1)
    if mlw_mode == "-3db":
        mlw = _crossing(angles, power, peak, +1, -3.0) - _crossing(angles, power, peak, -1, -3.0)
    else:
        mlw = float(angles[right_edge] - angles[left_edge])
    outside = np.concatenate([power[:left_edge], power[right_edge + 1:]])
    sll = float(outside.max()) if outside.size else FLOOR_DB
    nulls = tuple(
        float(power[int(np.argmin(np.abs(angles - doa)))]) for doa in interferer_doas_deg
    )
    return BeamMetrics(mlw_deg=float(mlw), sll_db=sll, null_depths_db=nulls, peak_doa_deg=peak_doa)


def output_sinr_db(weights, steering: np.ndarray, target_power: float,
                   covariance: np.ndarray) -> float:
    """Output SINR ``target_power * |w^H a|^2 / (w^H R w)`` in dB.

    ``covariance`` is the total ground-truth covariance (signal included) by
    default in all stock experiments; pass an interference-plus-noise
    covariance for the conventional definition. Invariant to weight scaling.
    Clamped at -120 dB for a vanishing numerator.
    """
    w = weights.w if isinstance(weights, BeamWeights) else np.asarray(weights)
    signal = target_power * abs(complex(np.vdot(w, steering))) ** 2
    total = float(np.real(np.vdot(w, covariance @ w)))
    if signal <= 0.0:
        return FLOOR_DB
    return max(10.0 * math.log10(signal / total), FLOOR_DB)


def sinr_gain_db(output_db: float, input_db: float) -> float:
    """SINR gain: output SINR over input SINR, in dB."""
    return output_db - input_db


def write_pattern_csv(path, pattern: Beampattern, config_hash: str, seed: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "power_db", "config_hash", "seed"])
        for angle, power in zip(pattern.angles_deg, pattern.power_db):
            writer.writerow([repr(float(angle)), repr(float(power)), config_hash, seed])


METRIC_COLUMNS = [
    "M", "L", "engine", "trial", "mlw_deg", "sll_db",
    "null1_db", "null2_db", "null3_db", "peak_doa_deg", "config_hash", "seed",
]


def metric_row(m, l, engine, trial, metrics: BeamMetrics | None, config_hash, seed) -> list:
    """One CSV row; a failed extraction yields blank metric fields."""
    if metrics is None:
        fields = [""] * 6
    else:
        nulls = list(metrics.null_depths_db)[:3]
        nulls += [""] * (3 - len(nulls))
        fields = [repr(metrics.mlw_deg), repr(metrics.sll_db)] + [
            repr(v) if v != "" else "" for v in nulls
        ] + [repr(metrics.peak_doa_deg)]
    return [m, l, engine, trial, *fields, config_hash, seed]


def write_metric_rows(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        writer.writerows(rows)
