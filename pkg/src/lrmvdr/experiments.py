"""Experiment runners behind the ``mvdr`` CLI.

Four experiments share the simulation and engine stack:

* ``beampattern``   -- accuracy grid over (M, L) cells, both engines, random
                       directions per trial; emits patterns and a metric table.
* ``timing``        -- per-step wall time of each engine across an M sweep,
                       plus fitted log-log slopes over the upper half of the
                       sweep range.
* ``sinr-gain``     -- per-step output-SINR gain of the low-rank engine under
                       direction drift, with a mid-run reinitialization and an
                       optional zero-drift control.
* ``failure-mode``  -- null-depth comparison of the two engines with the
                       target above vs below the noise floor.

Every runner writes CSV outputs plus ``manifest.json`` (config hash, seed,
git revision, timestamps) and a small ``*_plot.json`` describing how to plot
the CSVs. Output rows carry the config hash and seed, so a run can be
reproduced from its outputs alone. Reruns with the same config and seed are
byte-identical except for measured times and the manifest timestamps.
"""

import csv
import json
import math
import statistics
import subprocess
import time
from datetime import datetime, timezone
from itertools import product
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, kernels
from .arrays import steering_vector
from .beamform import BeamWeights, distortionless_deviation, lowrank_weights
from .config import ExperimentConfig, build_scenario, draw_doas, trial_rng
from .covariance import CovarianceState, sample_covariance
from .engines import ExactMvdrEngine, LowRankMvdrEngine
from .kernels import BACKEND
from .linalg import invert_hermitian_eigh
from .lowrank import LowRankState
from .metrics import (
    MetricExtractionError,
    beampattern,
    extract_metrics,
    metric_row,
    output_sinr_db,
    write_metric_rows,
    write_pattern_csv,
)
from .simulate import DRIFT_BLOCK_SAMPLES, SnapshotStream, analytic_covariance, doa_at


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out: Path, cfg: ExperimentConfig, started: str, summary: dict) -> None:
    _write_json(out / "manifest.json", {
        "experiment": cfg.experiment,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "git_revision": _git_revision(),
        "package_version": __version__,
        "kernel_backend": BACKEND,
        "started": started,
        "finished": _utcnow(),
        "summary": summary,
    })


def _make_engines(cfg: ExperimentConfig):
    engines = []
    for name in cfg.engines:
        if name == "exact":
            engines.append(ExactMvdrEngine(cfg.alpha))
        else:
            engines.append(LowRankMvdrEngine(cfg.k, cfg.alpha))
    return engines


def _run_cell(cfg: ExperimentConfig, scenario, rng):
    """Shared accuracy loop: init both engines on one stream, step to the end.

    Weights are recomputed every step (and the distortionless deviation
    tracked); the final weights per engine are returned for pattern analysis.
    """
    stream = SnapshotStream(scenario, rng=rng)
    window = stream.take(scenario.window_m)
    engines = _make_engines(cfg)
    for engine in engines:
        engine.initialize(window)
    final = {}
    max_dev = 0.0
    for t in range(scenario.window_m, cfg.n_steps):
        x = stream.next()
        target_doa = doa_at(scenario.target, t)
        a = steering_vector(scenario.geometry, target_doa)
        for engine in engines:
            engine.step(x)
            weights = engine.weights(a, target_doa)
            max_dev = max(max_dev, distortionless_deviation(weights, a))
            final[engine.name] = weights
    return final, max_dev


# ---------------------------------------------------------------------------
# beampattern grid

def run_beampattern_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    if cfg.n_steps <= cfg.window_m:
        raise ValueError("beampattern experiment needs at least one post-window step")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    chash = cfg.config_hash()
    rows = []
    cells = {}
    max_dev = 0.0
    extraction_failures = 0
    for cell_idx, (m, l) in enumerate(product(cfg.m_list, cfg.l_list)):
        stats = {name: {"mlw_deg": [], "sll_db": [], "worst_null_db": []} for name in cfg.engines}
        for trial in range(cfg.trials):
            rng = trial_rng(cfg, cell_idx, trial)
            doas = draw_doas(rng, l + 1, cfg.doa_range_deg[0], cfg.doa_range_deg[1],
                             cfg.doa_min_separation_deg)
            scenario = build_scenario(cfg, m, doas)
            final, dev = _run_cell(cfg, scenario, rng)
            max_dev = max(max_dev, dev)
            target_doa, interferer_doas = scenario.doas_at(cfg.n_steps - 1)
            for name, weights in final.items():
                pattern = beampattern(weights, scenario.geometry, cfg.grid_step_deg)
                try:
                    met = extract_metrics(pattern, target_doa, interferer_doas, cfg.mlw_mode)
                except MetricExtractionError:
                    met = None
                    extraction_failures += 1
                rows.append(metric_row(m, l, name, trial, met, chash, cfg.seed))
                if met is not None:
                    stats[name]["mlw_deg"].append(met.mlw_deg)
                    stats[name]["sll_db"].append(met.sll_db)
                    if met.null_depths_db:
                        stats[name]["worst_null_db"].append(max(met.null_depths_db))
                if trial == 0:
                    write_pattern_csv(out / f"beampattern_{m}_{l}_{name}.csv", pattern,
                                      chash, cfg.seed)
        cells[f"{m}_{l}"] = {
            name: {key: (statistics.median(vals) if vals else None) for key, vals in s.items()}
            for name, s in stats.items()
        }
    write_metric_rows(out / "beampattern_metrics.csv", rows)
    summary = {
        "cells_median": cells,
        "max_distortionless_deviation": max_dev,
        "metric_extraction_failures": extraction_failures,
        "trials": cfg.trials,
    }
    _write_json(out / "beampattern_plot.json", {
        "title": "Beampatterns per (M, L) cell, trial 0",
        "x": "angle_deg",
        "y": "power_db",
        "series": [
            {"file": f"beampattern_{m}_{l}_{name}.csv", "label": f"M={m} L={l} {name}"}
            for (m, l) in product(cfg.m_list, cfg.l_list) for name in cfg.engines
        ],
        "metrics_table": "beampattern_metrics.csv",
    })
    _write_manifest(out, cfg, started, summary)
    return summary


# ---------------------------------------------------------------------------
# failure mode (target above vs below the noise floor)

def run_failure_mode_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    if "exact" not in cfg.engines or "lowrank" not in cfg.engines:
        raise ValueError("failure-mode experiment compares both engines")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    chash = cfg.config_hash()
    regimes = [("failure", cfg.failure_snr_db), ("contrast", cfg.contrast_snr_db)]
    gap_rows = []
    regime_gaps = {}
    max_dev = 0.0
    extraction_failures = 0
    for regime_idx, (regime, snr_db) in enumerate(regimes):
        gaps = []
        for trial in range(cfg.trials):
            rng = trial_rng(cfg, regime_idx, trial)
            doas = draw_doas(rng, cfg.l + 1, cfg.doa_range_deg[0], cfg.doa_range_deg[1],
                             cfg.doa_min_separation_deg)
            scenario = build_scenario(cfg, cfg.m, doas, snr_db=snr_db)
            final, dev = _run_cell(cfg, scenario, rng)
            max_dev = max(max_dev, dev)
            target_doa, interferer_doas = scenario.doas_at(cfg.n_steps - 1)
            metrics = {}
            for name, weights in final.items():
                pattern = beampattern(weights, scenario.geometry, cfg.grid_step_deg)
                try:
                    metrics[name] = extract_metrics(pattern, target_doa, interferer_doas,
                                                    cfg.mlw_mode)
                except MetricExtractionError:
                    metrics[name] = None
                    extraction_failures += 1
                if trial == 0:
                    suffix = "" if regime == "failure" else "_contrast"
                    write_pattern_csv(
                        out / f"failure-mode_{cfg.m}_{cfg.l}_{name}{suffix}.csv",
                        pattern, chash, cfg.seed,
                    )
            if metrics["exact"] is None or metrics["lowrank"] is None:
                continue
            for idx, (null_exact, null_low) in enumerate(zip(
                    metrics["exact"].null_depths_db, metrics["lowrank"].null_depths_db)):
                # positive gap: the exact engine's null is deeper
                gap = null_low - null_exact
                gap_rows.append([regime, repr(float(snr_db)), trial, idx + 1,
                                 repr(null_exact), repr(null_low), repr(gap),
                                 chash, cfg.seed])
                gaps.append(gap)
        regime_gaps[regime] = gaps
    with open(out / "failure-mode_gaps.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["regime", "target_snr_db", "trial", "interferer",
                         "null_exact_db", "null_lowrank_db", "null_gap_db",
                         "config_hash", "seed"])
        writer.writerows(gap_rows)
    summary = {
        "snr_db": {regime: snr for regime, snr in regimes},
        "positive_gap_fraction": {
            regime: float(np.mean([g > 0.0 for g in gaps])) if gaps else None
            for regime, gaps in regime_gaps.items()
        },
        "median_gap_db": {
            regime: float(np.median(gaps)) if gaps else None
            for regime, gaps in regime_gaps.items()
        },
        "max_distortionless_deviation": max_dev,
        "metric_extraction_failures": extraction_failures,
        "trials": cfg.trials,
    }
    _write_json(out / "failure-mode_plot.json", {
        "title": "Beampatterns with the target above vs below the noise floor",
        "x": "angle_deg",
        "y": "power_db",
        "series": [
            {"file": f"failure-mode_{cfg.m}_{cfg.l}_{name}{suffix}.csv",
             "label": f"{name} ({regime})"}
            for name in cfg.engines
            for regime, suffix in (("failure", ""), ("contrast", "_contrast"))
        ],
        "gaps_table": "failure-mode_gaps.csv",
    })
    _write_manifest(out, cfg, started, summary)
    return summary


# ---------------------------------------------------------------------------
# SINR gain under drift, with reinitialization

def _sinr_trace(cfg: ExperimentConfig, drift_override) -> tuple[np.ndarray, float]:
    """Mean per-step gain trace over trials; also the max weight deviation."""
    include_target = cfg.sinr_denominator == "total"
    n_trace = cfg.n_steps - cfg.window_m
    total = np.zeros(n_trace)
    max_dev = 0.0
    for trial in range(cfg.trials):
        rng = trial_rng(cfg, trial)
        doas = draw_doas(rng, cfg.l + 1, cfg.doa_range_deg[0], cfg.doa_range_deg[1],
                         cfg.doa_min_separation_deg)
        kwargs = {} if drift_override is None else {"drift_deg_per_1000": drift_override}
        scenario = build_scenario(cfg, cfg.m, doas, **kwargs)
        stream = SnapshotStream(scenario, rng=rng)
        engine = LowRankMvdrEngine(cfg.k, cfg.alpha)
        engine.initialize(stream.take(scenario.window_m))
        input_db = scenario.input_sinr_db()
        target_power = scenario.target_power()
        cached_block, cov = -1, None
        for t in range(scenario.window_m, cfg.n_steps):
            x = stream.next()
            engine.step(x)
            if cfg.reinit_step is not None and t == cfg.reinit_step:
                engine.reinitialize()
            block = t // DRIFT_BLOCK_SAMPLES
            if block != cached_block:
                cov = analytic_covariance(scenario, t, include_target=include_target)
                cached_block = block
            target_doa = doa_at(scenario.target, t)
            a = steering_vector(scenario.geometry, target_doa)
            weights = engine.weights(a, target_doa)
            max_dev = max(max_dev, distortionless_deviation(weights, a))
            out_db = output_sinr_db(weights, a, target_power, cov)
            total[t - scenario.window_m] += out_db - input_db
    return total / cfg.trials, max_dev


def _trace_csv(path, steps, trace, chash, seed) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "gain_db", "config_hash", "seed"])
        for step, gain in zip(steps, trace):
            writer.writerow([int(step), repr(float(gain)), chash, seed])


def run_sinr_gain_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    if cfg.reinit_step is not None and not (cfg.window_m <= cfg.reinit_step < cfg.n_steps):
        raise ValueError("reinit_step must fall inside the post-window run")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    chash = cfg.config_hash()
    steps = np.arange(cfg.window_m, cfg.n_steps)
    trace, max_dev = _sinr_trace(cfg, drift_override=None)
    _trace_csv(out / f"sinr-gain_{cfg.m}_{cfg.l}_lowrank.csv", steps, trace, chash, cfg.seed)

    reinit = cfg.reinit_step
    pre = steps < reinit if reinit is not None else np.ones_like(steps, dtype=bool)
    slope = float(np.polyfit(steps[pre], trace[pre], 1)[0])
    summary = {
        "pre_reinit_slope_db_per_step": slope,
        "max_distortionless_deviation": max_dev,
        "reinit_step": reinit,
        "trials": cfg.trials,
        "input_sinr_definition": "target power / (total interference power + noise variance)",
        "output_sinr_denominator": cfg.sinr_denominator,
    }
    if reinit is not None:
        before = trace[(steps >= reinit - 500) & (steps < reinit)]
        after = trace[(steps >= reinit) & (steps < reinit + 500)]
        summary["mean_gain_500_before_reinit_db"] = float(before.mean())
        summary["mean_gain_500_after_reinit_db"] = float(after.mean())
        summary["restoration_db"] = float(after.mean() - before.mean())
    if cfg.include_zero_drift_control:
        control, dev0 = _sinr_trace(cfg, drift_override=0.0)
        _trace_csv(out / f"sinr-gain_{cfg.m}_{cfg.l}_lowrank_control.csv", steps, control,
                   chash, cfg.seed)
        summary["control_slope_db_per_step"] = float(np.polyfit(steps[pre], control[pre], 1)[0])
        summary["max_distortionless_deviation"] = max(max_dev, dev0)
    _write_json(out / "sinr-gain_plot.json", {
        "title": "Low-rank engine SINR gain vs time step",
        "x": "step",
        "y": "gain_db",
        "series": [
            {"file": f"sinr-gain_{cfg.m}_{cfg.l}_lowrank.csv", "label": "drifting sources"},
        ] + ([{"file": f"sinr-gain_{cfg.m}_{cfg.l}_lowrank_control.csv",
               "label": "zero-drift control"}] if cfg.include_zero_drift_control else []),
        "annotations": {"reinit_step": reinit},
    })
    _write_manifest(out, cfg, started, summary)
    return summary


# ---------------------------------------------------------------------------
# timing sweep

_POOL_SIZE = 1024


class _TimedPoint:
    """One (M, engine) measurement target in the interleaved timing sweep.

    The host is shared, so its effective speed drifts on a seconds timescale;
    a single visit per point inherits whatever window it landed in. Each
    point is therefore re-visited once per pass, a per-pass median is taken,
    and the final estimate is the minimum over passes (the least-contended
    window). Steps are batched until one timed batch exceeds the timer floor.
    """

    def __init__(self, m, engine, step_fn, pool, warmup, measured_steps,
                 min_measurement_s, passes):
        self.m = m
        self.engine = engine
        self.step_fn = step_fn
        self.pool = pool
        self._i = 0
        for _ in range(warmup):
            self._step()
        t0 = time.perf_counter()
        for _ in range(5):
            self._step()
        estimate = max((time.perf_counter() - t0) / 5.0, 1e-9)
        self.batch = max(1, math.ceil(min_measurement_s / estimate))
        self.batches_per_pass = max(3, math.ceil(measured_steps / passes / self.batch))
        self.pass_estimates = []
        self.steps_measured = 0

    def _step(self):
        self.step_fn(self.pool[self._i % len(self.pool)])
        self._i += 1

    def run_pass(self):
        samples = []
        for _ in range(self.batches_per_pass):
            t0 = time.perf_counter_ns()
            for _ in range(self.batch):
                self._step()
            samples.append((time.perf_counter_ns() - t0) / self.batch)
            self.steps_measured += self.batch
        self.pass_estimates.append(statistics.median(samples))

    @property
    def per_step_seconds(self) -> float:
        return min(self.pass_estimates) / 1e9


def _fit_upper_slope(ms, ts) -> tuple[float, list]:
    """Log-log slope over sweep points in the upper half of the M range."""
    ms, ts = np.asarray(ms, dtype=float), np.asarray(ts, dtype=float)
    cut = 0.5 * (ms.min() + ms.max())
    keep = ms >= cut
    if keep.sum() < 2:
        keep = np.argsort(ms) >= len(ms) - 2
    slope = float(np.polyfit(np.log(ms[keep]), np.log(ts[keep]), 1)[0])
    return slope, [int(m) for m in ms[keep]]


def run_timing_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    chash = cfg.config_hash()
    records = []
    max_dev = 0.0
    # one compute thread so the fitted exponents reflect the arithmetic
    with threadpool_limits(limits=1):
        points = []
        checks = []
        for m in cfg.m_sweep:
            rng = trial_rng(cfg, m)
            doas = draw_doas(rng, cfg.l + 1, cfg.doa_range_deg[0], cfg.doa_range_deg[1],
                             cfg.doa_min_separation_deg)
            scenario = build_scenario(cfg, m, doas)
            stream = SnapshotStream(scenario, rng=rng)
            window = stream.take(scenario.window_m)
            # the arithmetic cost per step does not depend on snapshot values,
            # so a recycled pool stands in for a longer stream
            pool = stream.take(min(_POOL_SIZE, max(256, cfg.measured_steps)))
            a = steering_vector(scenario.geometry, doa_at(scenario.target, scenario.window_m))
            for name in cfg.engines:
                if name == "exact":
                    state = CovarianceState.from_window(window, cfg.alpha)

                    def step_fn(x, state=state, a=a):
                        # conventional baseline: rank-one covariance refresh,
                        # a from-scratch direct inversion, the weight solve
                        state.recursive_update(x)
                        state.rinv = invert_hermitian_eigh(state.r)
                        kernels.mvdr_numerator(state.rinv, a)

                    def check(state=state, a=a):
                        num, denom = kernels.mvdr_numerator(state.rinv, a)
                        return BeamWeights(w=num / denom, engine="exact")
                else:
                    lr_state = LowRankState.initialize(sample_covariance(window), cfg.k, cfg.alpha)

                    def step_fn(x, state=lr_state):
                        state.inverse_update(x)
                        lowrank_weights(state, a)

                    check = lambda state=lr_state, a=a: lowrank_weights(state, a)
                points.append(_TimedPoint(m, name, step_fn, pool, cfg.warmup_steps,
                                          cfg.measured_steps, cfg.min_measurement_seconds,
                                          cfg.timing_passes))
                checks.append((check, a))
        for _ in range(cfg.timing_passes):
            for point in points:
                point.run_pass()
        for point, (check, a) in zip(points, checks):
            max_dev = max(max_dev, distortionless_deviation(check(), a))
            records.append({"M": point.m, "engine": point.engine,
                            "per_step_seconds": point.per_step_seconds,
                            "steps_measured": point.steps_measured})
        records.sort(key=lambda rec: (rec["engine"], rec["M"]))
    with open(out / "timing_records.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["M", "engine", "per_step_seconds", "steps_measured",
                         "config_hash", "seed"])
        for rec in records:
            writer.writerow([rec["M"], rec["engine"], repr(rec["per_step_seconds"]),
                             rec["steps_measured"], chash, cfg.seed])
    slopes = {}
    fit_points = {}
    for name in cfg.engines:
        ms = [rec["M"] for rec in records if rec["engine"] == name]
        ts = [rec["per_step_seconds"] for rec in records if rec["engine"] == name]
        slopes[name], fit_points[name] = _fit_upper_slope(ms, ts)
    summary = {
        "slopes": slopes,
        "slope_fit_m_values": fit_points,
        "kernel_backend": BACKEND,
        "max_distortionless_deviation": max_dev,
    }
    _write_json(out / "timing_plot.json", {
        "title": "Per-step time vs number of antennas (log-log)",
        "x": "M",
        "y": "per_step_seconds",
        "series": [{"file": "timing_records.csv", "filter": {"engine": name}, "label": name}
                   for name in cfg.engines],
        "slopes": slopes,
    })
    _write_manifest(out, cfg, started, summary)
    return summary


RUNNERS = {
    "beampattern": run_beampattern_experiment,
    "timing": run_timing_experiment,
    "sinr-gain": run_sinr_gain_experiment,
    "failure-mode": run_failure_mode_experiment,
}


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    return RUNNERS[cfg.experiment](cfg, out_dir)
