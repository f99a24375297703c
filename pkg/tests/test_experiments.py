"""Experiment runners: outputs, schemas, determinism, engine wrappers."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from lrmvdr.arrays import ArrayGeometry, steering_vector
from lrmvdr.config import ExperimentConfig, build_scenario, draw_doas, load_experiment_config
from lrmvdr.engines import ExactMvdrEngine, LowRankMvdrEngine
from lrmvdr.experiments import (
    run_beampattern_experiment,
    run_failure_mode_experiment,
    run_sinr_gain_experiment,
    run_timing_experiment,
)
from lrmvdr.simulate import ScenarioConfig, SnapshotStream, SourceSpec

TINY_SCENARIO = {
    "noise_variance": 1.0,
    "snr_db": -10.0,
    "interferer_power": 1.0,
    "target_waveform": "linear-chirp",
    "window_m": 64,
    "drift_deg_per_1000": 0.01,
}


def tiny_beampattern_cfg(**kw):
    base = dict(
        experiment="beampattern",
        seed=7,
        scenario=dict(TINY_SCENARIO),
        m_list=[8],
        l_list=[1],
        k=4,
        alpha=0.99,
        n_steps=80,
        trials=2,
        grid_step_deg=0.5,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestEngines:
    def test_recursive_inverse_tracks_direct_inversion(self):
        scenario = ScenarioConfig(
            geometry=ArrayGeometry(6),
            target=SourceSpec(doa_deg=5.0, waveform="complex-gaussian", power=0.1),
            interferers=[SourceSpec(doa_deg=-20.0)],
            window_m=64,
            seed=3,
        )
        stream = SnapshotStream(scenario)
        window = stream.take(64)
        recursive = ExactMvdrEngine(0.99, inverse_mode="recursive")
        direct = ExactMvdrEngine(0.99, inverse_mode="direct")
        recursive.initialize(window)
        direct.initialize(window)
        a = steering_vector(scenario.geometry, 5.0)
        for _ in range(100):
            x = stream.next()
            recursive.step(x)
            direct.step(x)
        w_r = recursive.weights(a, 5.0).w
        w_d = direct.weights(a, 5.0).w
        assert np.linalg.norm(w_r - w_d) / np.linalg.norm(w_d) < 1e-6

    def test_lowrank_underflow_triggers_self_reinit(self):
        scenario = ScenarioConfig(
            geometry=ArrayGeometry(5),
            target=SourceSpec(doa_deg=0.0, waveform="complex-gaussian"),
            window_m=32,
            seed=4,
        )
        stream = SnapshotStream(scenario)
        engine = LowRankMvdrEngine(k=2, alpha=0.99)
        engine.initialize(stream.take(32))
        engine.state.alpha = 1e-13  # force the next denominator to underflow
        engine.step(np.zeros(5, dtype=complex))
        assert engine.reinit_count == 1
        # reinit restores the configured forgetting factor
        assert engine.state.alpha == 0.99

    def test_explicit_reinitialize_uses_trailing_window(self):
        scenario = ScenarioConfig(
            geometry=ArrayGeometry(5),
            target=SourceSpec(doa_deg=0.0, waveform="complex-gaussian", power=10.0),
            window_m=32,
            seed=5,
        )
        stream = SnapshotStream(scenario)
        engine = LowRankMvdrEngine(k=2, alpha=0.99)
        engine.initialize(stream.take(32))
        old_basis = engine.state.basis.copy()
        for _ in range(40):
            engine.step(stream.next())
        engine.reinitialize()
        assert engine.reinit_count == 1
        assert engine.state.basis.shape == old_basis.shape
        assert not np.array_equal(engine.state.basis, old_basis)


class TestBeampatternRunner:
    def test_outputs_and_schema(self, tmp_path):
        cfg = tiny_beampattern_cfg()
        summary = run_beampattern_experiment(cfg, tmp_path)
        rows = read_csv(tmp_path / "beampattern_metrics.csv")
        assert rows[0][:4] == ["M", "L", "engine", "trial"]
        # 1 cell x 2 trials x 2 engines
        assert len(rows) - 1 == 4
        assert (tmp_path / "beampattern_8_1_exact.csv").exists()
        assert (tmp_path / "beampattern_8_1_lowrank.csv").exists()
        assert (tmp_path / "beampattern_plot.json").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["experiment"] == "beampattern"
        assert manifest["config_hash"] == cfg.config_hash()
        assert summary["max_distortionless_deviation"] <= 1e-8

    def test_rows_carry_hash_and_seed(self, tmp_path):
        cfg = tiny_beampattern_cfg()
        run_beampattern_experiment(cfg, tmp_path)
        rows = read_csv(tmp_path / "beampattern_metrics.csv")
        header, data = rows[0], rows[1:]
        h = header.index("config_hash")
        s = header.index("seed")
        for row in data:
            assert row[h] == cfg.config_hash()
            assert row[s] == "7"

    def test_determinism_bit_identical(self, tmp_path):
        cfg = tiny_beampattern_cfg()
        run_beampattern_experiment(cfg, tmp_path / "a")
        run_beampattern_experiment(cfg, tmp_path / "b")
        for name in ("beampattern_metrics.csv", "beampattern_8_1_exact.csv",
                     "beampattern_8_1_lowrank.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_changes_outputs(self, tmp_path):
        run_beampattern_experiment(tiny_beampattern_cfg(seed=7), tmp_path / "a")
        run_beampattern_experiment(tiny_beampattern_cfg(seed=8), tmp_path / "b")
        a = (tmp_path / "a" / "beampattern_metrics.csv").read_bytes()
        b = (tmp_path / "b" / "beampattern_metrics.csv").read_bytes()
        assert a != b

    def test_single_engine_filter(self, tmp_path):
        cfg = tiny_beampattern_cfg(engines=["lowrank"])
        run_beampattern_experiment(cfg, tmp_path)
        assert not (tmp_path / "beampattern_8_1_exact.csv").exists()
        assert (tmp_path / "beampattern_8_1_lowrank.csv").exists()


class TestFailureModeRunner:
    def test_outputs(self, tmp_path):
        scenario = dict(TINY_SCENARIO, window_m=128)
        cfg = ExperimentConfig(
            experiment="failure-mode", seed=3, scenario=scenario,
            m=12, l=1, k=4, alpha=0.99, n_steps=140, trials=3, grid_step_deg=0.5,
        )
        summary = run_failure_mode_experiment(cfg, tmp_path)
        rows = read_csv(tmp_path / "failure-mode_gaps.csv")
        assert rows[0][0] == "regime"
        # two regimes x three trials x one interferer, minus any failed trials
        assert len(rows) - 1 + summary["metric_extraction_failures"] >= 2 * 3
        assert set(summary["positive_gap_fraction"]) == {"failure", "contrast"}
        assert (tmp_path / "failure-mode_12_1_exact.csv").exists()
        assert (tmp_path / "failure-mode_12_1_lowrank_contrast.csv").exists()


class TestSinrGainRunner:
    def test_outputs_and_restoration_fields(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="sinr-gain", seed=5, scenario=dict(TINY_SCENARIO),
            m=8, l=1, k=4, alpha=0.99, n_steps=2264, reinit_step=1200, trials=2,
            engines=["lowrank"],
        )
        summary = run_sinr_gain_experiment(cfg, tmp_path)
        trace = read_csv(tmp_path / "sinr-gain_8_1_lowrank.csv")
        assert trace[0] == ["step", "gain_db", "config_hash", "seed"]
        assert len(trace) - 1 == cfg.n_steps - cfg.window_m
        assert "pre_reinit_slope_db_per_step" in summary
        assert "restoration_db" in summary
        assert (tmp_path / "sinr-gain_8_1_lowrank_control.csv").exists()

    def test_reinit_step_validated(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="sinr-gain", seed=5, scenario=dict(TINY_SCENARIO),
            m=8, l=1, k=4, n_steps=200, reinit_step=10, trials=1,
        )
        with pytest.raises(ValueError):
            run_sinr_gain_experiment(cfg, tmp_path)


class TestTimingRunner:
    def test_records_and_slopes(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="timing", seed=11, scenario=dict(TINY_SCENARIO),
            l=1, k=4, alpha=0.99, n_steps=65,
            m_sweep=[6, 10, 16], warmup_steps=5, measured_steps=20,
            min_measurement_seconds=1e-4,
        )
        summary = run_timing_experiment(cfg, tmp_path)
        rows = read_csv(tmp_path / "timing_records.csv")
        assert rows[0][:2] == ["M", "engine"]
        assert len(rows) - 1 == 3 * 2
        for row in rows[1:]:
            assert float(row[2]) > 0.0
        assert set(summary["slopes"]) == {"exact", "lowrank"}
        assert (tmp_path / "timing_plot.json").exists()


class TestConfigHandling:
    def test_load_with_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "experiment": "beampattern", "seed": 1, "scenario": TINY_SCENARIO,
            "m_list": [8], "l_list": [1], "k": 4, "n_steps": 80, "trials": 1,
        }))
        cfg = load_experiment_config(path, {"seed": 99, "engines": ["exact"]})
        assert cfg.seed == 99
        assert cfg.engines == ["exact"]

    def test_hash_covers_seed(self):
        a = tiny_beampattern_cfg(seed=1)
        b = tiny_beampattern_cfg(seed=2)
        assert a.config_hash() != b.config_hash()

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(experiment="nope")

    def test_n_steps_below_window_rejected(self):
        with pytest.raises(ValueError):
            tiny_beampattern_cfg(n_steps=10)

    def test_draw_doas_separation(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            doas = draw_doas(rng, 4, -30.0, 30.0, 2.0)
            diffs = np.abs(doas[:, None] - doas[None, :])[~np.eye(4, dtype=bool)]
            assert diffs.min() >= 2.0
            assert doas.min() >= -30.0 and doas.max() <= 30.0

    def test_low_rank_warns_when_k_below_sources(self):
        cfg = tiny_beampattern_cfg(k=1)
        with pytest.warns(UserWarning, match="below L\\+1"):
            build_scenario(cfg, 8, [0.0, 10.0])


class TestCli:
    def test_cli_runs_tiny_config(self, tmp_path, capsys):
        from lrmvdr.cli import main
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "experiment": "beampattern", "seed": 1, "scenario": TINY_SCENARIO,
            "m_list": [8], "l_list": [1], "k": 4, "n_steps": 80, "trials": 1,
            "grid_step_deg": 0.5,
        }))
        out = tmp_path / "out"
        code = main(["beampattern", "--config", str(path), "--out", str(out)])
        assert code == 0
        assert (out / "manifest.json").exists()
        assert "beampattern" in capsys.readouterr().out

    def test_cli_engine_filter_and_seed(self, tmp_path):
        from lrmvdr.cli import main
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "experiment": "beampattern", "seed": 1, "scenario": TINY_SCENARIO,
            "m_list": [8], "l_list": [1], "k": 4, "n_steps": 80, "trials": 1,
            "grid_step_deg": 0.5,
        }))
        out = tmp_path / "out"
        code = main(["beampattern", "--config", str(path), "--out", str(out),
                     "--seed", "55", "--engine", "lowrank"])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 55
        assert not (out / "beampattern_8_1_exact.csv").exists()

    def test_stock_configs_parse(self):
        from lrmvdr.cli import _DEFAULT_CONFIGS, default_config_path
        for experiment in _DEFAULT_CONFIGS:
            cfg = load_experiment_config(default_config_path(experiment))
            assert cfg.experiment == experiment
