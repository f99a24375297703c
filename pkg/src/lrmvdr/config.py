"""Experiment configuration: JSON schema, validation, hashing, scenarios.

An experiment config is a flat JSON object (see ``configs/`` for the stock
files and the README for the schema). The ``scenario`` sub-object is a
template: per-trial source directions are drawn by the harness, everything
else is taken verbatim.
"""

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .simulate import ScenarioConfig, scenario_from_dict

_KEEP = object()  # sentinel: leave the template's power knobs alone

EXPERIMENTS = ("beampattern", "timing", "sinr-gain", "failure-mode")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    scenario: dict = field(default_factory=dict)
    # accuracy-grid experiments
    m_list: list = field(default_factory=lambda: [50, 75, 100])
    l_list: list = field(default_factory=lambda: [1, 2, 3])
    # single-cell experiments
    m: int = 100
    l: int = 1
    k: int = 10
    alpha: float = 0.99
    n_steps: int = 1001
    reinit_step: int | None = None
    trials: int = 1
    engines: list = field(default_factory=lambda: ["exact", "lowrank"])
    # beampattern evaluation
    grid_step_deg: float = 0.05
    mlw_mode: str = "-3db"
    # random direction drawing
    doa_range_deg: list = field(default_factory=lambda: [-30.0, 30.0])
    doa_min_separation_deg: float = 2.0
    # timing sweep
    m_sweep: list = field(default_factory=lambda: [10, 16, 24, 40, 64, 96, 160, 256, 320, 384, 448, 500])
    warmup_steps: int = 100
    measured_steps: int = 300
    min_measurement_seconds: float = 1e-3
    timing_passes: int = 7
    # failure-mode regimes (target-to-noise ratios, dB)
    failure_snr_db: float = 10.0
    contrast_snr_db: float = -10.0
    # sinr-gain options
    include_zero_drift_control: bool = True
    sinr_denominator: str = "total"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        window = int(self.scenario.get("window_m", 1000))
        if self.n_steps < window:
            raise ValueError(f"n_steps {self.n_steps} below the window size {window}")
        if self.sinr_denominator not in ("total", "interference-plus-noise"):
            raise ValueError("sinr_denominator must be 'total' or 'interference-plus-noise'")
        for engine in self.engines:
            if engine not in ("exact", "lowrank"):
                raise ValueError(f"unknown engine {engine!r}")

    @property
    def window_m(self) -> int:
        return int(self.scenario.get("window_m", 1000))

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Short stable hash of the resolved configuration (seed included)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def load_experiment_config(path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**data)


def draw_doas(rng, count: int, low: float, high: float, min_separation: float) -> np.ndarray:
    """Uniform directions in [low, high] with pairwise separation, rejection-sampled."""
    for _ in range(10000):
        doas = rng.uniform(low, high, size=count)
        if count < 2:
            return doas
        diffs = np.abs(doas[:, None] - doas[None, :])[~np.eye(count, dtype=bool)]
        if diffs.min() >= min_separation:
            return doas
    raise RuntimeError(
        f"could not place {count} directions {min_separation} deg apart in "
        f"[{low}, {high}]"
    )


def build_scenario(cfg: ExperimentConfig, num_elements: int, doas, *,
                   snr_db=_KEEP, drift_deg_per_1000=_KEEP) -> ScenarioConfig:
    """Concrete ScenarioConfig for one trial from the config template.

    ``doas[0]`` is the target; the rest are interferers. By default the
    template's power and drift knobs are kept; keyword overrides replace
    them (the zero-drift control run overrides the drift).
    """
    template = dict(cfg.scenario)
    drift = float(template.pop("drift_deg_per_1000", 0.0))
    if drift_deg_per_1000 is not _KEEP:
        drift = float(drift_deg_per_1000)
    interferer_power = float(template.pop("interferer_power", 1.0))
    target_waveform = template.pop("target_waveform", "linear-chirp")
    interferer_waveform = template.pop("interferer_waveform", "complex-gaussian")
    template.pop("num_elements", None)
    if snr_db is not _KEEP:
        template["snr_db"] = snr_db
        template.pop("sinr_db", None)
    target = {
        "doa_deg": float(doas[0]),
        "drift_deg_per_1000": drift,
        "waveform": target_waveform,
    }
    interferers = [
        {
            "doa_deg": float(d),
            "drift_deg_per_1000": drift,
            "waveform": interferer_waveform,
            "power": interferer_power,
        }
        for d in doas[1:]
    ]
    num_interferers = len(interferers)
    if cfg.k < num_interferers + 1:
        warnings.warn(
            f"rank k={cfg.k} is below L+1={num_interferers + 1}; the retained "
            "subspace cannot hold every source", stacklevel=2
        )
    return scenario_from_dict(
        {"num_elements": num_elements, "target": target, "interferers": interferers, **template}
    )


def trial_rng(cfg: ExperimentConfig, *key) -> np.random.Generator:
    """Deterministic per-(cell, trial) generator derived from the run seed."""
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "build_scenario",
    "draw_doas",
    "load_experiment_config",
    "trial_rng",
]
