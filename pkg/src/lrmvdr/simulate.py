"""Snapshot-stream simulator: target echo, interferers, white noise.

Each snapshot is ``a(theta_0(t)) s_0(t) + sum_l a(theta_l(t)) s_l(t) + n(t)``
with circular complex Gaussian noise of per-element variance
``noise_variance``. Source directions follow a piecewise-constant drift
schedule (one step per 1000 samples). Streams are deterministic given the
seed; the random draw order per snapshot is fixed (interferers in listed
order, then noise).

Power conventions: every power is linear. The target power is resolved from
exactly one of ``snr_db`` (relative to per-element noise), ``sinr_db``
(relative to total interference plus noise per element) or the target's own
``power`` field. ``_db`` suffixed config values are decibels; everything
else is linear.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayGeometry, steering_vector

# Sources move in discrete steps, once per this many samples.
DRIFT_BLOCK_SAMPLES = 1000

WAVEFORMS = ("linear-chirp", "complex-gaussian")


@dataclass
class SourceSpec:
    """One radiating source: direction, drift rate, waveform, linear power."""

    doa_deg: float
    drift_deg_per_1000: float = 0.0
    waveform: str = "complex-gaussian"
    power: float = 1.0

    def __post_init__(self):
        if not -90.0 < self.doa_deg < 90.0:
            raise ValueError(f"source DoA {self.doa_deg} outside (-90, 90)")
        if self.power <= 0.0:
            raise ValueError("source power must be positive")
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}")


def doa_at(spec: SourceSpec, t: int) -> float:
    """Direction at sample ``t``: drift applied once per 1000-sample block."""
    if t < 0:
        raise ValueError("sample index must be non-negative")
    return spec.doa_deg + spec.drift_deg_per_1000 * (t // DRIFT_BLOCK_SAMPLES)


def chirp_sample(t: int, bandwidth_hz: float, duration_s: float, sample_rate_hz: float) -> complex:
    """Baseband linear-FM sample exp(j*pi*(B/T)*tau^2), tau = t/fs.

    Unit modulus, phase-continuous in ``t``. ``bandwidth_hz`` may be 0 (the
    constant waveform); it must not exceed the sample rate.
    """
    if bandwidth_hz > sample_rate_hz:
        raise ValueError(
            f"chirp bandwidth {bandwidth_hz:g} Hz violates the {sample_rate_hz:g} Hz "
            "sample rate (aliased)"
        )
    tau = t / sample_rate_hz
    if not 0.0 <= tau < duration_s:
        raise ValueError(f"sample time {tau:g}s outside the [0, {duration_s:g}s) pulse")
    return complex(np.exp(1j * math.pi * (bandwidth_hz / duration_s) * tau * tau))


@dataclass
class ScenarioConfig:
    """Full description of one simulated reception scenario."""

    geometry: ArrayGeometry
    target: SourceSpec
    interferers: list = field(default_factory=list)
    noise_variance: float = 1.0
    sinr_db: float | None = None
    snr_db: float | None = None
    sample_rate_hz: float = 1e6
    chirp_bandwidth_hz: float = 1e5
    chirp_duration_s: float = 0.1
    window_m: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.noise_variance <= 0.0:
            raise ValueError("noise variance must be positive")
        if self.window_m < 1:
            raise ValueError("window_m must be at least 1")
        if self.sinr_db is not None and self.snr_db is not None:
            raise ValueError("set at most one of sinr_db and snr_db")
        if self.chirp_bandwidth_hz > self.sample_rate_hz:
            raise ValueError("chirp bandwidth exceeds the sample rate")
        doas = [self.target.doa_deg] + [s.doa_deg for s in self.interferers]
        for i in range(len(doas)):
            for j in range(i + 1, len(doas)):
                if abs(doas[i] - doas[j]) < 0.5:
                    raise ValueError(
                        f"source DoAs {doas[i]} and {doas[j]} closer than 0.5 deg"
                    )

    @property
    def num_interferers(self) -> int:
        return len(self.interferers)

    def target_power(self) -> float:
        """Linear target power after resolving the snr/sinr knobs."""
        if self.snr_db is not None:
            return self.noise_variance * 10.0 ** (self.snr_db / 10.0)
        if self.sinr_db is not None:
            total = sum(s.power for s in self.interferers) + self.noise_variance
            return total * 10.0 ** (self.sinr_db / 10.0)
        return self.target.power

    def input_sinr_db(self) -> float:
        """Ground-truth per-element input SINR in dB."""
        interference = sum(s.power for s in self.interferers)
        return 10.0 * math.log10(self.target_power() / (interference + self.noise_variance))

    def doas_at(self, t: int):
        """(target DoA, interferer DoAs) at sample ``t``."""
        return doa_at(self.target, t), [doa_at(s, t) for s in self.interferers]


def _source_sample(cfg: ScenarioConfig, spec: SourceSpec, power: float, t: int, rng) -> complex:
    amp = math.sqrt(power)
    if spec.waveform == "linear-chirp":
        # long runs repeat the pulse
        pulse_len = round(cfg.chirp_duration_s * cfg.sample_rate_hz)
        s = chirp_sample(
            t % pulse_len, cfg.chirp_bandwidth_hz,
            cfg.chirp_duration_s, cfg.sample_rate_hz,
        )
    else:
        z = rng.standard_normal(2)
        s = complex(z[0], z[1]) / math.sqrt(2.0)
    return amp * s


def synthesize_snapshot(cfg: ScenarioConfig, t: int, rng) -> np.ndarray:
    """One received snapshot at sample index ``t``, consuming ``rng`` draws."""
    geom = cfg.geometry
    x = steering_vector(geom, doa_at(cfg.target, t)) * _source_sample(
        cfg, cfg.target, cfg.target_power(), t, rng
    )
    for spec in cfg.interferers:
        x = x + steering_vector(geom, doa_at(spec, t)) * _source_sample(cfg, spec, spec.power, t, rng)
    scale = math.sqrt(cfg.noise_variance / 2.0)
    noise = rng.standard_normal(2 * geom.num_elements) * scale
    return x + noise[::2] + 1j * noise[1::2]


class SnapshotStream:
    """Sequential snapshot generator with cached per-block steering vectors.

    Single-writer: one stream feeds any number of engines within a run so
    that engine comparisons see identical data.
    """

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None, rng=None):
        self.cfg = cfg
        if rng is not None:
            self.rng = rng
        else:
            self.rng = np.random.default_rng(cfg.seed if seed is None else seed)
        self.index = 0
        self._target_power = cfg.target_power()
        self._block = -1
        self._steerings = None

    def _refresh_steerings(self, block: int) -> None:
        t = block * DRIFT_BLOCK_SAMPLES
        geom = self.cfg.geometry
        self._steerings = [steering_vector(geom, doa_at(self.cfg.target, t))] + [
            steering_vector(geom, doa_at(s, t)) for s in self.cfg.interferers
        ]
        self._block = block

    def next(self) -> np.ndarray:
        cfg, t = self.cfg, self.index
        block = t // DRIFT_BLOCK_SAMPLES
        if block != self._block:
            self._refresh_steerings(block)
        x = self._steerings[0] * _source_sample(cfg, cfg.target, self._target_power, t, self.rng)
        for spec, a in zip(cfg.interferers, self._steerings[1:]):
            x = x + a * _source_sample(cfg, spec, spec.power, t, self.rng)
        scale = math.sqrt(cfg.noise_variance / 2.0)
        noise = self.rng.standard_normal(2 * cfg.geometry.num_elements) * scale
        self.index += 1
        return x + noise[::2] + 1j * noise[1::2]

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` snapshots stacked as an (n, M) array."""
        out = np.empty((n, self.cfg.geometry.num_elements), dtype=np.complex128)
        for i in range(n):
            out[i] = self.next()
        return out


def analytic_covariance(cfg: ScenarioConfig, t: int, include_target: bool = True) -> np.ndarray:
    """Ground-truth covariance at sample ``t`` from the configured powers.

    ``include_target=False`` gives the interference-plus-noise covariance.
    """
    geom = cfg.geometry
    r = cfg.noise_variance * np.eye(geom.num_elements, dtype=np.complex128)
    if include_target:
        a = steering_vector(geom, doa_at(cfg.target, t))
        r += cfg.target_power() * np.outer(a, a.conj())
    for spec in cfg.interferers:
        a = steering_vector(geom, doa_at(spec, t))
        r += spec.power * np.outer(a, a.conj())
    return r


def scenario_from_dict(d: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a plain dict (the JSON config schema)."""
    d = dict(d)
    geom = ArrayGeometry(num_elements=int(d.pop("num_elements")))
    target = SourceSpec(**d.pop("target"))
    interferers = [SourceSpec(**spec) for spec in d.pop("interferers", [])]
    return ScenarioConfig(geometry=geom, target=target, interferers=interferers, **d)


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))
