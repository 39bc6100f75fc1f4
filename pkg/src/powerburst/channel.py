"""Seeded simulator turning a burst schedule into the current trace a charging station observes.

Randomness comes from numpy's Philox4x64 counter-based generator. Each noise
source draws from its own named stream keyed by ``(seed, stream id)``, so
turning one source off does not shift the draws of the others.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from powerburst.trace import PowerTrace
from powerburst.tx import BurstSchedule

_STREAMS = {"timing": 1, "width": 2, "amplitude": 3, "os": 4, "noise": 5}
_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ChannelModel:
    """Parametric distortion of the burst schedule.

    ``width_shrink_mean`` compresses the transmitter's clock: the observed
    position and width of every burst are scaled by it, which reproduces the
    shorter-than-intended received bit period.
    """

    baseline_ma: float = 50.0
    burst_amplitude_ma: float = 400.0
    amplitude_jitter_frac: float = 0.0
    width_shrink_mean: float = 1.0
    width_jitter_frac: float = 0.0
    start_jitter_s: float = 0.0
    hf_noise_ma: float = 0.0
    os_burst_rate_hz: float = 0.0
    os_burst_width_s: float = 0.05
    os_burst_amplitude_ma: float = 150.0
    sample_rate_hz: float = 5000.0
    seed: int = 0

    def __post_init__(self):
        if self.baseline_ma < 0:
            raise ValueError("baseline_ma must be non-negative")
        for name in ("burst_amplitude_ma", "os_burst_width_s", "os_burst_amplitude_ma", "sample_rate_hz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("amplitude_jitter_frac", "width_jitter_frac", "start_jitter_s", "hf_noise_ma", "os_burst_rate_hz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 < self.width_shrink_mean <= 1:
            raise ValueError("width_shrink_mean must lie in (0, 1]")
        if not self.width_shrink_mean * (1 - 3 * self.width_jitter_frac) > 0:
            raise ValueError("width_jitter_frac too large: widths would go non-positive at 3 sigma")
        if not (isinstance(self.seed, int) and 0 <= self.seed <= _MAX_SEED):
            raise ValueError("seed must be an unsigned 64-bit integer")

    def replace(self, **changes) -> "ChannelModel":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelModel":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown channel keys: {sorted(unknown)}")
        return cls(**data)

    @property
    def is_noiseless(self) -> bool:
        return (
            self.amplitude_jitter_frac == 0
            and self.width_jitter_frac == 0
            and self.start_jitter_s == 0
            and self.hf_noise_ma == 0
            and self.os_burst_rate_hz == 0
            and self.width_shrink_mean == 1
        )


def calibrate_from_paper() -> ChannelModel:
    """Default model fitted to the Nexus 6 ten-peak capture (500 ms intended, 311 ms observed)."""
    return ChannelModel(
        baseline_ma=50.0,
        burst_amplitude_ma=400.0,
        amplitude_jitter_frac=0.15,
        width_shrink_mean=0.622,
        width_jitter_frac=0.17,
        start_jitter_s=0.02,
        hf_noise_ma=15.0,
        os_burst_rate_hz=0.05,
        os_burst_width_s=0.05,
        os_burst_amplitude_ma=150.0,
        sample_rate_hz=5000.0,
        seed=0,
    )


def _rng(seed: int, stream: str) -> np.random.Generator:
    ss = np.random.SeedSequence([seed, _STREAMS[stream]])
    return np.random.Generator(np.random.Philox(ss))


def _add_plateau(out: np.ndarray, fs: float, start: float, end: float, level: float) -> None:
    i0 = max(0, int(math.ceil(start * fs - 1e-9)))
    i1 = min(len(out), int(math.ceil(end * fs - 1e-9)))
    if i1 > i0:
        out[i0:i1] += level


def simulate(schedule: BurstSchedule, model: ChannelModel) -> PowerTrace:
    fs = model.sample_rate_hz
    n = int(round(schedule.total_duration_s * fs))
    out = np.full(n, model.baseline_ma, dtype=np.float64)
    k = len(schedule.intervals)
    shrink = model.width_shrink_mean

    if k:
        sched = np.asarray(schedule.intervals)
        start_j = _rng(model.seed, "timing").normal(0.0, 1.0, k) * model.start_jitter_s
        width_j = _rng(model.seed, "width").normal(0.0, 1.0, k) * model.width_jitter_frac
        amp_j = _rng(model.seed, "amplitude").normal(0.0, 1.0, k) * model.amplitude_jitter_frac
        starts = np.maximum(sched[:, 0] * shrink + start_j, 0.0)
        widths = np.maximum((sched[:, 1] - sched[:, 0]) * shrink * (1 + width_j), 2.0 / fs)
        amps = model.burst_amplitude_ma * (1 + amp_j)
        for s, w, a in zip(starts, widths, amps):
            _add_plateau(out, fs, s, s + w, a)

    if model.os_burst_rate_hz > 0:
        rng = _rng(model.seed, "os")
        count = rng.poisson(model.os_burst_rate_hz * schedule.total_duration_s)
        for s in np.sort(rng.uniform(0.0, schedule.total_duration_s, count)):
            _add_plateau(out, fs, s, s + model.os_burst_width_s, model.os_burst_amplitude_ma)

    if model.hf_noise_ma > 0:
        out += _rng(model.seed, "noise").normal(0.0, model.hf_noise_ma, n)

    return PowerTrace(fs, out, 0.0)


def device_profiles() -> dict[str, ChannelModel]:
    """Named channel presets used by sweeps. They stand in for phones, not model any real one."""
    cal = calibrate_from_paper()
    return {
        "paper-calibrated": cal,
        "noiseless": ChannelModel(),
        # low charge: higher idle draw and weaker contrast between burst and rest
        "low-battery": cal.replace(baseline_ma=250.0, burst_amplitude_ma=150.0),
        "busy-os": cal.replace(os_burst_rate_hz=0.5, os_burst_amplitude_ma=250.0, os_burst_width_s=0.08),
    }
