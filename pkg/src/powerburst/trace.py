"""Uniformly sampled supply-current traces: CSV I/O and zero-phase low-pass filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import oaconvolve

CSV_HEADER = "time_s,current_ma"

# Filter cutoffs relative to the bit rate, and the ceiling relative to the sample rate.
PASS_BITRATE_MULT = 6.0
STOP_BITRATE_MULT = 12.0
NYQUIST_CLAMP = 0.45

# Single-pass stopband attenuation; forward-backward application doubles it in dB.
_SINGLE_PASS_ATTEN_DB = 30.0


class TraceError(ValueError):
    """Raised for malformed trace files or invalid trace parameters."""


@dataclass(frozen=True)
class PowerTrace:
    """Supply current in mA sampled on a uniform grid.

    ``samples`` is stored as a read-only float64 array.
    """

    sample_rate_hz: float
    samples: np.ndarray
    start_time_s: float = 0.0

    def __post_init__(self):
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise TraceError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        arr = np.array(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise TraceError("samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise TraceError("samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "start_time_s", float(self.start_time_s))

    def __len__(self):
        return len(self.samples)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def end_time_s(self) -> float:
        return self.start_time_s + self.duration_s

    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self.samples)) / self.sample_rate_hz

    def with_samples(self, samples) -> "PowerTrace":
        return PowerTrace(self.sample_rate_hz, samples, self.start_time_s)

    def window(self, start_s: float, length_s: float) -> np.ndarray:
        """Samples with time in ``[start_s, start_s + length_s]``."""
        i0 = max(0, int(math.ceil((start_s - self.start_time_s) * self.sample_rate_hz - 1e-9)))
        i1 = int(math.floor((start_s + length_s - self.start_time_s) * self.sample_rate_hz + 1e-9))
        return self.samples[i0 : i1 + 1]


@dataclass(frozen=True)
class FilterSpec:
    pass_freq_hz: float
    stop_freq_hz: float
    kind: str = field(default="windowed-sinc-zero-phase")

    def __post_init__(self):
        if not (self.pass_freq_hz > 0):
            raise TraceError("pass_freq_hz must be positive")
        if not (self.stop_freq_hz > self.pass_freq_hz):
            raise TraceError("stop_freq_hz must exceed pass_freq_hz")
        if self.kind != "windowed-sinc-zero-phase":
            raise TraceError(f"unsupported filter kind {self.kind!r}")

    def check_rate(self, sample_rate_hz: float) -> None:
        nyq = sample_rate_hz / 2
        if self.pass_freq_hz >= nyq or self.stop_freq_hz >= nyq:
            raise TraceError(
                f"filter frequencies ({self.pass_freq_hz}, {self.stop_freq_hz}) Hz "
                f"exceed Nyquist {nyq} Hz"
            )


def load_trace(path, format: str = "csv") -> PowerTrace:
    """Read a ``time_s,current_ma`` CSV export.

    Non-uniform timestamps are resampled by linear interpolation onto a grid
    whose step is the smallest input interval.
    """
    if format != "csv":
        raise TraceError(f"unsupported trace format {format!r}")
    path = Path(path)
    if not path.exists():
        raise TraceError(f"trace file not found: {path}")
    times, values = [], []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if lineno == 1 and line.replace(" ", "") == CSV_HEADER:
                continue
            parts = line.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError
                t, v = float(parts[0]), float(parts[1])
            except ValueError:
                raise TraceError(f"{path}: malformed row {lineno}: {line!r}") from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise TraceError(f"{path}: malformed row {lineno}: non-finite value")
            times.append(t)
            values.append(v)
    if len(times) < 2:
        raise TraceError("fewer than 2 samples")
    t = np.asarray(times)
    v = np.asarray(values)
    diffs = np.diff(t)
    if np.any(diffs <= 0):
        bad = int(np.argmax(diffs <= 0)) + 2
        raise TraceError(f"{path}: non-increasing timestamp at data row {bad}")

    span = t[-1] - t[0]
    mean_dt = span / (len(t) - 1)
    if np.max(np.abs(diffs - mean_dt)) <= 1e-6 * mean_dt:
        return PowerTrace((len(t) - 1) / span, v, t[0])

    step = float(diffs.min())
    n = int(math.floor(span / step + 1e-9)) + 1
    grid = t[0] + np.arange(n) * step
    return PowerTrace(1.0 / step, np.interp(grid, t, v), t[0])


def _format_time(t: float) -> str:
    s = f"{t:.6f}"
    return s if float(s) == t else repr(t)


def save_trace(trace: PowerTrace, path) -> None:
    path = Path(path)
    lines = [CSV_HEADER]
    for t, v in zip(trace.times(), trace.samples):
        lines.append(f"{_format_time(float(t))},{float(v):.6g}")
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise TraceError(f"cannot write trace to {path}: {exc}") from exc


def default_filter_for_period(bit_period_s: float, sample_rate_hz: float) -> FilterSpec:
    stop = STOP_BITRATE_MULT / bit_period_s
    ceiling = NYQUIST_CLAMP * sample_rate_hz
    if stop > ceiling:
        stop = ceiling
    pass_ = stop * PASS_BITRATE_MULT / STOP_BITRATE_MULT
    return FilterSpec(pass_freq_hz=pass_, stop_freq_hz=stop)


def design_kernel(spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """Kaiser-windowed sinc kernel, odd length, unit DC gain."""
    spec.check_rate(sample_rate_hz)
    atten = _SINGLE_PASS_ATTEN_DB
    width = 2 * math.pi * (spec.stop_freq_hz - spec.pass_freq_hz) / sample_rate_hz
    n_taps = int(math.ceil((atten - 7.95) / (2.285 * width))) + 1
    n_taps = max(n_taps, 3) | 1
    if atten > 50:
        beta = 0.1102 * (atten - 8.7)
    elif atten >= 21:
        beta = 0.5842 * (atten - 21) ** 0.4 + 0.07886 * (atten - 21)
    else:
        beta = 0.0
    cutoff = 0.5 * (spec.pass_freq_hz + spec.stop_freq_hz) / sample_rate_hz
    m = np.arange(n_taps) - (n_taps - 1) / 2
    h = 2 * cutoff * np.sinc(2 * cutoff * m) * np.kaiser(n_taps, beta)
    return h / h.sum()


def _apply_centered(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    half = (len(h) - 1) // 2
    padded = np.pad(x, half, mode="edge")
    return oaconvolve(padded, h, mode="valid")


def lowpass(trace: PowerTrace, spec: FilterSpec) -> PowerTrace:
    """Zero-phase low-pass: the kernel is run forward, then over the reversed output."""
    h = design_kernel(spec, trace.sample_rate_hz)
    y = _apply_centered(trace.samples, h)
    y = _apply_centered(y[::-1], h)[::-1]
    return trace.with_samples(y)
