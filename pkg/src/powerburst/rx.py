"""Receiver: GMM threshold estimation, peak detection and peak-time-difference decoding.

A matched-filter decoder that samples strictly once per intended bit period is
included as a baseline.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from powerburst.trace import PowerTrace, default_filter_for_period, lowpass
from powerburst.tx import BitStream

EM_MAX_ITER = 200
EM_TOL = 1e-6
_VAR_FLOOR_FRAC = 1e-6


class DecodeError(ValueError):
    pass


class ThresholdError(DecodeError):
    pass


class PreambleNotFound(DecodeError):
    pass


@dataclass(frozen=True)
class GmmFit:
    mean_lo_ma: float
    mean_hi_ma: float
    var_lo: float
    var_hi: float
    weight_lo: float
    iterations: int
    converged: bool

    @property
    def weight_hi(self) -> float:
        return 1.0 - self.weight_lo

    @property
    def threshold_ma(self) -> float:
        return 0.5 * (self.mean_lo_ma + self.mean_hi_ma)


@dataclass(frozen=True)
class Peak:
    start_s: float
    end_s: float
    max_ma: float

    @property
    def width_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class DecodeResult:
    bits: BitStream
    threshold_ma: float
    est_bit_period_s: float
    peaks: tuple[Peak, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class DecoderConfig:
    preamble_len: int = 8
    expected_bit_count: Optional[int] = None
    min_peak_width_s: Optional[float] = None  # None: intended period / 10
    trailing_gap_periods: float = 3.0
    duty_cycle: float = 0.5  # pulse width for the matched filter

    def __post_init__(self):
        if self.preamble_len < 2:
            raise ValueError("preamble_len must be at least 2")
        if self.expected_bit_count is not None and self.expected_bit_count < 1:
            raise ValueError("expected_bit_count must be positive")
        if self.min_peak_width_s is not None and self.min_peak_width_s < 0:
            raise ValueError("min_peak_width_s must be non-negative")
        if not self.trailing_gap_periods > 0:
            raise ValueError("trailing_gap_periods must be positive")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in (0, 1]")

    def replace(self, **changes) -> "DecoderConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DecoderConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown decoder keys: {sorted(unknown)}")
        return cls(**data)


def fit_gmm2(x: np.ndarray) -> GmmFit:
    """Two-component 1-D Gaussian mixture by expectation-maximization.

    Deterministic start: means at the 10th/90th percentiles, equal weights,
    both variances equal to the sample variance. Convergence is declared when
    the mean per-sample log-likelihood changes by less than ``EM_TOL``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ThresholdError("empty window: no samples to fit")
    if np.ptp(x) < 1.0:
        raise ThresholdError("unimodal window: no threshold separable")

    total_var = float(np.var(x))
    floor = _VAR_FLOOR_FRAC * total_var
    mu = np.array(np.percentile(x, [10, 90]), dtype=np.float64)
    var = np.array([total_var, total_var])
    w = np.array([0.5, 0.5])

    prev_ll = -math.inf
    converged = False
    it = 0
    for it in range(1, EM_MAX_ITER + 1):
        # E-step in log space
        log_p = (
            np.log(w)[:, None]
            - 0.5 * np.log(2 * math.pi * var)[:, None]
            - 0.5 * (x[None, :] - mu[:, None]) ** 2 / var[:, None]
        )
        log_norm = np.logaddexp(log_p[0], log_p[1])
        ll = float(log_norm.mean())
        resp = np.exp(log_p - log_norm[None, :])

        # M-step
        nk = resp.sum(axis=1)
        nk = np.maximum(nk, 1e-12)
        w = nk / x.size
        mu = (resp @ x) / nk
        var = np.maximum((resp * (x[None, :] - mu[:, None]) ** 2).sum(axis=1) / nk, floor)

        if abs(ll - prev_ll) < EM_TOL:
            converged = True
            break
        prev_ll = ll

    lo, hi = (0, 1) if mu[0] <= mu[1] else (1, 0)
    if not mu[lo] < mu[hi]:
        raise ThresholdError("unimodal window: no threshold separable")
    return GmmFit(
        mean_lo_ma=float(mu[lo]),
        mean_hi_ma=float(mu[hi]),
        var_lo=float(var[lo]),
        var_hi=float(var[hi]),
        weight_lo=float(w[lo] / w.sum()),
        iterations=it,
        converged=converged,
    )


def estimate_threshold(filtered: PowerTrace, preamble_window_s: float) -> tuple[float, GmmFit]:
    if not preamble_window_s > 0:
        raise ThresholdError("preamble window must be positive")
    x = filtered.window(filtered.start_time_s, preamble_window_s)
    fit = fit_gmm2(x)
    return fit.threshold_ma, fit


def _above_runs(x: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Start and stop (exclusive) indices of maximal runs strictly above threshold."""
    above = np.concatenate(([False], x > threshold, [False])).astype(np.int8)
    d = np.diff(above)
    return np.flatnonzero(d == 1), np.flatnonzero(d == -1)


def detect_peaks(filtered: PowerTrace, threshold_ma: float, min_peak_width_s: float = 0.0) -> list[Peak]:
    x = filtered.samples
    fs = filtered.sample_rate_hz
    t0 = filtered.start_time_s
    starts, stops = _above_runs(x, threshold_ma)
    peaks = []
    for i0, i1 in zip(starts, stops):
        if (i1 - i0) / fs < min_peak_width_s:
            continue
        peaks.append(Peak(t0 + i0 / fs, t0 + i1 / fs, float(x[i0:i1].max())))
    return peaks


def estimate_bit_period(peaks: Sequence[Peak], preamble_len: int) -> float:
    if preamble_len < 2:
        raise ValueError("preamble_len must be at least 2")
    if len(peaks) < preamble_len:
        raise PreambleNotFound(f"preamble not found: {len(peaks)} peaks, need {preamble_len}")
    starts = np.array([p.start_s for p in peaks[:preamble_len]])
    period = float(np.mean(np.diff(starts)))
    if not period > 0:
        raise PreambleNotFound("preamble not found: non-increasing peak starts")
    return period


def _min_width(cfg: DecoderConfig, intended: float) -> float:
    return intended / 10 if cfg.min_peak_width_s is None else cfg.min_peak_width_s


def _filtered(trace: PowerTrace, intended: float) -> PowerTrace:
    return lowpass(trace, default_filter_for_period(intended, trace.sample_rate_hz))


def gap_to_bits(delta_s: float, period_s: float) -> list[int]:
    """Bits implied by the start-time gap between two consecutive peaks: (n-1) ones then a zero."""
    n = max(1, int(round(delta_s / period_s)))
    return [1] * (n - 1) + [0]


def robust_decode(trace: PowerTrace, intended_bit_period_s: float, cfg: DecoderConfig = DecoderConfig()) -> DecodeResult:
    T = intended_bit_period_s
    p = cfg.preamble_len
    limit = cfg.expected_bit_count
    filt = _filtered(trace, T)
    threshold, _ = estimate_threshold(filt, p * T)
    peaks = detect_peaks(filt, threshold, _min_width(cfg, T))
    period = estimate_bit_period(peaks, p)

    warnings = []
    bits = [0] * p
    for prev, cur in zip(peaks[p - 1 :], peaks[p:]):
        if limit is not None and len(bits) >= limit:
            break
        chunk = gap_to_bits(cur.start_s - prev.start_s, period)
        if len(chunk) - 1 > cfg.trailing_gap_periods:
            warnings.append(f"long run of {len(chunk) - 1} ones at t={prev.start_s:.3f}s")
        bits.extend(chunk)

    if limit is None or len(bits) < limit:
        tail = trace.end_time_s - peaks[-1].start_s
        if tail > cfg.trailing_gap_periods * period:
            if limit is not None:
                bits.extend([1] * (limit - len(bits)))
        else:
            # trace ends within the transmission: count the remaining whole slots
            bits.extend([1] * max(0, int(round(tail / period)) - 1))

    if limit is not None:
        if len(bits) > limit:
            bits = bits[:limit]
        elif len(bits) < limit:
            warnings.append(f"decoded {len(bits)} of {limit} expected bits")
    return DecodeResult(BitStream(bits, min(p, len(bits))), threshold, period, tuple(peaks), tuple(warnings))


def _moving_mean(x: np.ndarray, width: int) -> np.ndarray:
    """out[i] = mean(x[i : i + width]); the tail is padded with the last sample."""
    padded = np.concatenate((x, np.full(width, x[-1])))
    c = np.concatenate(([0.0], np.cumsum(padded)))
    return (c[width : width + len(x)] - c[: len(x)]) / width


def matched_filter_decode(trace: PowerTrace, intended_bit_period_s: float, cfg: DecoderConfig = DecoderConfig()) -> DecodeResult:
    """Correlate with the RZ pulse and sample once per intended period, with no resynchronization."""
    T = intended_bit_period_s
    p = cfg.preamble_len
    fs = trace.sample_rate_hz
    filt = _filtered(trace, T)
    amp_threshold, _ = estimate_threshold(filt, p * T)
    peaks = detect_peaks(filt, amp_threshold, _min_width(cfg, T))
    if len(peaks) < p:
        raise PreambleNotFound(f"preamble not found: {len(peaks)} peaks, need {p}")

    width = max(1, int(round(cfg.duty_cycle * T * fs)))
    corr = filt.with_samples(_moving_mean(filt.samples, width))
    threshold, _ = estimate_threshold(corr, p * T)

    t0 = peaks[0].start_s
    if cfg.expected_bit_count is not None:
        n_bits = cfg.expected_bit_count
    else:
        n_bits = max(p, int(math.floor((trace.end_time_s - t0) / T + 1e-9)))
    idx = np.round((t0 - trace.start_time_s + np.arange(n_bits) * T) * fs).astype(np.int64)
    warnings = []
    if idx[-1] >= len(corr):
        warnings.append("sampling instants run past the end of the trace")
    vals = corr.samples[np.clip(idx, 0, len(corr) - 1)]
    bits = np.where(vals > threshold, 0, 1)
    return DecodeResult(BitStream(bits.tolist(), min(p, n_bits)), threshold, T, tuple(peaks), tuple(warnings))
