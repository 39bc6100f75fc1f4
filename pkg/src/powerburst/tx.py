"""Transmitter side: payload framing, RZ on-off burst scheduling, gating and handshake detection.

Polarity convention: a 0 bit is sent as a burst (peak), a 1 bit as silence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from powerburst.trace import PowerTrace

DEFAULT_PREAMBLE_LEN = 8
DEFAULT_OMEGA_PCT = 50


class EncodeError(ValueError):
    pass


class HandshakeError(ValueError):
    pass


@dataclass(frozen=True)
class BitStream:
    bits: tuple[int, ...]
    preamble_len: int = 0

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        if not 0 <= self.preamble_len <= len(bits):
            raise ValueError("preamble_len must lie in [0, len(bits)]")
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return len(self.bits)

    @property
    def payload(self) -> tuple[int, ...]:
        return self.bits[self.preamble_len :]

    def __str__(self):
        return "".join(map(str, self.bits))


def _default_preamble() -> BitStream:
    return BitStream((0,) * DEFAULT_PREAMBLE_LEN, DEFAULT_PREAMBLE_LEN)


@dataclass(frozen=True)
class TransmissionParams:
    bit_period_s: float
    duty_cycle: float = 0.5
    preamble: BitStream = field(default_factory=_default_preamble)

    def __post_init__(self):
        if not self.bit_period_s > 0:
            raise ValueError("bit_period_s must be positive")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in (0, 1]")
        if len(self.preamble) == 0 or any(self.preamble.bits):
            raise ValueError("preamble must be non-empty and all zeros (peak bits)")


@dataclass(frozen=True)
class BurstSchedule:
    intervals: tuple[tuple[float, float], ...]
    total_duration_s: float

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        prev_end = -math.inf
        for a, b in ivs:
            if not b > a:
                raise ValueError(f"interval ({a}, {b}) has non-positive width")
            if a < prev_end:
                raise ValueError("intervals must be disjoint and increasing")
            prev_end = b
        if ivs and self.total_duration_s < ivs[-1][1]:
            raise ValueError("total_duration_s ends before the last interval")
        object.__setattr__(self, "intervals", ivs)

    def covered_s(self) -> float:
        return sum(b - a for a, b in self.intervals)


@dataclass(frozen=True)
class DeviceState:
    usb_connected: bool
    screen_off: bool
    battery_pct: int

    def __post_init__(self):
        if not 0 <= self.battery_pct <= 100:
            raise ValueError("battery_pct must lie in 0..100")


@dataclass(frozen=True)
class HandshakeParams:
    theta_ma: float
    t_s: float
    tolerance_frac: float = 0.2

    def __post_init__(self):
        if not (self.theta_ma > 0 and self.t_s > 0):
            raise ValueError("theta_ma and t_s must be positive")
        if not 0 <= self.tolerance_frac <= 0.5:
            raise ValueError("tolerance_frac must lie in [0, 0.5]")


def bytes_to_bits(data: bytes) -> list[int]:
    return [(byte >> (7 - k)) & 1 for byte in data for k in range(8)]


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    """MSB-first packing; a trailing partial byte is dropped."""
    out = bytearray()
    for i in range(0, len(bits) - len(bits) % 8, 8):
        byte = 0
        for b in bits[i : i + 8]:
            byte = (byte << 1) | int(b)
        out.append(byte)
    return bytes(out)


def encode_payload(payload: bytes | str, params: TransmissionParams) -> BitStream:
    if isinstance(payload, str):
        payload = payload.encode("ascii")
    if not payload:
        raise EncodeError("empty payload")
    pre = params.preamble.bits
    return BitStream(pre + tuple(bytes_to_bits(payload)), len(pre))


def schedule_bursts(stream: BitStream, params: TransmissionParams) -> BurstSchedule:
    if len(stream) == 0:
        raise EncodeError("empty bit stream")
    tb = params.bit_period_s
    width = params.duty_cycle * tb
    intervals = tuple((i * tb, i * tb + width) for i, b in enumerate(stream.bits) if b == 0)
    return BurstSchedule(intervals, len(stream) * tb)


def transmission_allowed(state: DeviceState, omega_pct: int = DEFAULT_OMEGA_PCT) -> bool:
    return state.usb_connected and state.screen_off and state.battery_pct >= omega_pct


def _runs(mask: np.ndarray) -> list[tuple[bool, int]]:
    """Run-length encode a boolean array into (state, length) pairs."""
    if len(mask) == 0:
        return []
    edges = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [len(mask)])))
    return [(bool(mask[s]), int(n)) for s, n in zip(starts, lengths)]


def _debounce(runs: list[tuple[bool, int]], min_len: int) -> list[tuple[bool, int]]:
    """Absorb runs shorter than ``min_len`` into the preceding run, then merge equal neighbours."""
    merged: list[list] = []
    for state, n in runs:
        if merged and (n < min_len or merged[-1][0] == state):
            merged[-1][1] += n
        else:
            merged.append([state, n])
    # a short leading run has no predecessor; fold it forward
    if len(merged) > 1 and merged[0][1] < min_len:
        merged[1][1] += merged[0][1]
        merged.pop(0)
    return [(s, n) for s, n in merged]


def detect_handshake(supply_current: PowerTrace, hs: HandshakeParams) -> bool:
    """Look for below/above/below theta segments of about ``t_s`` each, then above theta to the end."""
    fs = supply_current.sample_rate_hz
    if supply_current.duration_s < 3 * hs.t_s:
        raise HandshakeError("trace too short for handshake")
    above = supply_current.samples > hs.theta_ma
    runs = _debounce(_runs(above), max(1, int(round(hs.t_s * fs / 10))))
    lo = hs.t_s * (1 - hs.tolerance_frac) * fs
    hi = hs.t_s * (1 + hs.tolerance_frac) * fs

    def near_t(n: int) -> bool:
        return lo - 1e-9 <= n <= hi + 1e-9

    if len(runs) < 4:
        return False
    last_state, last_len = runs[-1]
    if not last_state or last_len < hs.t_s * fs - 1e-9:
        return False
    a, b, c = runs[-4], runs[-3], runs[-2]
    return (not a[0] and near_t(a[1])) and (b[0] and near_t(b[1])) and (not c[0] and near_t(c[1]))


SCHEDULE_HEADER = "start_s,end_s"


def save_schedule(schedule: BurstSchedule, path) -> None:
    """Write ``start_s,end_s`` rows, preceded by a ``# total_duration_s=`` comment line."""
    lines = [f"# total_duration_s={schedule.total_duration_s!r}", SCHEDULE_HEADER]
    lines += [f"{a!r},{b!r}" for a, b in schedule.intervals]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_schedule(path) -> BurstSchedule:
    path = Path(path)
    if not path.exists():
        raise EncodeError(f"schedule file not found: {path}")
    total = None
    intervals = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line == SCHEDULE_HEADER:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "total_duration_s":
                total = float(val)
            continue
        try:
            a, b = (float(v) for v in line.split(","))
        except ValueError:
            raise EncodeError(f"{path}: malformed row {lineno}: {line!r}") from None
        intervals.append((a, b))
    if total is None:
        total = intervals[-1][1] if intervals else 0.0
    try:
        return BurstSchedule(tuple(intervals), total)
    except ValueError as exc:
        raise EncodeError(f"{path}: {exc}") from None
