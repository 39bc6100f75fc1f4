"""Bit error ratio, Monte-Carlo sweeps over bit periods and seeds, and report rendering."""

from __future__ import annotations

import hashlib
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from powerburst.channel import ChannelModel, calibrate_from_paper, simulate
from powerburst.rx import DecodeError, DecoderConfig, matched_filter_decode, robust_decode
from powerburst.tx import BitStream, TransmissionParams, encode_payload, schedule_bursts

DEFAULT_PERIODS_MS = (1000, 900, 800, 700, 600, 500)
DECODERS = {"robust": robust_decode, "matched": matched_filter_decode}
CSV_COLUMNS = ("device_profile", "period_ms", "ber_pct", "seeds", "payload_bits")


def bit_error_ratio(sent: BitStream, received: BitStream) -> float:
    """Payload BER in percent. Missing or surplus bits each count as one error."""
    a = sent.payload
    b = received.payload
    if not a:
        raise ValueError("empty sent stream")
    mismatches = sum(x != y for x, y in zip(a, b))
    return 100.0 * (mismatches + abs(len(a) - len(b))) / len(a)


@dataclass(frozen=True)
class BerRow:
    device_profile: str
    period_ms: int
    ber_pct: float
    seeds: int
    payload_bits: int
    per_seed: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.ber_pct <= 100.0:
            raise ValueError("ber_pct must lie in [0, 100]")


@dataclass(frozen=True)
class BerReport:
    rows: tuple[BerRow, ...]
    metadata: dict = field(default_factory=dict)

    def sorted(self) -> "BerReport":
        rows = sorted(self.rows, key=lambda r: (r.device_profile, -r.period_ms))
        return BerReport(tuple(rows), self.metadata)

    def row(self, profile: str, period_ms: int) -> BerRow:
        for r in self.rows:
            if r.device_profile == profile and r.period_ms == period_ms:
                return r
        raise KeyError((profile, period_ms))


def model_digest(model: ChannelModel) -> str:
    blob = json.dumps(model.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _cell(payload: bytes, period_ms: int, model: ChannelModel, seed: int,
          decoders: Sequence[str], duty_cycle: float, preamble_len: int) -> dict[str, float]:
    """BER of each decoder on one simulated trace."""
    params = TransmissionParams(period_ms / 1000.0, duty_cycle,
                                BitStream((0,) * preamble_len, preamble_len))
    stream = encode_payload(payload, params)
    trace = simulate(schedule_bursts(stream, params), model.replace(seed=seed))
    cfg = DecoderConfig(preamble_len=preamble_len, expected_bit_count=len(stream), duty_cycle=duty_cycle)
    out = {}
    for name in decoders:
        try:
            result = DECODERS[name](trace, params.bit_period_s, cfg)
            out[name] = bit_error_ratio(stream, result.bits)
        except DecodeError:
            out[name] = 100.0
    return out


def _cell_args(args):
    return _cell(*args)


def _seed(model: ChannelModel, i: int) -> int:
    return (model.seed + i) % 2**64


def paired_sweep(payload: bytes | str, periods_ms: Iterable[int], model: ChannelModel, seeds: int,
                 decoders: Sequence[str] = ("robust", "matched"), profile: str = "custom",
                 duty_cycle: float = 0.5, preamble_len: int = 8, workers: int = 1) -> dict[str, BerReport]:
    """Run every decoder on the same simulated traces; one report per decoder."""
    if isinstance(payload, str):
        payload = payload.encode("ascii")
    periods = [int(p) for p in periods_ms]
    if any(p <= 0 for p in periods):
        raise ValueError("periods must be positive")
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    for name in decoders:
        if name not in DECODERS:
            raise ValueError(f"unknown decoder {name!r}")

    jobs = [(payload, p, model, _seed(model, i), tuple(decoders), duty_cycle, preamble_len)
            for p in periods for i in range(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_args, jobs))
    else:
        results = [_cell(*job) for job in jobs]

    nbits = 8 * len(payload)
    meta = {
        "payload": f"{len(payload)} bytes ({nbits} bits), sha256 {hashlib.sha256(payload).hexdigest()[:16]}",
        "channel_model_digest": model_digest(model),
    }
    reports = {}
    for name in decoders:
        rows = []
        for k, p in enumerate(periods):
            bers = tuple(results[k * seeds + i][name] for i in range(seeds))
            rows.append(BerRow(profile, p, float(statistics.median(bers)), seeds, nbits, bers))
        reports[name] = BerReport(tuple(rows), {**meta, "decoder": name}).sorted()
    return reports


def run_sweep(payload: bytes | str, periods_ms: Iterable[int] = DEFAULT_PERIODS_MS,
              model: ChannelModel | None = None, seeds: int = 1, decoder: str = "robust",
              profile: str = "custom", workers: int = 1) -> BerReport:
    if model is None:
        model = calibrate_from_paper()
    return paired_sweep(payload, periods_ms, model, seeds, (decoder,), profile, workers=workers)[decoder]


def merge_reports(reports: Iterable[BerReport]) -> BerReport:
    reports = list(reports)
    rows = tuple(r for rep in reports for r in rep.rows)
    meta = dict(reports[0].metadata) if reports else {}
    return BerReport(rows, meta).sorted()


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def emit_report(report: BerReport, format: str = "csv") -> bytes:
    report = report.sorted()
    if format == "csv":
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in report.rows:
            buf.write(f"{r.device_profile},{r.period_ms},{_fmt(r.ber_pct)},{r.seeds},{r.payload_bits}\n")
        return buf.getvalue().encode()
    if format in ("markdown", "markdown-table"):
        periods = sorted({r.period_ms for r in report.rows}, reverse=True)
        profiles = list(dict.fromkeys(r.device_profile for r in report.rows))
        cells = {(r.device_profile, r.period_ms): _fmt(r.ber_pct) for r in report.rows}
        lines = [
            "| Device | " + " | ".join(str(p) for p in periods) + " |",
            "|---|" + "---|" * len(periods),
        ]
        for prof in profiles:
            vals = [cells.get((prof, p), "") for p in periods]
            lines.append(f"| {prof} | " + " | ".join(vals) + " |")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown report format {format!r}")
