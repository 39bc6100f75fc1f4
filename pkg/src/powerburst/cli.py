"""Command-line front end: ``encode``, ``simulate``, ``decode`` and ``sweep``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from powerburst.analysis import DEFAULT_PERIODS_MS, bit_error_ratio, emit_report, merge_reports, paired_sweep
from powerburst.channel import ChannelModel, device_profiles, simulate
from powerburst.config import CliConfig, ConfigError, load_config
from powerburst.rx import matched_filter_decode, robust_decode
from powerburst.trace import load_trace, save_trace
from powerburst.tx import (
    TransmissionParams,
    bits_to_bytes,
    encode_payload,
    load_schedule,
    save_schedule,
    schedule_bursts,
)


class CliError(Exception):
    pass


def _config(args) -> CliConfig:
    return load_config(args.config) if args.config else CliConfig()


def _tx(cfg: CliConfig, period_ms) -> TransmissionParams:
    if period_ms is None:
        return cfg.tx
    return dataclasses.replace(cfg.tx, bit_period_s=period_ms / 1000.0)


def _channel(cfg: CliConfig, args) -> ChannelModel:
    model = cfg.channel
    if getattr(args, "noiseless", False):
        model = ChannelModel(baseline_ma=model.baseline_ma, burst_amplitude_ma=model.burst_amplitude_ma,
                             sample_rate_hz=model.sample_rate_hz, seed=model.seed)
    if getattr(args, "seed", None) is not None:
        model = model.replace(seed=args.seed)
    return model


def _payload(args) -> bytes:
    if args.payload_file:
        try:
            data = Path(args.payload_file).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read payload file: {exc}") from None
    elif args.payload is not None:
        data = args.payload.encode("utf-8")
    else:
        raise CliError("no payload given (use --payload or --payload-file)")
    if not data:
        raise CliError("empty payload")
    return data


def cmd_encode(args) -> int:
    cfg = _config(args)
    params = _tx(cfg, args.period_ms)
    stream = encode_payload(_payload(args), params)
    schedule = schedule_bursts(stream, params)
    save_schedule(schedule, args.out)
    print(f"bits: {len(stream)} (preamble {stream.preamble_len}, payload {len(stream.payload)})")
    print(f"intervals: {len(schedule.intervals)}")
    print(f"duration_s: {schedule.total_duration_s:g}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    trace = simulate(load_schedule(args.schedule), _channel(cfg, args))
    save_trace(trace, args.out)
    print(f"samples: {len(trace)} at {trace.sample_rate_hz:g} Hz -> {args.out}")
    return 0


def _printable(data: bytes) -> str:
    return data.decode("latin-1") if all(32 <= b < 127 for b in data) else data.hex()


def cmd_decode(args) -> int:
    cfg = _config(args)
    params = _tx(cfg, args.period_ms)
    trace = load_trace(args.trace)
    dcfg = dataclasses.replace(cfg.decoder, duty_cycle=params.duty_cycle, preamble_len=len(params.preamble))
    expected = None
    if args.expected_payload is not None:
        if not args.expected_payload:
            raise CliError("empty expected payload")
        expected = encode_payload(args.expected_payload.encode("utf-8"), params)
        dcfg = dcfg.replace(expected_bit_count=len(expected))
    decode = robust_decode if args.decoder == "robust" else matched_filter_decode
    result = decode(trace, params.bit_period_s, dcfg)
    print(f"threshold_ma: {result.threshold_ma:.3f}")
    print(f"est_bit_period_s: {result.est_bit_period_s:.6f}")
    print(f"peaks: {len(result.peaks)}")
    print(f"bits: {result.bits}")
    print(f"payload: {_printable(bits_to_bytes(result.bits.payload))}")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if expected is not None:
        print(f"BER: {bit_error_ratio(expected, result.bits):.2f}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    payload = _payload(args)
    profiles = device_profiles()
    if args.profile:
        unknown = [p for p in args.profile if p not in profiles]
        if unknown:
            raise CliError(f"unknown profile(s): {', '.join(unknown)}; known: {', '.join(profiles)}")
        models = {p: profiles[p] for p in args.profile}
    else:
        models = {"config": cfg.channel}
    reports = []
    for name, model in models.items():
        model = _channel(CliConfig(model, cfg.decoder, cfg.tx), args)
        rep = paired_sweep(payload, args.periods, model, args.seeds, (args.decoder,), name,
                           duty_cycle=cfg.tx.duty_cycle, preamble_len=len(cfg.tx.preamble),
                           workers=args.workers)
        reports.append(rep[args.decoder])
    data = emit_report(merge_reports(reports), args.format)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    return 0


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powerburst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None, seed=False):
        p.add_argument("--config", help="JSON config with channel/decoder/tx sections")
        p.add_argument("--out", default=out_default)
        if seed:
            p.add_argument("--seed", type=_u64, help="override channel seed")

    p = sub.add_parser("encode", help="payload -> burst schedule CSV")
    common(p, "schedule.csv")
    p.add_argument("--payload")
    p.add_argument("--payload-file")
    p.add_argument("--period-ms", type=float)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("simulate", help="burst schedule -> simulated trace CSV")
    common(p, "trace.csv", seed=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--noiseless", action="store_true", help="zero every noise source")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decode", help="trace CSV -> bits")
    p.add_argument("--config")
    p.add_argument("--trace", required=True)
    p.add_argument("--period-ms", type=float)
    p.add_argument("--decoder", choices=("robust", "matched"), default="robust")
    p.add_argument("--expected-payload")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="BER over bit periods and seeds")
    common(p, None, seed=True)
    p.add_argument("--payload")
    p.add_argument("--payload-file")
    p.add_argument("--periods", type=int, nargs="+", default=list(DEFAULT_PERIODS_MS))
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--decoder", choices=("robust", "matched"), default="robust")
    p.add_argument("--profile", action="append", help="device profile preset (repeatable)")
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


# 64 alphanumeric characters = 512 payload bits
DEFAULT_SWEEP_PAYLOAD = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ01"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.payload is None and args.payload_file is None:
        args.payload = DEFAULT_SWEEP_PAYLOAD
    try:
        return args.func(args)
    except (CliError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
