"""JSON configuration bundle with ``channel``, ``decoder`` and ``tx`` sections.

Example::

    {
      "channel": {"baseline_ma": 50.0, "width_shrink_mean": 0.622, "seed": 0},
      "decoder": {"preamble_len": 8, "trailing_gap_periods": 3.0},
      "tx": {"bit_period_s": 0.5, "duty_cycle": 0.5, "preamble_len": 8}
    }

Missing keys take their defaults (the channel section defaults to the
paper-calibrated model); unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from powerburst.channel import ChannelModel, calibrate_from_paper
from powerburst.rx import DecoderConfig
from powerburst.tx import BitStream, TransmissionParams

SECTIONS = ("channel", "decoder", "tx")
_TX_KEYS = {"bit_period_s", "duty_cycle", "preamble_len"}


class ConfigError(ValueError):
    pass


def tx_to_dict(params: TransmissionParams) -> dict:
    return {
        "bit_period_s": params.bit_period_s,
        "duty_cycle": params.duty_cycle,
        "preamble_len": len(params.preamble),
    }


def tx_from_dict(data: dict) -> TransmissionParams:
    unknown = set(data) - _TX_KEYS
    if unknown:
        raise ConfigError(f"unknown tx keys: {sorted(unknown)}")
    n = int(data.get("preamble_len", 8))
    return TransmissionParams(
        bit_period_s=float(data.get("bit_period_s", 0.5)),
        duty_cycle=float(data.get("duty_cycle", 0.5)),
        preamble=BitStream((0,) * n, n),
    )


@dataclass(frozen=True)
class CliConfig:
    channel: ChannelModel = field(default_factory=calibrate_from_paper)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    tx: TransmissionParams = field(default_factory=lambda: TransmissionParams(0.5))

    def to_dict(self) -> dict:
        return {
            "channel": self.channel.to_dict(),
            "decoder": self.decoder.to_dict(),
            "tx": tx_to_dict(self.tx),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CliConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            channel = calibrate_from_paper()
            if "channel" in data:
                channel = dataclasses.replace(channel, **_checked(ChannelModel, data["channel"], "channel"))
            decoder = DecoderConfig.from_dict(data.get("decoder", {}))
            tx = tx_from_dict(data.get("tx", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(channel, decoder, tx)


def _checked(cls, data: dict, section: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")
    return data


def load_config(path) -> CliConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return CliConfig.from_dict(data)


def save_config(cfg: CliConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
