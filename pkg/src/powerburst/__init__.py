"""Software modem and channel simulator for a USB-power on-off covert channel."""

from powerburst.analysis import BerReport, bit_error_ratio, emit_report, paired_sweep, run_sweep
from powerburst.channel import ChannelModel, calibrate_from_paper, simulate
from powerburst.rx import (
    DecodeResult,
    DecoderConfig,
    GmmFit,
    Peak,
    detect_peaks,
    estimate_bit_period,
    estimate_threshold,
    matched_filter_decode,
    robust_decode,
)
from powerburst.trace import FilterSpec, PowerTrace, default_filter_for_period, load_trace, lowpass, save_trace
from powerburst.tx import (
    BitStream,
    BurstSchedule,
    DeviceState,
    HandshakeParams,
    TransmissionParams,
    detect_handshake,
    encode_payload,
    schedule_bursts,
    transmission_allowed,
)

__version__ = "0.1.0"
