import numpy as np
import pytest

from powerburst.channel import ChannelModel
from powerburst.trace import PowerTrace

# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def noiseless():
    return ChannelModel(baseline_ma=50.0, burst_amplitude_ma=400.0, sample_rate_hz=5000.0)


def rect_train(period_s, duty, n_pulses, fs, low=50.0, high=450.0, tail_periods=1):
    n = int(round((n_pulses + tail_periods) * period_s * fs))
    x = np.full(n, low)
    for k in range(n_pulses):
        i0 = int(round(k * period_s * fs))
        x[i0 : i0 + int(round(duty * period_s * fs))] = high
    return PowerTrace(fs, x)
