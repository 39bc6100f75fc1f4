import numpy as np
import pytest
from hypothesis import given, strategies as st

from powerburst.analysis import (
    DEFAULT_PERIODS_MS,
    BerReport,
    BerRow,
    bit_error_ratio,
    emit_report,
    paired_sweep,
    run_sweep,
)
from powerburst.channel import ChannelModel, calibrate_from_paper
from powerburst.tx import BitStream

PAYLOAD = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789ab"


def stream(bits, pre=0):
    return BitStream(tuple(bits), pre)


class TestBitErrorRatio:
    def test_identical(self):
        s = stream(np.random.default_rng(0).integers(0, 2, 512))
        assert bit_error_ratio(s, s) == 0.0

    def test_69_of_512(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 2, 512)
        b = a.copy()
        b[rng.choice(512, 69, replace=False)] ^= 1
        ber = bit_error_ratio(stream(a), stream(b))
        assert ber == pytest.approx(100 * 69 / 512)
        assert round(ber, 2) == 13.48 and round(ber, 1) == 13.5

    def test_length_deficit(self):
        a = [1, 0] * 256
        assert bit_error_ratio(stream(a), stream(a[:500])) == pytest.approx(12 / 512 * 100)

    def test_preamble_excluded(self):
        sent = stream([0] * 8 + [1, 1, 0, 0], 8)
        got = stream([1] * 8 + [1, 1, 0, 0], 8)
        assert bit_error_ratio(sent, got) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            bit_error_ratio(stream([0] * 8, 8), stream([0] * 8, 8))

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=300))
    def test_complement(self, bits):
        assert bit_error_ratio(stream(bits), stream([1 - b for b in bits])) == 100.0

    @given(st.lists(st.integers(0, 1), min_size=2, max_size=200), st.data())
    def test_depends_on_mismatch_count_only(self, bits, data):
        n = len(bits)
        k = data.draw(st.integers(0, n))
        p1 = data.draw(st.permutations(range(n)))[:k]
        p2 = data.draw(st.permutations(range(n)))[:k]
        flip = lambda idx: [b ^ (i in idx) for i, b in enumerate(bits)]
        assert bit_error_ratio(stream(bits), stream(flip(set(p1)))) == bit_error_ratio(stream(bits), stream(flip(set(p2))))


class TestSweep:
    def test_default_periods(self):
        assert DEFAULT_PERIODS_MS == (1000, 900, 800, 700, 600, 500)

    def test_noiseless_all_zero(self):
        rep = run_sweep(b"Hi!", [700, 300], ChannelModel(), seeds=2)
        assert [r.ber_pct for r in rep.rows] == [0.0, 0.0]
        assert [r.period_ms for r in rep.rows] == [700, 300]

    def test_rerun_identical(self):
        m = calibrate_from_paper()
        a = run_sweep(b"xyz", [500], m, seeds=3)
        b = run_sweep(b"xyz", [500], m, seeds=3)
        assert a == b and emit_report(a) == emit_report(b)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            run_sweep(b"x", [0], ChannelModel())
        with pytest.raises(ValueError):
            run_sweep(b"x", [500], ChannelModel(), seeds=0)

    def test_900_not_worse_than_500_paired(self):
        reps = paired_sweep(PAYLOAD, [900, 500], calibrate_from_paper(), 20, ("robust",))
        r = reps["robust"]
        at900, at500 = r.row("custom", 900).per_seed, r.row("custom", 500).per_seed
        assert sum(a <= b for a, b in zip(at900, at500)) >= 15


class TestEmitReport:
    def test_one_row_csv(self):
        rep = BerReport((BerRow("nexus", 900, 0.78125, 1, 512),))
        assert emit_report(rep, "csv") == b"device_profile,period_ms,ber_pct,seeds,payload_bits\nnexus,900,0.78,1,512\n"

    def test_empty_csv(self):
        assert emit_report(BerReport(()), "csv") == b"device_profile,period_ms,ber_pct,seeds,payload_bits\n"

    def test_markdown_shape(self):
        rows = tuple(BerRow(f"dev{d}", p, float(d), 3, 512) for d in range(4) for p in DEFAULT_PERIODS_MS)
        lines = emit_report(BerReport(rows), "markdown-table").decode().splitlines()
        assert lines[0] == "| Device | 1000 | 900 | 800 | 700 | 600 | 500 |"
        data = lines[2:]
        assert len(data) == 4
        assert all(line.count("|") == 8 for line in data)

    def test_rows_sorted_regardless_of_order(self):
        rows = (BerRow("b", 500, 1.0, 1, 8), BerRow("a", 500, 2.0, 1, 8), BerRow("a", 900, 0.0, 1, 8))
        assert emit_report(BerReport(rows)) == emit_report(BerReport(rows[::-1]))

    def test_ber_bounds(self):
        with pytest.raises(ValueError):
            BerRow("x", 500, 101.0, 1, 8)


def test_parallel_sweep_matches_serial():
    m = calibrate_from_paper()
    serial = paired_sweep(b"pq", [600, 500], m, 2)
    parallel = paired_sweep(b"pq", [600, 500], m, 2, workers=2)
    assert serial == parallel
