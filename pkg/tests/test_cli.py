import json

import pytest

from powerburst.channel import calibrate_from_paper
from powerburst.cli import main
from powerburst.config import CliConfig, ConfigError, load_config, save_config
from powerburst.trace import load_trace

PAYLOAD64 = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789ab"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def schedule_a(tmp_path, capsys):
    path = tmp_path / "a.csv"
    assert run(capsys, "encode", "--payload", "A", "--period-ms", 500, "--out", path)[0] == 0
    return path


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = CliConfig()
        save_config(cfg, tmp_path / "c.json")
        assert load_config(tmp_path / "c.json") == cfg

    def test_defaults_to_calibrated(self, tmp_path):
        (tmp_path / "c.json").write_text("{}")
        assert load_config(tmp_path / "c.json").channel == calibrate_from_paper()

    @pytest.mark.parametrize("data", [
        {"extra": {}},
        {"channel": {"nope": 1}},
        {"decoder": {"nope": 1}},
        {"tx": {"nope": 1}},
        {"tx": {"duty_cycle": 2.0}},
    ])
    def test_rejects(self, tmp_path, data):
        (tmp_path / "c.json").write_text(json.dumps(data))
        with pytest.raises(ConfigError):
            load_config(tmp_path / "c.json")


class TestEncode:
    def test_a(self, schedule_a, capsys):
        text = schedule_a.read_text().splitlines()
        assert text[1] == "start_s,end_s"
        # 0x41 = 01000001 has 6 zero bits, plus 8 preamble peaks
        assert len(text) - 2 == 14

    def test_a_summary(self, tmp_path, capsys):
        code, out, _ = run(capsys, "encode", "--payload", "A", "--period-ms", 500, "--out", tmp_path / "s.csv")
        assert code == 0
        assert "bits: 16" in out and "duration_s: 8" in out

    def test_empty(self, tmp_path, capsys):
        code, _, err = run(capsys, "encode", "--payload", "", "--out", tmp_path / "s.csv")
        assert code != 0 and err.startswith("error:") and "empty payload" in err

    def test_512_bits(self, tmp_path, capsys):
        code, out, _ = run(capsys, "encode", "--payload", PAYLOAD64, "--out", tmp_path / "s.csv")
        assert code == 0 and "payload 512" in out

    def test_payload_file(self, tmp_path, capsys):
        (tmp_path / "p.bin").write_bytes(b"\x00\xff")
        code, out, _ = run(capsys, "encode", "--payload-file", tmp_path / "p.bin", "--out", tmp_path / "s.csv")
        assert code == 0 and "payload 16" in out


class TestSimulate:
    def test_deterministic(self, schedule_a, tmp_path, capsys):
        for name in ("x", "y"):
            run(capsys, "simulate", "--schedule", schedule_a, "--seed", 7, "--out", tmp_path / f"{name}.csv")
        assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()

    def test_seed_changes_output(self, schedule_a, tmp_path, capsys):
        for s in (1, 2):
            run(capsys, "simulate", "--schedule", schedule_a, "--seed", s, "--out", tmp_path / f"{s}.csv")
        assert (tmp_path / "1.csv").read_bytes() != (tmp_path / "2.csv").read_bytes()

    def test_noiseless_max(self, schedule_a, tmp_path, capsys):
        run(capsys, "simulate", "--schedule", schedule_a, "--noiseless", "--out", tmp_path / "t.csv")
        assert load_trace(tmp_path / "t.csv").samples.max() == 450.0

    def test_missing_schedule(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate", "--schedule", tmp_path / "no.csv", "--out", tmp_path / "t.csv")
        assert code == 1 and err.startswith("error:")


class TestDecode:
    def test_round_trip_a(self, schedule_a, tmp_path, capsys):
        run(capsys, "simulate", "--schedule", schedule_a, "--noiseless", "--out", tmp_path / "t.csv")
        code, out, _ = run(capsys, "decode", "--trace", tmp_path / "t.csv", "--period-ms", 500,
                           "--expected-payload", "A")
        assert code == 0
        assert "payload: A\n" in out and "BER: 0.00" in out

    def test_matched_not_better_on_shrunk_trace(self, tmp_path, capsys):
        run(capsys, "encode", "--payload", "Covert!", "--period-ms", 500, "--out", tmp_path / "s.csv")
        run(capsys, "simulate", "--schedule", tmp_path / "s.csv", "--seed", 3, "--out", tmp_path / "t.csv")
        bers = {}
        for dec in ("robust", "matched"):
            code, out, _ = run(capsys, "decode", "--trace", tmp_path / "t.csv", "--period-ms", 500,
                               "--decoder", dec, "--expected-payload", "Covert!")
            assert code == 0
            bers[dec] = float(out.split("BER: ")[1])
        assert bers["matched"] >= bers["robust"]

    def test_missing_trace(self, tmp_path, capsys):
        code, _, err = run(capsys, "decode", "--trace", tmp_path / "none.csv")
        assert code != 0 and err.startswith("error:")


class TestSweep:
    def test_noiseless_zeros(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, _, _ = run(capsys, "sweep", "--seeds", 1, "--noiseless", "--payload", "ok", "--out", out)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "device_profile,period_ms,ber_pct,seeds,payload_bits"
        assert len(lines) == 7
        assert all(line.split(",")[2] == "0.00" for line in lines[1:])

    def test_markdown_six_columns(self, capsys):
        code, out, _ = run(capsys, "sweep", "--seeds", 1, "--noiseless", "--payload", "ok", "--format", "markdown")
        assert code == 0
        assert out.splitlines()[0] == "| Device | 1000 | 900 | 800 | 700 | 600 | 500 |"

    def test_unknown_profile(self, capsys):
        code, _, err = run(capsys, "sweep", "--profile", "nexus-9", "--payload", "x")
        assert code == 1 and "unknown profile" in err
