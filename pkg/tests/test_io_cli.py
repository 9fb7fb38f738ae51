import struct

import numpy as np
import pytest

from nvqrng import io
from nvqrng.cli import main, parse_time_ps
from nvqrng.estimator import g2_histogram, hbt_split
from nvqrng.simulator import TimestampStream, simulate_poisson


class TestTimestampFormat:
    def test_round_trip(self, tmp_path):
        stream = simulate_poisson(1e5, 10**10, seed=70)
        path = tmp_path / "s.nvqts"
        io.write_timestamps(path, stream)
        back = io.read_timestamps(path, duration_ps=stream.duration_ps)
        assert np.array_equal(back.timestamps, stream.timestamps)
        assert back.duration_ps == stream.duration_ps

    def test_header_layout(self, tmp_path):
        stream = TimestampStream(np.array([25, 50, 12800]), 20000)
        path = tmp_path / "s.nvqts"
        io.write_timestamps(path, stream)
        raw = path.read_bytes()
        assert raw[:8] == b"NVQTS001"
        assert struct.unpack("<Q", raw[8:16])[0] == 3
        assert len(raw) == 16 + 3 * 8
        assert struct.unpack("<Q", raw[16:24])[0] == 25

    def test_duration_defaults_to_last_timestamp(self, tmp_path):
        path = tmp_path / "s.nvqts"
        io.write_timestamps(path, TimestampStream(np.array([25, 12800]), 99999))
        assert io.read_timestamps(path).duration_ps == 12800

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.nvqts"
        path.write_bytes(b"NOTMAGIC" + struct.pack("<Q", 0))
        with pytest.raises(ValueError, match="magic"):
            io.read_timestamps(path)

    def test_truncated_body_rejected(self, tmp_path):
        path = tmp_path / "bad.nvqts"
        path.write_bytes(b"NVQTS001" + struct.pack("<Q", 2) + b"\x00" * 8)
        with pytest.raises(ValueError, match="records"):
            io.read_timestamps(path)


class TestBitsAndConfig:
    def test_bits_round_trip_with_sidecar(self, tmp_path):
        path = tmp_path / "r.bits"
        io.write_bits(path, b"\x01\x02\x03", {"photons_used": 3, "duration_ps": 999})
        assert path.read_bytes() == b"\x01\x02\x03"
        meta = io.read_sidecar(path)
        assert meta == {"photons_used": "3", "duration_ps": "999"}

    def test_parse_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nregion = 1\nseed=42  # trailing\n\n")
        assert io.parse_config(path) == {"region": "1", "seed": "42"}

    def test_parse_config_rejects_bad_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("region 1\n")
        with pytest.raises(ValueError, match="run.cfg:1"):
            io.parse_config(path)

    def test_config_hash_stable_and_order_free(self):
        a = io.config_hash({"x": 1, "y": 2})
        b = io.config_hash({"y": 2, "x": 1})
        assert a == b
        assert a != io.config_hash({"x": 1, "y": 3})


class TestHistogramFormat:
    def test_round_trip(self, tmp_path):
        s = simulate_poisson(2e5, 10**11, seed=71)
        a, b = hbt_split(s, seed=72)
        hist = g2_histogram(a, b, window_ns=1.0, max_tau_ns=50.0)
        path = tmp_path / "h.txt"
        io.write_histogram(path, hist)
        back = io.read_histogram(path)
        assert np.array_equal(back.tau_centers_ns, hist.tau_centers_ns)
        assert np.array_equal(back.g2, hist.g2)
        assert np.array_equal(back.raw_coincidences, hist.raw_coincidences)
        assert back.counts_det0 == hist.counts_det0
        assert back.total_time_s == hist.total_time_s

    def test_missing_header_field_rejected(self, tmp_path):
        path = tmp_path / "h.txt"
        path.write_text("0.0\t1.0\t5\n")
        with pytest.raises(ValueError, match="missing histogram header"):
            io.read_histogram(path)


class TestTimeParsing:
    @pytest.mark.parametrize(
        "text,expected",
        [("12800", 12800), ("50ps", 50), ("12.8ns", 12800), ("2us", 2_000_000),
         ("1ms", 10**9), ("2s", 2 * 10**12)],
    )
    def test_units(self, text, expected):
        assert parse_time_ps(text) == expected

    @pytest.mark.parametrize("text", ["", "2 s", "5m", "ns", "-3ns"])
    def test_strict(self, text):
        with pytest.raises(Exception):
            parse_time_ps(text)


class TestCli:
    def test_theory_region1(self, capsys):
        assert main(["theory", "--region", "1"]) == 0
        out = capsys.readouterr().out
        assert "min_entropy_per_bit=0.99997" in out

    def test_theory_explicit_params(self, capsys):
        rc = main([
            "theory", "--n", "1", "--gamma1", "0.02", "--beta", "1.126",
            "--rho", "0.96531", "--lam", "0.0000216",
        ])
        assert rc == 0
        assert "min_entropy_per_bit=0.99997" in capsys.readouterr().out

    def test_source_modes_exclusive(self):
        with pytest.raises(SystemExit):
            main(["theory", "--region", "1", "--gamma1", "0.02"])

    def test_pipeline_simulate_extract_quality(self, tmp_path, capsys):
        ts = tmp_path / "r2.nvqts"
        bits = tmp_path / "r2.bits"
        assert main([
            "simulate", "--region", "2", "--duration", "0.2s", "--seed", "9",
            "--out", str(ts),
        ]) == 0
        assert main([
            "extract", "--in", str(ts), "--out", str(bits), "--duration", "0.2s",
        ]) == 0
        meta = io.read_sidecar(bits)
        assert int(meta["photons_used"]) == bits.stat().st_size
        assert main(["quality", "--in", str(bits), "--lags", "3"]) == 0
        out = capsys.readouterr().out
        assert "entropy_per_byte=" in out and "lag_3=" in out

    def test_g2_and_fit_commands(self, tmp_path, capsys):
        ts = tmp_path / "r1.nvqts"
        hist = tmp_path / "hist.txt"
        main(["simulate", "--region", "1", "--lam", "0.0015", "--duration", "0.3s",
              "--seed", "77", "--dead-time", "0", "--out", str(ts)])
        assert main([
            "g2", "--in", str(ts), "--out", str(hist), "--seed", "3",
            "--window", "1ns", "--max-tau", "400ns", "--duration", "0.3s",
        ]) == 0
        capsys.readouterr()
        assert main(["fit", "--in", str(hist), "--rho", "0.96531", "--n-max", "6"]) == 0
        out = capsys.readouterr().out
        assert "n_emitters=1" in out

    def test_extract_to_stdout(self, tmp_path, capsysbinary):
        ts = tmp_path / "one.nvqts"
        io.write_timestamps(ts, TimestampStream(np.array([12775]), 12800))
        assert main(["extract", "--in", str(ts), "--out", "-"]) == 0
        assert capsysbinary.readouterr().out == b"\xff"

    def test_extract_empty_stream_warns(self, tmp_path, capsys):
        ts = tmp_path / "empty.nvqts"
        bits = tmp_path / "empty.bits"
        io.write_timestamps(ts, TimestampStream(np.array([], dtype=np.int64), 0))
        assert main(["extract", "--in", str(ts), "--out", str(bits)]) == 0
        assert bits.stat().st_size == 0
        assert "empty" in capsys.readouterr().err

    def test_missing_file_is_reported(self, capsys):
        assert main(["quality", "--in", "/nonexistent/q.bits"]) == 2
        assert "no such file" in capsys.readouterr().err

    def test_config_file_feeds_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("region=1\n")
        assert main(["--config", str(cfg), "theory"]) == 0
        assert "min_entropy_per_bit=0.99997" in capsys.readouterr().out

    def test_malformed_config_exits_nonzero(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("not a pair\n")
        assert main(["--config", str(cfg), "theory", "--region", "1"]) == 2
        assert "run.cfg:1" in capsys.readouterr().err

    def test_reproduce_writes_artifacts(self, tmp_path, capsys):
        rc = main([
            "reproduce", "1", "--seed", "5", "--duration", "0.1s",
            "--outdir", str(tmp_path),
        ])
        out = capsys.readouterr().out
        assert rc == 0, out
        assert (tmp_path / "region1_seed5.nvqts").exists()
        assert (tmp_path / "region1_seed5.bits").exists()
        assert (tmp_path / "region1_seed5_report.txt").exists()
        assert "SKIP throughput" in out  # 0.1 s is below the rate-check floor
