"""CLI subcommands: records, formats, precedence, exit codes, determinism."""

import json

import pytest

from mmcvqkd import cli
from mmcvqkd.channel import ChannelParams, DetectorParams
from mmcvqkd.keyrate import RateParams, total_rate
from mmcvqkd.operations import apply_to_supermodes
from mmcvqkd.source import SourceParams, make_spectrum


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPoint:
    def test_single_mode_point_matches_library(self, capsys):
        code, out, _ = run_cli(
            ["point", "--scenario", "single", "--op", "none", "--gain", "1.0",
             "--loss-db", "0"],
            capsys,
        )
        assert code == 0
        record = cli.parse_csv_records(out)[0]
        source = SourceParams(1.0, make_spectrum("single", 5))
        outcomes = apply_to_supermodes([], source)
        reference = total_rate(
            outcomes, ChannelParams(eta_e=1.0, epsilon=0.1), DetectorParams(), RateParams()
        )
        assert record.total_rate == reference.total
        assert record.evaluations == 1
        assert record.distance_km == 0.0

    def test_point_with_operation(self, capsys):
        code, out, _ = run_cli(
            ["point", "--scenario", "exp", "--op", "0pc", "--ksel", "2",
             "--gain", "1.5", "--t", "0.9,0.8", "--loss-db", "10"],
            capsys,
        )
        assert code == 0
        record = cli.parse_csv_records(out)[0]
        assert record.best_T == (0.9, 0.8)
        assert len(record.per_mode_rates) == 5
        assert record.per_mode_probs[2] == 1.0

    def test_extreme_loss_no_crash(self, capsys):
        code, out, _ = run_cli(
            ["point", "--scenario", "single", "--op", "none", "--gain", "1.0",
             "--loss-db", "300"],
            capsys,
        )
        assert code == 0
        record = cli.parse_csv_records(out)[0]
        assert record.eta_e == pytest.approx(1e-30)
        assert 0.0 <= record.total_rate < 1e-12

    def test_ksel_exceeding_kmax_is_usage_error(self, capsys):
        code, _, err = run_cli(
            ["point", "--scenario", "exp", "--op", "0pc", "--ksel", "9",
             "--gain", "1.0", "--t", "0.9", "--loss-db", "10"],
            capsys,
        )
        assert code == 2
        assert "ksel" in err

    def test_wrong_transmissivity_count_is_usage_error(self, capsys):
        code, _, err = run_cli(
            ["point", "--scenario", "exp", "--op", "0pc", "--ksel", "2",
             "--gain", "1.0", "--t", "0.9", "--loss-db", "10"],
            capsys,
        )
        assert code == 2
        assert "t:" in err


class TestSweep:
    def test_monotone_decreasing_in_loss(self, capsys):
        code, out, _ = run_cli(
            ["sweep", "--scenario", "single", "--op", "none",
             "--loss-db", "0:35:5"],
            capsys,
        )
        assert code == 0
        records = cli.parse_csv_records(out)
        assert [r.loss_db for r in records] == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0]
        rates = [r.total_rate for r in records]
        assert all(x > y for x, y in zip(rates, rates[1:]))

    def test_memory_dominates_no_memory(self, capsys):
        args = ["sweep", "--scenario", "exp", "--op", "1ps", "--ksel", "1",
                "--loss-db", "0:20:10"]
        code, out_mem, _ = run_cli(args + ["--memory"], capsys)
        assert code == 0
        code, out_nomem, _ = run_cli(args + ["--no-memory"], capsys)
        assert code == 0
        for with_memory, without in zip(
            cli.parse_csv_records(out_mem), cli.parse_csv_records(out_nomem)
        ):
            assert without.total_rate <= with_memory.total_rate + 1e-15

    def test_workers_agree_with_serial(self, capsys, tmp_path):
        base = ["sweep", "--scenario", "single", "--op", "none", "--loss-db", "5:15:5"]
        serial = tmp_path / "serial.csv"
        parallel = tmp_path / "parallel.csv"
        assert cli.main(base + ["--out", str(serial)]) == 0
        assert cli.main(base + ["--out", str(parallel), "--workers", "3"]) == 0
        assert serial.read_bytes() == parallel.read_bytes()

    def test_unwritable_output_path_fails_before_compute(self, capsys):
        code, _, err = run_cli(
            ["sweep", "--scenario", "single", "--op", "none",
             "--loss-db", "0:35:1", "--out", "/nonexistent-dir/sweep.csv"],
            capsys,
        )
        assert code == 1
        assert "error" in err


class TestOutputFormats:
    def test_csv_round_trip_bit_exact(self, capsys):
        code, out, _ = run_cli(
            ["optimize", "--scenario", "exp", "--op", "0pc", "--ksel", "1",
             "--loss-db", "10"],
            capsys,
        )
        assert code == 0
        records = cli.parse_csv_records(out)
        assert cli.records_to_csv(records) == out

    def test_json_format(self, capsys):
        code, out, _ = run_cli(
            ["point", "--scenario", "single", "--op", "none", "--gain", "0.9",
             "--loss-db", "10", "--format", "json"],
            capsys,
        )
        assert code == 0
        payload = json.loads(out)
        assert isinstance(payload, list) and payload[0]["scenario"] == "single"
        assert payload[0]["loss_db"] == 10.0

    def test_optimize_trace_output(self, capsys, tmp_path):
        trace = tmp_path / "trace.json"
        code, out, _ = run_cli(
            ["optimize", "--scenario", "single", "--op", "none", "--loss-db", "10",
             "--trace", str(trace)],
            capsys,
        )
        assert code == 0
        payload = json.loads(trace.read_text())
        record = cli.parse_csv_records(out)[0]
        assert payload["evaluations"] == record.evaluations
        assert payload["refinement_trace"]
        assert set(payload["refinement_trace"][0]) == {"params", "rate"}

    def test_byte_identical_runs(self, tmp_path):
        args = ["sweep", "--scenario", "exp", "--op", "0pc", "--ksel", "1",
                "--loss-db", "0:10:5"]
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        assert cli.main(args + ["--out", str(first)]) == 0
        assert cli.main(args + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()


class TestConfigPrecedence:
    def test_env_overrides_config_flags_override_env(self, capsys, tmp_path, monkeypatch):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"eps": 0.3, "nu": 1.2}))
        monkeypatch.setenv("MMCVQKD_EPS", "0.2")
        code, out, _ = run_cli(
            ["point", "--scenario", "single", "--op", "none", "--gain", "1.0",
             "--loss-db", "0", "--config", str(config)],
            capsys,
        )
        assert code == 0
        record = cli.parse_csv_records(out)[0]
        # env eps=0.2 beats config eps=0.3; config nu=1.2 still applies
        source = SourceParams(1.0, make_spectrum("single", 5))
        outcomes = apply_to_supermodes([], source)
        expected = total_rate(
            outcomes, ChannelParams(eta_e=1.0, epsilon=0.2),
            DetectorParams(nu=1.2), RateParams(),
        )
        assert record.total_rate == expected.total

        monkeypatch.setenv("MMCVQKD_EPS", "0.2")
        code, out, _ = run_cli(
            ["point", "--scenario", "single", "--op", "none", "--gain", "1.0",
             "--loss-db", "0", "--config", str(config), "--eps", "0.05"],
            capsys,
        )
        record = cli.parse_csv_records(out)[0]
        expected = total_rate(
            outcomes, ChannelParams(eta_e=1.0, epsilon=0.05),
            DetectorParams(nu=1.2), RateParams(),
        )
        assert record.total_rate == expected.total

    def test_unknown_config_key_is_usage_error(self, capsys, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"epsilon": 0.3}))
        code, _, err = run_cli(
            ["point", "--scenario", "single", "--op", "none", "--gain", "1.0",
             "--loss-db", "0", "--config", str(config)],
            capsys,
        )
        assert code == 2
        assert "unknown field" in err

    def test_bad_loss_range_is_usage_error(self, capsys):
        code, _, err = run_cli(
            ["sweep", "--scenario", "single", "--op", "none", "--loss-db", "10:0:5"],
            capsys,
        )
        assert code == 2
        assert "loss-db" in err


class TestVerify:
    def test_default_run_passes(self, capsys):
        code, out, _ = run_cli(["verify"], capsys)
        assert code == 0
        assert "all" in out and "passed" in out
        assert out.count("PASS") >= 10

    def test_tightened_tolerance_reports_tolerance_miss(self, capsys):
        code, out, err = run_cli(["verify", "--tol-cm", "1e-15", "--tol-prob", "1e-15"], capsys)
        assert code == 1
        assert "tolerance-miss" in out
        assert "structural-mismatch" not in out
        assert "FAILED" in err
