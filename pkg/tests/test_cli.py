"""Command-line interface: validation, exit codes, outputs, determinism."""

import json

import numpy as np
import pytest

from dotspin.cli import ConfigError, main, validate_config


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidation:
    def test_unknown_key_names_the_path(self):
        with pytest.raises(ConfigError, match="params.bogus"):
            validate_config({"params": {"bogus": 1.0}}, "ramsey")

    def test_wrong_type_rejected(self):
        with pytest.raises(ConfigError, match="detuning_khz"):
            validate_config({"detuning_khz": "fast"}, "ramsey")
        with pytest.raises(ConfigError):
            validate_config({"detuning_khz": True}, "ramsey")

    def test_valid_config_passes(self):
        validate_config(
            {"detuning_khz": 2.0, "params": {"b_ext": 1.42},
             "noise": {"sigma_iz": 0.1}},
            "ramsey",
        )

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            validate_config({}, "teleport")


class TestExitCodes:
    def test_bad_config_key_exits_1(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code, _, err = run_cli(capsys, "ramsey", "--config", str(cfg))
        assert code == 1
        assert "bogus" in err

    def test_missing_config_file_exits_1(self, capsys):
        code, _, err = run_cli(capsys, "ramsey", "--config", "/nope.json")
        assert code == 1
        assert "not found" in err

    def test_malformed_json_reports_line(self, capsys, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text('{"a": 1,,}')
        code, _, err = run_cli(capsys, "ramsey", "--config", str(cfg))
        assert code == 1
        assert ":1:" in err

    def test_zero_trials_exits_1(self, capsys):
        code, _, err = run_cli(capsys, "readout-fidelity", "--trials", "0")
        assert code == 1
        assert "trials must be >= 1" in err

    def test_unknown_reproduce_id_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["reproduce", "9z"])
        assert exc.value.code == 2

    def test_success_exits_0(self, capsys):
        code, out, _ = run_cli(capsys, "readout-fidelity")
        assert code == 0
        assert "f_n" in out


class TestDryRun:
    def test_dry_run_prints_plan_without_output(self, capsys, tmp_path):
        out = tmp_path / "res.csv"
        code, stdout, _ = run_cli(
            capsys, "readout-fidelity", "--dry-run", "--out", str(out)
        )
        assert code == 0
        plan = json.loads(stdout)
        assert plan["experiment"] == "readout-fidelity"
        assert not out.exists()


class TestReadoutScan:
    def test_scan_m_reports_published_optimum(self, capsys, tmp_path):
        cfg = tmp_path / "r.json"
        cfg.write_text(json.dumps({"f_e_avg": 0.76}))
        out = tmp_path / "scan.csv"
        code, _, _ = run_cli(
            capsys, "readout-fidelity", "--config", str(cfg),
            "--scan-m", "1..50", "--out", str(out),
        )
        assert code == 0
        data = np.genfromtxt(out, delimiter=",", names=True)
        assert data["m_opt"][0] == 26.0
        assert data["m"][np.argmax(data["f_n"])] == 26.0


class TestOutputs:
    def test_outdir_env_var_resolves_relative_paths(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("DOTSPIN_OUTDIR", str(tmp_path))
        code, _, _ = run_cli(
            capsys, "readout-fidelity", "--out", "scan.csv"
        )
        assert code == 0
        assert (tmp_path / "scan.csv").exists()

    def test_fit_round_trip_from_csv(self, capsys, tmp_path):
        x = np.linspace(0.0, 20.0, 60)
        y = 0.4 * np.cos(2 * np.pi * 0.22425 * x) + 0.5
        data = tmp_path / "trace.csv"
        data.write_text(
            "t_us,p_up\n" + "\n".join(f"{a},{b}" for a, b in zip(x, y))
        )
        code, out, _ = run_cli(
            capsys, "fit", "--model", "sinusoid", "--input", str(data)
        )
        assert code == 0
        fit = json.loads(out)["result"]
        assert fit["parameters"]["frequency"] == pytest.approx(0.22425, rel=1e-3)

    def test_fit_unknown_model_exits_1(self, capsys, tmp_path):
        data = tmp_path / "trace.csv"
        data.write_text("x,y\n0,1\n1,2\n")
        code, _, err = run_cli(
            capsys, "fit", "--model", "spline", "--input", str(data)
        )
        assert code == 1
        assert "spline" in err

    def test_reruns_are_byte_identical(self, capsys, tmp_path):
        cfg = tmp_path / "r.json"
        cfg.write_text(json.dumps({
            "tau_start": 0.0, "tau_stop": 400.0, "tau_points": 5,
            "noise": {"sigma_iz": 0.0776},
        }))
        outs = []
        for name, threads in (("a.csv", "1"), ("b.csv", "4"), ("c.csv", "1")):
            out = tmp_path / name
            code, _, _ = run_cli(
                capsys, "ramsey", "--config", str(cfg), "--trials", "6",
                "--threads", threads, "--out", str(out),
            )
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]


class TestReproduce:
    def test_loaded_resonance_map_peaks_on_conditional_lines(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("DOTSPIN_OUTDIR", str(tmp_path))
        code, _, _ = run_cli(capsys, "reproduce", "2f", "--trials", "1")
        assert code == 0
        for name, line in (
            ("fig_2f_electron_down.csv", 12.23461),
            ("fig_2f_electron_up.csv", 11.78611),
        ):
            data = np.genfromtxt(tmp_path / name, delimiter=",", names=True)
            # strongest response at the longest pulse on the conditional line
            best = np.argmax(data["p_flip"])
            assert data["frequency_mhz"][best] == pytest.approx(line, abs=0.005)
