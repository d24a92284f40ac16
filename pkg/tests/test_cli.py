"""
Tests for the sounder command-line interface and runner.
"""

import csv

import pytest
import yaml

from mimo.hardening.validation import ConfigError
from sounder.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, create_parser, main
from sounder.commands import to_run_config
from sounder.runner import (
    DEFAULT_OUTPUT_DIR,
    EXIT_UNRELIABLE,
    default_sizes,
    list_scenarios,
    load_scenario,
    resolve_output_dir,
    validate_scenarios,
)

SMALL_SYNTH = {
    "n_time": 400,
    "n_freq": 8,
    "n_ant": 8,
    "seed": 3,
    "lost_samples": {"rate": 0.02, "depth_db": 25.0},
    "large_scale": {"slope_k": -0.001, "intercept_m": 5.0, "shadow_sigma": 1.0},
}


@pytest.fixture
def synth_file(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump({"synth": SMALL_SYNTH}))
    return path


@pytest.fixture
def cht_file(tmp_path, synth_file):
    """A small synthesized tensor on disk."""
    out = tmp_path / "synth"
    assert main(["synth", "--config", str(synth_file), "--out", str(out)]) == EXIT_OK
    return out / "tensor.cht"


def _read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _read_yaml(path):
    with open(path) as f:
        return yaml.safe_load(f)


class TestScenarioPresets:
    """Shipped presets load and validate."""

    def test_presets_listed(self):
        assert set(list_scenarios()) >= {"aisle-scan", "corridor-walk"}

    def test_presets_validate(self):
        assert validate_scenarios() == len(list_scenarios())

    def test_aisle_scan(self):
        scenario, synth = load_scenario("aisle-scan")
        assert synth.dims == (6000, 100, 100)
        assert synth.lost_samples.rate == 0.01
        assert scenario.analysis.ue_speed_mps == 1.0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_scenario("nowhere")


class TestOutputDirectory:
    """--out, then the environment, then the default."""

    def test_explicit_wins(self, output_dir, tmp_path):
        assert resolve_output_dir(tmp_path / "x") == tmp_path / "x"

    def test_environment(self, output_dir):
        assert resolve_output_dir() == output_dir

    def test_default(self, monkeypatch):
        monkeypatch.delenv("HARDENING_OUTPUT_DIR", raising=False)
        assert resolve_output_dir() == DEFAULT_OUTPUT_DIR

    def test_synth_uses_environment(self, output_dir, synth_file):
        assert main(["synth", "--config", str(synth_file)]) == EXIT_OK
        assert (output_dir / "tensor.cht").is_file()
        assert (output_dir / "manifest.yaml").is_file()


class TestSynthCommand:
    """Tensor generation."""

    def test_artifacts(self, cht_file):
        out = cht_file.parent
        truth = _read_csv(out / "truth_mask.csv")
        assert len(truth) == 400
        manifest = _read_yaml(out / "manifest.yaml")
        assert manifest["command"] == "synth"
        assert manifest["dims"] == [400, 8, 8]
        assert "tensor.cht" in manifest["artifacts"]

    def test_seed_override(self, tmp_path, synth_file):
        assert main(["synth", "--config", str(synth_file), "--seed", "9", "--out", str(tmp_path / "o")]) == EXIT_OK
        assert _read_yaml(tmp_path / "o" / "synth.yaml")["seed"] == 9

    def test_deterministic(self, tmp_path, synth_file):
        out = tmp_path / "again"
        args = ["synth", "--config", str(synth_file), "--out", str(out)]
        assert main(args) == EXIT_OK
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert main(args) == EXIT_OK
        assert {p.name: p.read_bytes() for p in out.iterdir()} == first


class TestAnalysisCommands:
    """Each analysis writes its artifacts."""

    def test_qc(self, cht_file, tmp_path):
        out = tmp_path / "qc"
        assert main(["qc", "--input", str(cht_file), "--out", str(out), "--ue-speed", "1.0"]) == EXIT_OK
        report = _read_yaml(out / "qc.yaml")
        truth = [int(r["n"]) for r in _read_csv(cht_file.parent / "truth_mask.csv") if r["lost"] == "1"]
        assert report["lost_indices"] == truth
        assert report["nyquist_ok"] is True

    def test_qc_full_autocorrelation(self, cht_file, tmp_path):
        out = tmp_path / "qc"
        assert main(["qc", "-i", str(cht_file), "--out", str(out), "--max-lag", "3", "--autocorr-full"]) == EXIT_OK
        assert len(_read_csv(out / "autocorrelation.csv")) == 3 * 8 * 8

    def test_hardening(self, cht_file, tmp_path):
        out = tmp_path / "h"
        assert main(["hardening", "--input", str(cht_file), "--out", str(out)]) == EXIT_OK
        rows = _read_csv(out / "hardening.csv")
        assert [int(r["size"]) for r in rows] == [1, 2, 4, 8]
        std_db = [float(r["std_db"]) for r in rows]
        assert std_db == sorted(std_db, reverse=True)

    def test_hardening_polarization(self, cht_file, tmp_path):
        out = tmp_path / "h"
        args = ["hardening", "-i", str(cht_file), "--out", str(out),
                "--subset-mode", "polarization-only", "--polarization", "V"]
        assert main(args) == EXIT_OK
        assert [int(r["size"]) for r in _read_csv(out / "hardening.csv")] == [1, 2, 4]

    def test_tails(self, cht_file, tmp_path):
        out = tmp_path / "t"
        assert main(["tails", "-i", str(cht_file), "--out", str(out), "--method", "mom"]) == EXIT_OK
        dof = _read_csv(out / "dof.csv")
        assert {r["method"] for r in dof} == {"mle", "mom"}
        assert _read_yaml(out / "tails.yaml")["method"] == "mom"

    def test_margin(self, cht_file, tmp_path):
        out = tmp_path / "m"
        assert main(["margin", "-i", str(cht_file), "--out", str(out), "--p-list", "0.1,0.01"]) == EXIT_OK
        rows = _read_csv(out / "margin.csv")
        assert len(rows) == 4 * 2
        assert all(r["reliable"] == "True" for r in rows)

    def test_shadowing(self, cht_file, tmp_path):
        out = tmp_path / "s"
        assert main(["shadowing", "-i", str(cht_file), "--out", str(out)]) == EXIT_OK
        summary = _read_yaml(out / "shadowing.yaml")
        assert summary["slope_k"] == pytest.approx(-0.001, abs=3 * summary["slope_stderr"])
        assert summary["sigma_hat"] == pytest.approx(1.1, abs=0.2)

    def test_trim_seconds_keeps_time_index(self, tmp_path):
        config = tmp_path / "trend.yaml"
        config.write_text(yaml.safe_dump({"synth": {
            "n_time": 3000, "n_freq": 4, "n_ant": 8, "seed": 4,
            "large_scale": {"slope_k": -0.01, "intercept_m": 20.0, "shadow_sigma": 1.0},
        }}))
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "t")]) == EXIT_OK
        tensor = str(tmp_path / "t" / "tensor.cht")

        assert main(["shadowing", "-i", tensor, "--out", str(tmp_path / "a"), "--from-sample", "500"]) == EXIT_OK
        assert main(["shadowing", "-i", tensor, "--out", str(tmp_path / "b"), "--trim-seconds", "5"]) == EXIT_OK
        by_index = _read_yaml(tmp_path / "a" / "shadowing.yaml")
        by_time = _read_yaml(tmp_path / "b" / "shadowing.yaml")
        assert by_time["intercept_m"] == pytest.approx(by_index["intercept_m"], abs=1e-6)
        assert by_time["slope_k"] == pytest.approx(by_index["slope_k"], abs=1e-9)
        assert by_time["intercept_m"] == pytest.approx(20.0, abs=0.5)
        assert int(_read_csv(tmp_path / "b" / "shadowing.csv")[0]["n"]) >= 500

    def test_report(self, cht_file, tmp_path):
        out = tmp_path / "r"
        assert main(["report", "-i", str(cht_file), "--out", str(out)]) == EXIT_OK
        summary = _read_yaml(out / "summary.yaml")
        assert set(summary) == {"qc", "hardening", "tails", "margin", "shadowing"}
        manifest = _read_yaml(out / "manifest.yaml")
        assert manifest["unreliable_rows"] > 0
        assert len(manifest["input_sha256"]) == 64

    def test_input_is_not_modified(self, cht_file, tmp_path):
        before = cht_file.read_bytes()
        main(["report", "-i", str(cht_file), "--out", str(tmp_path / "r")])
        assert cht_file.read_bytes() == before


class TestExitCodes:
    """Failures map to exit codes."""

    def test_strict_with_unreliable_rows(self, cht_file, tmp_path):
        args = ["margin", "-i", str(cht_file), "--out", str(tmp_path / "m"), "--p-list", "1e-5", "--strict"]
        assert main(args) == EXIT_UNRELIABLE == 4

    def test_not_strict_succeeds(self, cht_file, tmp_path):
        args = ["margin", "-i", str(cht_file), "--out", str(tmp_path / "m"), "--p-list", "1e-5"]
        assert main(args) == EXIT_OK

    def test_missing_input(self, tmp_path):
        assert main(["hardening", "-i", str(tmp_path / "absent.cht")]) == EXIT_CONFIG

    def test_even_window(self, cht_file, tmp_path):
        assert main(["qc", "-i", str(cht_file), "--out", str(tmp_path / "q"), "--window", "4"]) == EXIT_CONFIG

    def test_random_subsets_need_seed(self, cht_file):
        assert main(["hardening", "-i", str(cht_file), "--subset-mode", "random-k"]) == EXIT_CONFIG

    def test_probability_out_of_range(self, cht_file, tmp_path):
        args = ["margin", "-i", str(cht_file), "--out", str(tmp_path / "m"), "--p-list", "0.7"]
        assert main(args) == EXIT_CONFIG

    def test_unknown_preset(self, tmp_path):
        assert main(["synth", "--preset", "nowhere", "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_malformed_config_file(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("synth: {n_time: [1, 2\n  seed: :\n")
        assert main(["synth", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_config_file_not_a_mapping(self, tmp_path):
        bad = tmp_path / "list.yaml"
        bad.write_text("- 1\n- 2\n")
        assert main(["synth", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_usage_error(self):
        assert main(["bogus"]) == EXIT_CONFIG

    def test_dimension_mismatch(self, cht_file, tmp_path):
        broken = tmp_path / "broken.cht"
        broken.write_bytes(cht_file.read_bytes()[:-8])
        assert main(["qc", "-i", str(broken), "--out", str(tmp_path / "q")]) == EXIT_DATA

    def test_not_a_cht_file(self, tmp_path):
        junk = tmp_path / "junk.cht"
        junk.write_bytes(b"definitely not a tensor")
        assert main(["qc", "-i", str(junk), "--out", str(tmp_path / "q")]) == EXIT_DATA

    def test_too_many_antennas(self, cht_file, tmp_path):
        args = ["hardening", "-i", str(cht_file), "--out", str(tmp_path / "h"), "--sizes", "1,16"]
        assert main(args) == EXIT_DATA


class TestRunConfig:
    """Argument parsing into RunConfig."""

    def test_lists_are_parsed(self, cht_file):
        args = create_parser().parse_args(["margin", "-i", str(cht_file), "--p-list", "0.1,1e-3"])
        assert to_run_config(args).p_list == [0.1, 1e-3]

    def test_default_sizes(self):
        assert default_sizes(100) == (1, 2, 4, 8, 16, 32, 64, 100)
        assert default_sizes(12) == (1, 2, 4, 8, 12)
