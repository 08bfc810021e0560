import json
import os

import pytest

from agemon.campaign import (
    CampaignConfig,
    build_devices,
    export_campaign,
    run_campaign,
    validate_config,
)
from agemon.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


TINY_INI = """
[campaign]
device_count = 2
temperatures_c = 20,50,80
payloads = cpu_test,flash_read
configs = unbuffered
sweep_profiles = false

[search]
runs_per_frequency = 20
"""


class TestValidateConfig:
    def test_empty_text_gives_full_defaults(self):
        config, errors = validate_config("\n")
        assert errors == []
        assert config == CampaignConfig()

    def test_partial_overrides_keep_other_defaults(self):
        config, errors = validate_config(TINY_INI)
        assert errors == []
        assert config.device_count == 2
        assert config.temperatures_c == (20.0, 50.0, 80.0)
        assert config.runs_per_frequency == 20
        assert config.guard_band_hz == 72e6  # untouched default

    def test_unknown_section_and_key_reported(self):
        _, errors = validate_config(
            "[campaign]\ndevice_count = 2\nwarp_factor = 9\n[nonsense]\nx = 1\n"
        )
        assert any("warp_factor" in e for e in errors)
        assert any("[nonsense]" in e for e in errors)

    def test_all_errors_collected_not_just_first(self):
        _, errors = validate_config(
            "[campaign]\ndevice_count = 0\n"
            "[search]\nf_min_hz = 300e6\nstep_hz = -1\n"
        )
        assert len(errors) >= 3
        assert any("device_count" in e for e in errors)
        assert any("f_min_hz" in e and "f_max_hz" in e for e in errors)
        assert any("step_hz" in e for e in errors)

    def test_temperatures_must_increase(self):
        _, errors = validate_config("[campaign]\ntemperatures_c = 20,20,30\n")
        assert any("strictly increasing" in e for e in errors)

    def test_ageing_schedule_length(self):
        _, errors = validate_config(
            "[campaign]\ntemperatures_c = 20,40\nageing_dvth_v = 0,0.1,0.2\n"
        )
        assert any("ageing_dvth_v" in e for e in errors)
        config, errors = validate_config(
            "[campaign]\ntemperatures_c = 20,40\nageing_dvth_v = 0,0.1\n"
        )
        assert errors == []
        assert config.ageing_for_step(1).threshold_voltage_shift == 0.1

    def test_non_numeric_value_named(self):
        _, errors = validate_config("[search]\nf_min_hz = fast\n")
        assert any("f_min_hz" in e for e in errors)

    def test_output_dir_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("AGEMON_OUTPUT_DIR", str(tmp_path / "elsewhere"))
        config, errors = validate_config("\n")
        assert errors == []
        assert config.output_dir == str(tmp_path / "elsewhere")

    def test_reads_from_path(self, tmp_path):
        path = tmp_path / "campaign.ini"
        path.write_text(TINY_INI)
        config, errors = validate_config(path)
        assert errors == []
        assert config.device_count == 2

    def test_resolved_ini_revalidates_to_same_config(self):
        config, _ = validate_config(TINY_INI)
        round_tripped, errors = validate_config(config.to_ini())
        assert errors == []
        assert round_tripped == config


class TestBuildDevices:
    def test_fleet_shape_and_ids(self):
        devices = build_devices(CampaignConfig(device_count=3))
        assert [d.device_id for d in devices] == ["dev00", "dev01", "dev02"]
        assert all(len(d.paths) == 4 for d in devices)

    def test_adding_devices_preserves_earlier_variation(self):
        small = build_devices(CampaignConfig(device_count=2))
        large = build_devices(CampaignConfig(device_count=5))
        for a, b in zip(small, large):
            assert a.process_variation == b.process_variation

    def test_flash_image_shared_and_region_attached(self):
        devices = build_devices(CampaignConfig(device_count=2))
        assert devices[0].flash_image is devices[1].flash_image
        assert devices[0].test_region == (0, 1024)


def tiny_config(**overrides):
    config, errors = validate_config(TINY_INI)
    assert errors == []
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


class TestRunCampaign:
    def test_series_grid_complete(self):
        report = run_campaign(tiny_config())
        # 2 devices x 2 payloads x 1 config
        assert len(report.mef_series) == 4
        assert all(len(s.points) == 3 for s in report.mef_series)
        assert report.virtual_time_s > 0

    def test_mef_decreases_along_ladder(self):
        report = run_campaign(tiny_config())
        for s in report.mef_series:
            mefs = s.mefs
            assert all(b < a for a, b in zip(mefs, mefs[1:]))

    def test_deterministic_reports(self):
        first = run_campaign(tiny_config())
        second = run_campaign(tiny_config())
        assert first.to_json_dict() == second.to_json_dict()

    def test_ci_mode_caps_runs(self):
        report = run_campaign(tiny_config(sweep_profiles=True), ci_mode=True)
        assert report.sweep_rows
        counted = {
            round((r["error_fraction"] + r["hang_fraction"]) * 20, 6) % 1
            for r in report.sweep_rows
        }
        # 20 runs per frequency survive CI capping (cap is 50)
        assert counted == {0.0}

    def test_export_writes_all_files(self, tmp_path):
        report = run_campaign(tiny_config(sweep_profiles=True), ci_mode=True)
        paths = export_campaign(report, tmp_path)
        for key in ("summary", "sweeps", "scores", "trace", "resolved_config"):
            assert paths[key].exists(), key
        summary = json.loads(paths["summary"].read_text())
        assert summary["flash_image"]["pattern_digest_md5"]
        resolved, errors = validate_config(paths["resolved_config"])
        assert errors == []
        assert resolved.device_count == 2


class TestCli:
    def write_config(self, tmp_path, text=TINY_INI):
        path = tmp_path / "campaign.ini"
        path.write_text(text)
        return str(path)

    def test_validate_ok(self, tmp_path, capsys):
        assert main(["validate", self.write_config(tmp_path)]) == EXIT_OK
        assert "configuration valid" in capsys.readouterr().out

    def test_validate_bad_config(self, tmp_path, capsys):
        path = self.write_config(tmp_path, "[campaign]\ndevice_count = 0\n")
        assert main(["validate", path]) == EXIT_CONFIG
        assert "device_count" in capsys.readouterr().err

    def test_run_and_score_round_trip(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("AGEMON_OUTPUT_DIR", str(tmp_path / "out"))
        assert main(["run", "--ci", self.write_config(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "summary:" in out
        summary_path = tmp_path / "out" / "summary.json"
        assert summary_path.exists()
        assert main(["score", str(summary_path)]) == EXIT_OK
        table = capsys.readouterr().out
        assert "cpu_test" in table and "flash_read" in table

    def test_run_runtime_error_when_floor_too_high(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("AGEMON_OUTPUT_DIR", str(tmp_path / "out"))
        path = self.write_config(
            tmp_path,
            TINY_INI + "f_min_hz = 199e6\nf_max_hz = 200e6\n",
        )
        assert main(["run", "--ci", path]) == EXIT_RUNTIME
        assert "runtime error" in capsys.readouterr().err

    def test_score_missing_report(self, tmp_path, capsys):
        assert main(["score", str(tmp_path / "absent.json")]) == EXIT_RUNTIME

    def test_sweep_command(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        assert main(
            ["sweep", path, "--device", "0", "--payload", "flash_read"]
        ) == EXIT_OK
        out = capsys.readouterr().out
        assert "mef_hz:" in out
        assert "frequency_hz,error_fraction,hang_fraction" in out

    def test_sweep_rejects_bad_selection(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        assert main(
            ["sweep", path, "--device", "9", "--payload", "flash_read"]
        ) == EXIT_CONFIG
        assert main(
            ["sweep", path, "--device", "0", "--payload", "nonexistent"]
        ) == EXIT_CONFIG
