"""
Service Layer Tests for the PWM commutation package

Tests the CommutationRunService: manifests, duty tables, simulation
summaries and modulation-index reports.
"""

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import ConfigError, DomainError, UnsupportedError
from app.services.artifacts import parse_csv
from app.services.command_polar import VoltageCommand
from app.services.inverter_sim import utilization_report
from app.services.runner import (
    DEFAULT_SWEEP,
    CommutationRunService,
    RunManifest,
    load_config_file,
)


class TestRunManifest:
    """Test RunManifest validation"""

    def test_polar_manifest(self, manifest):
        run = manifest("cpwm", m=0.7)
        assert run.resolved_polar().m == 0.7
        assert run.config.n_phases == 3
        assert run.carrier.f_ratio == 21

    def test_voltage_manifest(self):
        run = RunManifest(voltage={"v_d_star": 0.0, "v_q_star": 5.0, "v_dc_hat": 10.0})
        assert run.resolved_polar().m == 0.5

    def test_needs_exactly_one_command(self):
        with pytest.raises(ValidationError):
            RunManifest()
        with pytest.raises(ValidationError):
            RunManifest(polar={"m": 0.5}, voltage={"v_d_star": 0.0, "v_q_star": 5.0, "v_dc_hat": 10.0})

    @pytest.mark.parametrize("fields", [
        {"polarity": 0}, {"samples": 1}, {"cycles": 0}, {"technique": "svpwm"}, {"outputs": ["png"]}, {"outputs": []},
    ])
    def test_invalid_fields(self, manifest, fields):
        with pytest.raises(ValidationError):
            manifest(**fields)

    def test_seed_reaches_the_carrier(self, manifest):
        run = manifest(seed=17, carrier={"dither_s": 1e-6})
        assert run.resolved_carrier().seed == 17
        assert run.resolved_carrier().dither_s == 1e-6


class TestConfigFile:
    """Test JSON config documents"""

    def test_load(self, tmp_path):
        path = tmp_path / "drive.json"
        path.write_text(json.dumps({"m_l": 0.3, "m_h": 0.7, "carrier": {"f_ratio": 33}}))
        assert load_config_file(path) == {"m_l": 0.3, "m_h": 0.7, "carrier": {"f_ratio": 33}}

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "drive.json"
        path.write_text(json.dumps({"m_l": 0.3, "gain": 2}))
        with pytest.raises(DomainError, match="gain"):
            load_config_file(path)

    def test_must_be_object(self, tmp_path):
        path = tmp_path / "drive.json"
        path.write_text("[1, 2]")
        with pytest.raises(DomainError):
            load_config_file(path)


class TestCommutationRunService:
    """Test CommutationRunService functionality"""

    def test_service_initialization(self, run_service):
        assert isinstance(run_service, CommutationRunService)

    def test_convert(self, run_service):
        result = run_service.convert(VoltageCommand(v_d_star=5.0, v_q_star=0.0, v_dc_hat=10.0))
        assert result == {"m": 0.5, "delta_rad": math.pi / 2, "warnings": []}

    def test_convert_overmodulation_warning(self, run_service):
        result = run_service.convert(VoltageCommand(v_d_star=0.0, v_q_star=12.0, v_dc_hat=10.0))
        assert result["warnings"] and "overmodulation" in result["warnings"][0]

    def test_convert_rejects_zero_bus(self, run_service):
        with pytest.raises(DomainError):
            run_service.convert(VoltageCommand(v_d_star=0.0, v_q_star=1.0, v_dc_hat=0.0))

    def test_duty_document(self, run_service, manifest):
        result = run_service.duty(manifest("dpwm", m=1.0, samples=12))
        document = result["document"]
        assert document["technique"] == "dpwm"
        assert len(document["theta_rad"]) == 12
        assert len(document["duties"]) == 12
        assert all(min(row) <= 1e-12 for row in document["duties"])
        assert document["warnings"] == []

    def test_duty_artifacts(self, run_service, manifest):
        produced = run_service.duty_artifacts(manifest("spwm", m=0.0, samples=4))
        assert set(produced) == {"duty.csv", "duty.json", "duty.svg"}
        assert produced["duty.csv"].splitlines()[0] == "theta_rad,d_1,d_2,d_3"
        assert produced["duty.csv"].splitlines()[1] == "0,0.5,0.5,0.5"
        assert produced["duty.svg"].startswith("<svg")
        assert json.loads(produced["duty.json"])["duties"] == [[0.5, 0.5, 0.5]] * 4

    def test_duty_rejects_invalid_config(self, run_service, manifest):
        with pytest.raises(ConfigError):
            run_service.duty(manifest("apwm", config={"m_l": 0.8, "m_h": 0.6}))

    @pytest.mark.parametrize("technique", ["dpwm", "cpwm", "apwm"])
    def test_five_phase_saturation_is_reported(self, run_service, manifest, technique):
        """Test five-phase duties past m of about 0.91 leave [0, 1] and raise a warning"""
        document = run_service.duty(manifest(technique, m=1.0, config={"n_phases": 5}))["document"]
        duties = np.array(document["duties"])
        assert duties.max() > 1.0 or duties.min() < 0.0
        assert document["warnings"] == ["duty saturation: duties outside [0, 1] were clamped"]

    def test_five_phase_below_threshold_is_clean(self, run_service, manifest):
        document = run_service.duty(manifest("cpwm", m=0.9, config={"n_phases": 5}))["document"]
        duties = np.array(document["duties"])
        assert duties.min() >= 0.0 and duties.max() <= 1.0
        assert document["warnings"] == []

    def test_thpwm_five_phase_unsupported(self, run_service, manifest):
        with pytest.raises(UnsupportedError):
            run_service.duty(manifest("thpwm", config={"n_phases": 5}))

    def test_simulate_summary(self, run_service, manifest):
        result = run_service.simulate(manifest("cpwm", m=0.5, carrier={"f_ratio": 64, "samples_per_period": 200}))
        summary = result["document"]
        assert summary["switch_transitions"] == {"v_a": 128.0, "v_b": 128.0, "v_c": 128.0}
        assert summary["switch_transitions_total"] == 384.0
        assert summary["max_average_error"] <= 1.0 / 200 + 1e-12
        assert summary["max_on_time_error_s"] <= 50e-6 / 200 * (1 + 1e-9)
        assert len(summary["period_averages"]["v_a"]) == 64
        assert summary["utilization_analytic"] == 0.5
        assert summary["utilization_duty_level"] == pytest.approx(0.5, abs=1e-9)
        assert summary["dominant_switching_component"]["order"] == 2
        assert summary["warnings"] == []
        json.dumps(summary, allow_nan=False)

    def test_simulate_utilization_matches_report(self, run_service, manifest):
        run = manifest("dpwm", m=0.8)
        result = run_service.simulate(run)
        report = utilization_report("dpwm", 0.8, run.config, run.resolved_carrier(), wf=result["waveform"])
        summary = result["document"]
        assert summary["utilization"] == report.switched
        assert summary["utilization_duty_level"] == report.duty_level
        assert summary["utilization_analytic"] == report.analytic == 0.8

    def test_simulate_zero_modulation(self, run_service, manifest):
        summary = run_service.simulate(manifest("spwm", m=0.0))["document"]
        assert summary["utilization"] is None
        assert summary["switch_transitions_total"] == 6 * 21

    def test_simulate_warnings(self, run_service, manifest):
        summary = run_service.simulate(manifest("spwm", m=1.2, carrier={"dither_s": 2e-6}))["document"]
        assert any(w.startswith("overmodulation") for w in summary["warnings"])
        assert any(w.startswith("duty saturation") for w in summary["warnings"])
        assert any(w.startswith("dithered periods") for w in summary["warnings"])

    def test_simulate_artifacts(self, run_service, manifest):
        produced = run_service.simulate_artifacts(manifest("apwm", m=0.5, carrier={"samples_per_period": 16}))
        assert set(produced) == {
            "simulate_summary.json", "simulate_waveform.csv", "simulate_waveform.svg", "simulate_spectrum.csv",
        }
        header = produced["simulate_waveform.csv"].splitlines()[0]
        assert header == "t_s,v_a,v_b,v_c,v_ab,v_bc,v_ca"
        assert len(produced["simulate_waveform.csv"].splitlines()) == 1 + 21 * 16
        spectrum = parse_csv(produced["simulate_spectrum.csv"])
        assert list(spectrum) == ["freq_hz", "amplitude"]
        assert len(spectrum["freq_hz"]) == 21 * 16 // 2 + 1
        assert spectrum["freq_hz"][1] == pytest.approx(20_000.0 / 21, rel=1e-12)

    def test_report_point(self, run_service, manifest):
        record = run_service.report_point(manifest("apwm"), 0.2)
        assert record["commutation_offset"] == 1.0
        assert record["blend_factor"] == 1.0
        assert record["duties_at_theta_0"]["apwm"] == record["duties_at_theta_0"]["dpwm-offset"]
        assert set(record["duties_at_theta_0"]) == {"spwm", "thpwm", "dpwm", "dpwm-offset", "cpwm", "apwm"}

    def test_report_point_five_phases_skips_thpwm(self, run_service, manifest):
        record = run_service.report_point(manifest("cpwm", config={"n_phases": 5}), 0.5)
        assert "thpwm" not in record["duties_at_theta_0"]
        assert len(record["duties_at_theta_0"]["cpwm"]) == 5

    @pytest.mark.asyncio
    async def test_report_sweep(self, run_service, manifest):
        document = await run_service.report(manifest("apwm", sweep=[0.2, 0.5, 0.9]))
        records = document["records"]
        assert [r["m"] for r in records] == [0.2, 0.5, 0.9]
        assert [r["commutation_offset"] for r in records] == pytest.approx([1.0, 0.5, 0.0], abs=1e-12)
        assert [r["blend_factor"] for r in records] == [r["commutation_offset"] for r in records]
        high = records[2]["duties_at_theta_0"]
        assert high["apwm"] == high["cpwm"]
        for record in records:
            assert record["utilization"] == pytest.approx(record["m"], abs=1e-9)

    @pytest.mark.asyncio
    async def test_report_default_sweep(self, run_service, manifest):
        document = await run_service.report(manifest("spwm"))
        assert [r["m"] for r in document["records"]] == DEFAULT_SWEEP
        assert document["records"][0]["utilization"] is None
        assert 0.4 in document["cpwm_double_switching_m"]
        low, high = document["cpwm_double_switching_range"]
        assert low <= 0.4 <= high
        json.dumps(document, allow_nan=False)

    @pytest.mark.asyncio
    async def test_report_rejects_out_of_range(self, run_service, manifest):
        with pytest.raises(DomainError):
            await run_service.report(manifest(sweep=[0.5, 1.2]))
        with pytest.raises(DomainError):
            await run_service.report(manifest(sweep=[]))

    @pytest.mark.asyncio
    async def test_report_rejects_invalid_config(self, run_service, manifest):
        with pytest.raises(ConfigError):
            await run_service.report(manifest(config={"d_o": 0.5}))

    @pytest.mark.asyncio
    async def test_report_artifacts(self, run_service, manifest):
        produced = await run_service.report_artifacts(manifest(sweep=[0.1, 0.3]))
        assert set(produced) == {"report.json", "report.svg"}
        assert json.loads(produced["report.json"])["records"][1]["m"] == 0.3
        assert produced["report.svg"].startswith("<svg")
