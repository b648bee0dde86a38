"""
Commutation Run Service - Manifest-driven duty, simulation and report runs

This service turns a RunManifest into result documents and text artifacts.
Both the command-line interface and the HTTP router call it.
"""

import asyncio
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.errors import DomainError
from app.services import artifacts
from app.services.command_polar import (
    DriveConfig,
    PolarCommand,
    VoltageCommand,
    to_polar,
    validate_config,
)
from app.services.commutation_core import (
    DutyVector,
    Technique,
    blend_factor,
    commutation_offset,
    compute_duty,
    duty_waveform,
)
from app.services.inverter_sim import (
    CarrierConfig,
    SwitchedWaveform,
    analytic_utilization,
    line_to_line,
    on_time_error,
    period_averages,
    switching_count,
    synthesize,
    utilization_report,
)
from app.services.position_frames import ElectricalAngle, Frame
from app.services.spectral import Spectrum, SwitchingComponent, analyze, dominant_switching_component
from app.services.switch_timing import SATURATION_TOLERANCE, SwitchTiming, duty_to_times

logger = logging.getLogger(__name__)

DEFAULT_SWEEP = [round(0.1 * i, 10) for i in range(11)]
SWITCHING_BAND = (1, 3)
OUTPUT_FORMATS = ("csv", "json", "svg")


class RunManifest(BaseModel):
    """Everything a run needs: configuration, command, technique and outputs"""
    model_config = ConfigDict(frozen=True)

    config: DriveConfig = Field(default_factory=DriveConfig)
    carrier: CarrierConfig = Field(default_factory=CarrierConfig)
    technique: Technique = Technique.SPWM
    polar: Optional[PolarCommand] = None
    voltage: Optional[VoltageCommand] = None
    outputs: List[str] = Field(default_factory=lambda: ["csv"])
    seed: int = 0
    frame: Frame = Frame.PHASE
    polarity: int = 1
    samples: int = Field(default=360, ge=2, description="Angle grid points per electrical cycle")
    cycles: int = Field(default=1, ge=1, description="Electrical cycles to simulate")
    sweep: Optional[List[float]] = None

    @field_validator("outputs")
    @classmethod
    def known_formats(cls, value: List[str]) -> List[str]:
        unknown = [fmt for fmt in value if fmt not in OUTPUT_FORMATS]
        if unknown or not value:
            raise ValueError(f"outputs must be a non-empty list drawn from {OUTPUT_FORMATS}")
        return value

    @field_validator("polarity")
    @classmethod
    def polarity_sign(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError("polarity must be +1 or -1")
        return value

    @model_validator(mode="after")
    def one_command(self) -> "RunManifest":
        if (self.polar is None) == (self.voltage is None):
            raise ValueError("exactly one of polar or voltage must be supplied")
        return self

    def resolved_polar(self) -> PolarCommand:
        return self.polar if self.polar is not None else to_polar(self.voltage)

    def resolved_carrier(self) -> CarrierConfig:
        return self.carrier.model_copy(update={"seed": self.seed})


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON config document

    Top-level keys n_phases, m_l, m_h, d_o, blend_swap and a nested
    carrier object; unknown keys are rejected.
    """
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(document, dict):
        raise DomainError("config document must be a JSON object")
    allowed = set(DriveConfig.model_fields) | {"carrier"}
    unknown = sorted(set(document) - allowed)
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(unknown)}")
    return document


@dataclass(frozen=True)
class SwitchingInstants:
    """One pass of the converter control chain for a single PWM period"""
    polar: PolarCommand
    duties: DutyVector
    timing: SwitchTiming


def switching_instants(cmd: VoltageCommand, theta_hat: ElectricalAngle, technique: Technique,
                       cfg: DriveConfig, t_p: float) -> SwitchingInstants:
    """Voltage command and position to upper-switch on/off times"""
    polar = to_polar(cmd)
    duties = compute_duty(technique, theta_hat, polar, cfg)
    return SwitchingInstants(polar, duties, duty_to_times(duties, t_p))


def _warnings(polar: PolarCommand, saturated: bool = False, dithered: bool = False) -> List[str]:
    warnings = []
    if polar.overmodulated:
        warnings.append(f"overmodulation: m={polar.m:.17g} exceeds 1")
    if saturated:
        warnings.append("duty saturation: duties outside [0, 1] were clamped")
    if dithered:
        warnings.append("dithered periods: capture is not an integer number of cycles")
    return warnings


def _component_document(component: SwitchingComponent, f_sw: float) -> Dict[str, Any]:
    return {
        "order": component.order,
        "frequency_hz": component.frequency,
        "amplitude": component.amplitude,
        "peak_frequency_hz": component.peak_frequency,
        "peak_amplitude": component.peak_amplitude,
        "groups": {str(k): v for k, v in component.groups.items()},
        "switching_freq_hz": f_sw,
    }


def line_spectrum(wf: SwitchedWaveform) -> Spectrum:
    """Amplitude spectrum of the first line-to-line trace"""
    v_ll = next(iter(line_to_line(wf).values()))
    return analyze(v_ll, wf.sample_rate, times=wf.t)


def switching_component(wf: SwitchedWaveform, carrier: CarrierConfig,
                        spec: Optional[Spectrum] = None) -> SwitchingComponent:
    """Dominant carrier-multiple group of the first line-to-line trace"""
    if spec is None:
        spec = line_spectrum(wf)
    return dominant_switching_component(spec, carrier.switching_freq, SWITCHING_BAND)


def _utilization_fields(technique: Technique, m: float, cfg: DriveConfig, carrier: CarrierConfig,
                        wf: SwitchedWaveform) -> Dict[str, Optional[float]]:
    if m > 0.0:
        report = utilization_report(technique, m, cfg, carrier, wf=wf)
        return {
            "utilization": report.switched,
            "utilization_duty_level": report.duty_level,
            "utilization_analytic": report.analytic,
        }
    return {
        "utilization": None,
        "utilization_duty_level": None,
        "utilization_analytic": analytic_utilization(technique, m),
    }


class CommutationRunService:
    """Service producing duty tables, simulations and sweeps from manifests"""

    def convert(self, cmd: VoltageCommand) -> Dict[str, Any]:
        polar = to_polar(cmd)
        return {"m": polar.m, "delta_rad": polar.delta, "warnings": _warnings(polar)}

    def duty(self, manifest: RunManifest) -> Dict[str, Any]:
        """
        Duty table over one electrical cycle

        Returns:
            Dictionary with the DutyWaveform, a JSON document and warnings
        """
        polar = manifest.resolved_polar()
        waveform = duty_waveform(manifest.technique, polar, manifest.config, manifest.samples,
                                 manifest.frame, manifest.polarity)
        saturated = bool(np.any(waveform.duties < -SATURATION_TOLERANCE)
                         or np.any(waveform.duties > 1.0 + SATURATION_TOLERANCE))
        if saturated:
            logger.warning("Duty table for %s at m=%.6g leaves [0, 1]", manifest.technique, polar.m)
        warnings = _warnings(polar, saturated)
        document = {
            "technique": manifest.technique.value,
            "m": polar.m,
            "delta_rad": polar.delta,
            "frame": manifest.frame.value,
            "polarity": manifest.polarity,
            "theta_rad": waveform.thetas.tolist(),
            "duties": waveform.duties.tolist(),
            "warnings": warnings,
        }
        return {"waveform": waveform, "document": document, "warnings": warnings}

    def duty_artifacts(self, manifest: RunManifest) -> Dict[str, str]:
        result = self.duty(manifest)
        return {
            "duty.csv": artifacts.duty_csv(result["waveform"]),
            "duty.json": artifacts.to_json(result["document"]),
            "duty.svg": artifacts.duty_svg(result["waveform"]),
        }

    def simulate(self, manifest: RunManifest) -> Dict[str, Any]:
        """
        Switched simulation plus summary

        Returns:
            Dictionary with the SwitchedWaveform and the JSON summary document
        """
        polar = manifest.resolved_polar()
        carrier = manifest.resolved_carrier()
        validate_config(manifest.config)
        wf = synthesize(manifest.technique, polar, manifest.config, carrier, manifest.cycles)

        averages = period_averages(wf)
        expected = np.clip(wf.duties, 0.0, 1.0) * wf.v_dc
        counts = switching_count(wf)
        spectrum = line_spectrum(wf)
        component = switching_component(wf, carrier, spectrum)

        names = wf.phase_names
        summary = {
            "technique": manifest.technique.value,
            "m": polar.m,
            "delta_rad": polar.delta,
            "n_phases": manifest.config.n_phases,
            "f_ratio": carrier.f_ratio,
            "samples_per_period": carrier.samples_per_period,
            "v_dc": carrier.v_dc,
            "seed": carrier.seed,
            "fundamental_freq_hz": wf.fundamental_freq,
            "switching_freq_hz": carrier.switching_freq,
            "period_averages": {f"v_{name}": averages[:, r].tolist() for r, name in enumerate(names)},
            "max_average_error": float(np.max(np.abs(averages - expected))),
            "max_on_time_error_s": on_time_error(wf),
            "switch_transitions": {f"v_{name}": float(counts[r]) for r, name in enumerate(names)},
            "switch_transitions_total": float(np.sum(counts)),
            **_utilization_fields(manifest.technique, polar.m, manifest.config, carrier, wf),
            "dominant_switching_component": _component_document(component, carrier.switching_freq),
            "warnings": _warnings(polar, wf.saturated, carrier.dithered),
        }
        return {"waveform": wf, "spectrum": spectrum, "document": summary, "warnings": summary["warnings"]}

    def simulate_artifacts(self, manifest: RunManifest) -> Dict[str, str]:
        result = self.simulate(manifest)
        return {
            "simulate_summary.json": artifacts.to_json(result["document"]),
            "simulate_waveform.csv": artifacts.waveform_csv(result["waveform"]),
            "simulate_waveform.svg": artifacts.waveform_svg(result["waveform"]),
            "simulate_spectrum.csv": artifacts.spectrum_csv(result["spectrum"]),
        }

    def report_point(self, manifest: RunManifest, m: float) -> Dict[str, Any]:
        """One sweep record: ramps, utilisation, dominant groups and reference duties"""
        cfg = manifest.config
        carrier = manifest.resolved_carrier()
        delta = manifest.resolved_polar().delta
        polar = PolarCommand(m=m, delta=delta)

        record: Dict[str, Any] = {
            "m": m,
            "commutation_offset": commutation_offset(m, cfg),
            "blend_factor": blend_factor(m, cfg),
        }
        wf = synthesize(manifest.technique, polar, cfg, carrier)
        fields = _utilization_fields(manifest.technique, m, cfg, carrier, wf)
        record["utilization"] = fields["utilization_duty_level"]
        record["utilization_switched"] = fields["utilization"]
        record["utilization_analytic"] = fields["utilization_analytic"]
        record["dominant_switching_component"] = _component_document(
            switching_component(wf, carrier), carrier.switching_freq)

        for technique in (Technique.CPWM, Technique.DPWM):
            reference = synthesize(technique, polar, cfg, carrier)
            record[f"{technique.value}_dominant_order"] = switching_component(reference, carrier).order

        theta = ElectricalAngle.phase(0.0, manifest.polarity)
        duties = {}
        for technique in Technique:
            if technique is Technique.THPWM and cfg.n_phases != 3:
                continue
            duties[technique.value] = list(compute_duty(technique, theta, polar, cfg).duties)
        record["duties_at_theta_0"] = duties
        return record

    async def report(self, manifest: RunManifest) -> Dict[str, Any]:
        """
        Sweep over modulation index

        Points are evaluated concurrently; records keep the sweep order.

        Raises:
            DomainError: If a sweep value lies outside [0, 1]
        """
        validate_config(manifest.config)
        sweep = list(manifest.sweep) if manifest.sweep is not None else DEFAULT_SWEEP
        if not sweep:
            raise DomainError("sweep must contain at least one modulation index")
        outside = [m for m in sweep if not (math.isfinite(m) and 0.0 <= m <= 1.0)]
        if outside:
            raise DomainError(f"sweep values outside [0, 1]: {outside}")

        records = await asyncio.gather(
            *(asyncio.to_thread(self.report_point, manifest, m) for m in sweep)
        )
        double_frequency = [r["m"] for r in records
                            if r["m"] > 0.0 and r["cpwm_dominant_order"] == 2]
        logger.info("Report over %d points, CPWM 2*f_sw dominance at m=%s", len(records), double_frequency)
        return {
            "technique": manifest.technique.value,
            "m_l": manifest.config.m_l,
            "m_h": manifest.config.m_h,
            "d_o": manifest.config.d_o,
            "blend_swap": manifest.config.blend_swap,
            "f_ratio": manifest.carrier.f_ratio,
            "records": list(records),
            "cpwm_double_switching_m": double_frequency,
            "cpwm_double_switching_range": (
                [min(double_frequency), max(double_frequency)] if double_frequency else None
            ),
            "warnings": [],
        }

    async def report_artifacts(self, manifest: RunManifest) -> Dict[str, str]:
        document = await self.report(manifest)
        records = document["records"]
        m_values = np.array([r["m"] for r in records])
        series = {
            "f(m)": np.array([r["commutation_offset"] for r in records]),
            "b(m)": np.array([r["blend_factor"] for r in records]),
            "utilization": np.array([r["utilization_analytic"] for r in records]),
        }
        return {
            "report.json": artifacts.to_json(document),
            "report.svg": artifacts.svg_plot(m_values, series, "Ramps and utilization over m",
                                             "modulation index m", "value"),
        }
