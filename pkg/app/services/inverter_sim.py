"""
Inverter Simulator - Idealised carrier-comparison inverter

Synthesises center-aligned phase-to-ground voltage pulses from duty cycles,
one PWM period at a time, and measures period averages, switching activity
and DC bus utilisation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.errors import DomainError
from app.services.command_polar import DriveConfig, PolarCommand
from app.services.commutation_core import Technique, duty_matrix, duty_waveform
from app.services.position_frames import TWO_PI, wrap_array
from app.services.spectral import analyze, harmonic
from app.services.switch_timing import TimebaseConfig, dithered_periods, duty_to_times

logger = logging.getLogger(__name__)

PHASE_LETTERS = "abcdefghijklmnopq"

# Duty resolution used for the duty-level (non-switched) utilisation
DUTY_GRID_SAMPLES = 3600


class CarrierConfig(BaseModel):
    """Carrier, time grid and DC link of the simulated inverter"""
    model_config = ConfigDict(frozen=True)

    f_ratio: int = Field(default=21, ge=3, description="PWM periods per electrical cycle")
    samples_per_period: int = Field(default=400, ge=16, description="Time samples per PWM period")
    v_dc: float = Field(default=1.0, gt=0.0, description="DC-link voltage (V)")
    t_p_s: float = Field(default=50e-6, gt=0.0, description="Nominal PWM period (s)")
    dither_s: float = Field(default=0.0, ge=0.0, description="Period dither amplitude (s)")
    seed: int = Field(default=0, description="Dither generator seed")

    @field_validator("samples_per_period")
    @classmethod
    def samples_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("samples_per_period must be even")
        return value

    @model_validator(mode="after")
    def dither_below_period(self) -> "CarrierConfig":
        if self.dither_s >= self.t_p_s:
            raise ValueError("dither_s must be smaller than t_p_s")
        return self

    @property
    def dithered(self) -> bool:
        return self.dither_s > 0.0

    @property
    def timebase(self) -> TimebaseConfig:
        return TimebaseConfig(t_p_nominal=self.t_p_s, dither_amplitude=self.dither_s, seed=self.seed)

    @property
    def switching_freq(self) -> float:
        return 1.0 / self.t_p_s

    @property
    def fundamental_freq(self) -> float:
        return 1.0 / (self.f_ratio * self.t_p_s)


def phase_names(n_phases: int) -> List[str]:
    if n_phases <= len(PHASE_LETTERS):
        return list(PHASE_LETTERS[:n_phases])
    return [f"p{r + 1}" for r in range(n_phases)]


@dataclass(frozen=True)
class SwitchedWaveform:
    """Sampled phase-to-ground voltages of every phase leg"""
    technique: Technique
    m: float
    t: np.ndarray
    v_pg: np.ndarray
    fundamental_freq: float
    sample_rate: float
    v_dc: float
    cycles: float
    period_starts: np.ndarray
    period_lengths: np.ndarray
    thetas: np.ndarray
    duties: np.ndarray
    t_on: np.ndarray
    saturated: bool

    @property
    def n_phases(self) -> int:
        return self.v_pg.shape[0]

    @property
    def n_periods(self) -> int:
        return len(self.period_lengths)

    @property
    def phase_names(self) -> List[str]:
        return phase_names(self.n_phases)


def synthesize(technique: Technique, polar: PolarCommand, cfg: DriveConfig,
               carrier: CarrierConfig, cycles: int = 1) -> SwitchedWaveform:
    """
    Carrier-comparison synthesis over whole electrical cycles

    The position is held at its value at the start of each PWM period; each
    phase is at v_dc wherever the triangular carrier (0 -> 1 -> 0 over the
    period) lies below its duty. Dithered periods keep the sample spacing
    of the nominal period and change the number of samples instead.

    Args:
        technique: Commutation technique
        polar: Modulation index and phase advance
        cfg: Drive configuration
        carrier: Carrier configuration
        cycles: Electrical cycles to simulate

    Returns:
        SwitchedWaveform whose samples are exactly 0 or v_dc
    """
    if cycles < 1:
        raise DomainError(f"cycles must be >= 1, got {cycles}")

    n_periods = carrier.f_ratio * cycles
    dt = carrier.t_p_s / carrier.samples_per_period
    if carrier.dithered:
        periods = dithered_periods(carrier.timebase, n_periods)
        counts = np.maximum(2, 2 * np.rint(periods / (2.0 * dt)).astype(int))
    else:
        counts = np.full(n_periods, carrier.samples_per_period)
    starts = np.concatenate(([0], np.cumsum(counts)))
    period_lengths = counts * dt
    total = int(starts[-1])

    thetas = wrap_array(TWO_PI * carrier.fundamental_freq * starts[:-1] * dt)
    duties = duty_matrix(technique, thetas, polar, cfg)

    timings = [duty_to_times(row, t_p) for row, t_p in zip(duties, period_lengths)]
    saturated = any(timing.saturated for timing in timings)
    t_on = np.array([timing.t_on for timing in timings])
    clamped = np.clip(duties, 0.0, 1.0)

    period_index = np.repeat(np.arange(n_periods), counts)
    tau = (np.arange(total) - starts[period_index] + 0.5) / counts[period_index]
    carrier_wave = np.minimum(2.0 * tau, 2.0 * (1.0 - tau))
    v_pg = np.where(carrier_wave[None, :] < clamped[period_index].T, carrier.v_dc, 0.0)

    if carrier.dithered:
        covered = total * dt * carrier.fundamental_freq
    else:
        covered = float(cycles)
    if saturated:
        logger.warning("Duty saturation while synthesizing %s at m=%.6g", technique, polar.m)
    logger.debug("Synthesized %s: %d periods, %d samples", technique, n_periods, total)

    return SwitchedWaveform(
        technique=Technique(technique),
        m=polar.m,
        t=(np.arange(total) + 0.5) * dt,
        v_pg=v_pg,
        fundamental_freq=carrier.fundamental_freq,
        sample_rate=1.0 / dt,
        v_dc=carrier.v_dc,
        cycles=covered,
        period_starts=starts,
        period_lengths=period_lengths,
        thetas=thetas,
        duties=duties,
        t_on=t_on,
        saturated=saturated,
    )


def line_to_line(wf: SwitchedWaveform) -> Dict[str, np.ndarray]:
    """Adjacent-pair voltage differences v_ab, v_bc, ..., wrapping to the first phase"""
    names = wf.phase_names
    traces = {}
    for r in range(wf.n_phases):
        s = (r + 1) % wf.n_phases
        traces[f"v_{names[r]}{names[s]}"] = wf.v_pg[r] - wf.v_pg[s]
    return traces


def period_averages(wf: SwitchedWaveform) -> np.ndarray:
    """Mean phase voltage over each PWM period, shape (n_periods, n_phases)"""
    sums = np.add.reduceat(wf.v_pg, wf.period_starts[:-1], axis=1)
    return (sums / np.diff(wf.period_starts)[None, :]).T


def on_time_error(wf: SwitchedWaveform) -> float:
    """Largest gap between the sampled pulse widths and the commanded on-times (s)"""
    high = np.add.reduceat((wf.v_pg > 0.0).astype(int), wf.period_starts[:-1], axis=1)
    return float(np.max(np.abs(high.T / wf.sample_rate - wf.t_on)))


def switching_count(wf: SwitchedWaveform) -> np.ndarray:
    """Level transitions per phase per electrical cycle, counting the wrap-around"""
    transitions = np.count_nonzero(wf.v_pg != np.roll(wf.v_pg, 1, axis=1), axis=1)
    return transitions / wf.cycles


def clamped_spans(duties: np.ndarray, atol: float = 1e-12) -> List[List[Tuple[int, int]]]:
    """
    Contiguous zero-duty runs of each phase on a periodic grid

    Returns:
        For every phase, a list of (start_index, length) runs; a run that wraps
        past the end of the grid is reported once, starting near the end.
    """
    mask = np.abs(np.asarray(duties, dtype=float)) <= atol
    n_samples = mask.shape[0]
    spans = []
    for column in mask.T:
        if column.all():
            spans.append([(0, n_samples)])
            continue
        if not column.any():
            spans.append([])
            continue
        # Rotate so the grid starts on an unclamped sample
        shift = int(np.argmin(column))
        rolled = np.roll(column, -shift)
        edges = np.diff(np.concatenate(([0], rolled.astype(int), [0])))
        run_starts = np.flatnonzero(edges == 1)
        run_ends = np.flatnonzero(edges == -1)
        spans.append([(int((s + shift) % n_samples), int(e - s)) for s, e in zip(run_starts, run_ends)])
    return spans


@dataclass(frozen=True)
class UtilizationReport:
    """Fundamental line-to-line amplitude divided by the DC-link voltage"""
    technique: Technique
    m: float
    switched: float
    duty_level: float
    analytic: float


def analytic_utilization(technique: Technique, m: float) -> float:
    """Closed-form three-phase value: sqrt(3)/2 * m for SPWM, m for the others"""
    if Technique(technique) is Technique.SPWM:
        return math.sqrt(3.0) / 2.0 * m
    return m


def duty_utilization(technique: Technique, m: float, cfg: DriveConfig,
                     samples: int = DUTY_GRID_SAMPLES) -> float:
    """Line-to-line fundamental of the duty waveform itself (no switching)"""
    waveform = duty_waveform(technique, PolarCommand(m=m), cfg, samples)
    spec = analyze(waveform.line_to_line()[:, 0], sample_rate=float(samples))
    return harmonic(spec, 1.0, 1)


def switched_utilization(wf: SwitchedWaveform) -> float:
    """Fundamental amplitude of the first line-to-line trace over v_dc"""
    v_ll = next(iter(line_to_line(wf).values()))
    spec = analyze(v_ll, wf.sample_rate)
    return harmonic(spec, wf.fundamental_freq, 1) / wf.v_dc


def utilization_report(technique: Technique, m: float, cfg: DriveConfig,
                       carrier: CarrierConfig,
                       wf: Optional[SwitchedWaveform] = None) -> UtilizationReport:
    """
    Bus utilisation of a technique at modulation index m

    Raises:
        DomainError: For m <= 0, where the ratio is undefined
    """
    if not m > 0.0:
        raise DomainError(f"utilization is undefined for m={m}")
    if wf is None:
        wf = synthesize(technique, PolarCommand(m=m), cfg, carrier)
    return UtilizationReport(
        technique=Technique(technique),
        m=m,
        switched=switched_utilization(wf),
        duty_level=duty_utilization(technique, m, cfg),
        analytic=analytic_utilization(technique, m),
    )
