"""
Commutation Core - Duty-cycle synthesis for the PWM commutation techniques

Every technique is evaluated through one vectorised kernel so that a single
angle and a full electrical-cycle grid produce bit-identical duties.
For phase r (0-based here) the argument is x_r = theta + delta - r * beta.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterator, Tuple

import numpy as np

from app.errors import DomainError, UnsupportedError
from app.services.command_polar import DriveConfig, PolarCommand, validate_config
from app.services.position_frames import (
    TWO_PI,
    ElectricalAngle,
    Frame,
    line_grid_to_phase,
    line_to_phase,
)

logger = logging.getLogger(__name__)

SCALE = 2.0 / math.sqrt(3.0)


class Technique(str, Enum):
    SPWM = "spwm"
    THPWM = "thpwm"
    DPWM = "dpwm"
    DPWM_OFFSET = "dpwm-offset"
    CPWM = "cpwm"
    APWM = "apwm"


@dataclass(frozen=True)
class DutyVector:
    """Per-phase duty cycles for one electrical angle"""
    duties: Tuple[float, ...]
    technique: Technique
    m: float
    theta_eff: float

    def __len__(self) -> int:
        return len(self.duties)

    def __getitem__(self, index: int) -> float:
        return self.duties[index]

    def as_array(self) -> np.ndarray:
        return np.array(self.duties, dtype=float)

    @property
    def saturated(self) -> bool:
        return any(d < 0.0 or d > 1.0 for d in self.duties)


def _ramp(m: float, m_l: float, m_h: float) -> float:
    if not math.isfinite(m) or m < 0.0:
        raise DomainError(f"modulation index must be a finite value >= 0, got {m}")
    if m < m_l:
        return 1.0
    if m < m_h:
        return (m_h - m) / (m_h - m_l)
    return 0.0


def commutation_offset(m: float, cfg: DriveConfig) -> float:
    """Offset weight f(m): 1 below m_l, linear ramp to 0 at m_h, 0 above"""
    return _ramp(m, cfg.m_l, cfg.m_h)


def blend_factor(m: float, cfg: DriveConfig) -> float:
    """APWM blending factor b(m); the same ramp as the commutation offset"""
    return _ramp(m, cfg.m_l, cfg.m_h)


# -- vectorised kernels: thetas (N,) phase-frame angles -> duties (N, n) --

def _arguments(thetas: np.ndarray, polar: PolarCommand, cfg: DriveConfig) -> np.ndarray:
    phase_shift = np.arange(cfg.n_phases) * cfg.beta
    return (thetas + polar.delta)[:, None] - phase_shift[None, :]


def _spwm(thetas, polar, cfg):
    return 0.5 * (1.0 + polar.m * np.sin(_arguments(thetas, polar, cfg)))


def _thpwm(thetas, polar, cfg):
    if cfg.n_phases != 3:
        raise UnsupportedError(
            f"third harmonic injection is defined for three phases only, got {cfg.n_phases}",
            technique=Technique.THPWM.value,
        )
    x = _arguments(thetas, polar, cfg)
    return 0.5 * (1.0 + polar.m * SCALE * (np.sin(x) + np.sin(3.0 * x) / 6.0))


def _dpwm(thetas, polar, cfg):
    spwm = _spwm(thetas, polar, cfg)
    return SCALE * (spwm - spwm.min(axis=1, keepdims=True))


def _dpwm_offset(thetas, polar, cfg):
    return _dpwm(thetas, polar, cfg) + cfg.d_o * commutation_offset(polar.m, cfg)


def _cpwm(thetas, polar, cfg):
    grounded = _dpwm(thetas, polar, cfg)
    return grounded + 0.5 * (1.0 - grounded.max(axis=1, keepdims=True))


def _apwm(thetas, polar, cfg):
    b = blend_factor(polar.m, cfg)
    continuous = _cpwm(thetas, polar, cfg)
    discontinuous = _dpwm_offset(thetas, polar, cfg)
    if cfg.blend_swap:
        return (1.0 - b) * discontinuous + b * continuous
    return (1.0 - b) * continuous + b * discontinuous


_KERNELS: Dict[Technique, Callable] = {
    Technique.SPWM: _spwm,
    Technique.THPWM: _thpwm,
    Technique.DPWM: _dpwm,
    Technique.DPWM_OFFSET: _dpwm_offset,
    Technique.CPWM: _cpwm,
    Technique.APWM: _apwm,
}


def duty_matrix(technique: Technique, thetas: np.ndarray, polar: PolarCommand,
                cfg: DriveConfig) -> np.ndarray:
    """
    Duties for a grid of phase-frame angles

    Args:
        technique: Commutation technique
        thetas: Phase-frame estimated positions (rad), shape (N,)
        polar: Modulation index and phase advance
        cfg: Drive configuration (validated here)

    Returns:
        Array of shape (N, n_phases)
    """
    validate_config(cfg)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return _KERNELS[Technique(technique)](thetas, polar, cfg)


def _phase_value(theta_hat: ElectricalAngle, cfg: DriveConfig) -> float:
    if theta_hat.frame is Frame.LINE:
        return line_to_phase(theta_hat, cfg.n_phases).value
    return theta_hat.value


def compute_duty(technique: Technique, theta_hat: ElectricalAngle, polar: PolarCommand,
                 cfg: DriveConfig) -> DutyVector:
    """Duty vector of any technique at one estimated position"""
    theta = _phase_value(theta_hat, cfg)
    row = duty_matrix(technique, np.array([theta]), polar, cfg)[0]
    duties = DutyVector(tuple(float(d) for d in row), Technique(technique),
                        polar.m, theta + polar.delta)
    if duties.saturated:
        logger.debug("%s duties leave [0, 1] at m=%.6g", technique, polar.m)
    return duties


def spwm_duty(theta_hat: ElectricalAngle, polar: PolarCommand, cfg: DriveConfig) -> DutyVector:
    """Sinusoidal PWM"""
    return compute_duty(Technique.SPWM, theta_hat, polar, cfg)


def thpwm_duty(theta_hat: ElectricalAngle, polar: PolarCommand, cfg: DriveConfig) -> DutyVector:
    """Third harmonic injection PWM (three-phase only)"""
    return compute_duty(Technique.THPWM, theta_hat, polar, cfg)


def dpwm_duty(theta_hat: ElectricalAngle, polar: PolarCommand, cfg: DriveConfig) -> DutyVector:
    """Discontinuous PWM: the lowest phase is grounded"""
    return compute_duty(Technique.DPWM, theta_hat, polar, cfg)


def dpwm_offset_duty(theta_hat: ElectricalAngle, polar: PolarCommand, cfg: DriveConfig) -> DutyVector:
    """Discontinuous PWM plus the common-mode commutation offset d_o * f(m)"""
    return compute_duty(Technique.DPWM_OFFSET, theta_hat, polar, cfg)


def cpwm_duty(theta_hat: ElectricalAngle, polar: PolarCommand, cfg: DriveConfig) -> DutyVector:
    """Continuous PWM: grounded duties shifted to be symmetric about 0.5"""
    return compute_duty(Technique.CPWM, theta_hat, polar, cfg)


def apwm_duty(theta_hat: ElectricalAngle, polar: PolarCommand, cfg: DriveConfig) -> DutyVector:
    """Adaptive PWM: blend of continuous and offset-discontinuous duties"""
    return compute_duty(Technique.APWM, theta_hat, polar, cfg)


def line_to_line_duties(duties: np.ndarray) -> np.ndarray:
    """Adjacent-pair differences d_r - d_(r+1), wrapping the last phase to the first"""
    duties = np.asarray(duties, dtype=float)
    return duties - np.roll(duties, -1, axis=-1)


@dataclass(frozen=True)
class DutyWaveform:
    """Duties over a uniform grid covering one electrical cycle"""
    technique: Technique
    polar: PolarCommand
    frame: Frame
    thetas: np.ndarray
    phase_thetas: np.ndarray
    duties: np.ndarray

    def __len__(self) -> int:
        return len(self.thetas)

    def __iter__(self) -> Iterator[Tuple[float, DutyVector]]:
        for theta, phase_theta, row in zip(self.thetas, self.phase_thetas, self.duties):
            vector = DutyVector(tuple(float(d) for d in row), self.technique,
                                self.polar.m, float(phase_theta) + self.polar.delta)
            yield float(theta), vector

    def line_to_line(self) -> np.ndarray:
        return line_to_line_duties(self.duties)


def duty_waveform(technique: Technique, polar: PolarCommand, cfg: DriveConfig,
                  samples: int, frame: Frame = Frame.PHASE, polarity: int = 1) -> DutyWaveform:
    """
    Evaluate a technique on a uniform angle grid over [0, 2*pi)

    When frame is line, the grid is in line position and each point is
    converted to phase position before evaluation.

    Raises:
        DomainError: If fewer than two samples are requested
    """
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples}")
    frame = Frame(frame)
    thetas = np.arange(samples) * (TWO_PI / samples)
    if frame is Frame.LINE:
        phase_thetas = line_grid_to_phase(thetas, polarity, cfg.n_phases)
    else:
        phase_thetas = thetas
    duties = duty_matrix(technique, phase_thetas, polar, cfg)
    if polar.overmodulated:
        logger.warning("Overmodulation: %s evaluated at m=%.6g", technique, polar.m)
    logger.debug("Evaluated %s over %d samples in the %s frame", technique, samples, frame.value)
    return DutyWaveform(Technique(technique), polar, frame, thetas, phase_thetas, duties)
