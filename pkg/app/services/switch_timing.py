"""
Switch Timing - Duty cycles to switch on/off times and dithered PWM periods
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.errors import DomainError
from app.services.commutation_core import DutyVector

logger = logging.getLogger(__name__)

# Rounding noise at the duty bounds does not count as saturation
SATURATION_TOLERANCE = 1e-12


class TimebaseConfig(BaseModel):
    """Nominal PWM period and its dither interval"""
    model_config = ConfigDict(frozen=True)

    t_p_nominal: float = Field(..., gt=0.0, description="Nominal PWM period (s)")
    dither_amplitude: float = Field(default=0.0, ge=0.0, description="Maximum period deviation (s)")
    seed: int = Field(default=0, description="Generator seed")

    @model_validator(mode="after")
    def amplitude_below_period(self) -> "TimebaseConfig":
        if self.dither_amplitude >= self.t_p_nominal:
            raise ValueError("dither_amplitude must be smaller than t_p_nominal")
        return self


@dataclass(frozen=True)
class SwitchTiming:
    """Upper-switch on and off times of every phase leg for one PWM period"""
    t_on: Tuple[float, ...]
    t_off: Tuple[float, ...]
    t_p: float
    saturated: bool = False


def duty_to_times(duties: Union[DutyVector, Sequence[float]], t_p: float) -> SwitchTiming:
    """
    Convert duties into on/off times within one PWM period

    Out-of-range duties are clamped to [0, 1] and flagged as saturated.

    Raises:
        DomainError: If the period is not positive
    """
    if not t_p > 0.0:
        raise DomainError(f"PWM period must be positive, got {t_p}")
    raw = duties.as_array() if isinstance(duties, DutyVector) else np.asarray(duties, dtype=float)
    clamped = np.clip(raw, 0.0, 1.0)
    saturated = bool(np.any(np.abs(clamped - raw) > SATURATION_TOLERANCE))
    if saturated:
        logger.warning("Duty saturation: %s clamped to [0, 1]", np.round(raw, 6).tolist())

    t_off = t_p - t_p * clamped
    # Recovering t_on from t_off makes t_on + t_off == t_p hold exactly
    t_on = t_p - t_off
    return SwitchTiming(
        t_on=tuple(float(v) for v in t_on),
        t_off=tuple(float(v) for v in t_off),
        t_p=t_p,
        saturated=saturated,
    )


class PeriodDither:
    """
    Seeded source of dithered PWM periods

    Holds generator state; do not share one instance between threads.
    """

    def __init__(self, cfg: TimebaseConfig):
        self.cfg = cfg
        self._rng = np.random.default_rng(cfg.seed)

    def draw(self, count: int) -> np.ndarray:
        if count < 0:
            raise DomainError(f"count must be >= 0, got {count}")
        low = self.cfg.t_p_nominal - self.cfg.dither_amplitude
        high = self.cfg.t_p_nominal + self.cfg.dither_amplitude
        if self.cfg.dither_amplitude == 0.0:
            return np.full(count, self.cfg.t_p_nominal)
        return self._rng.uniform(low, high, count)


def dithered_periods(cfg: TimebaseConfig, count: int) -> np.ndarray:
    """Draw count periods uniformly from t_p_nominal +/- dither_amplitude"""
    return PeriodDither(cfg).draw(count)
