"""
Command Polar - Voltage command conversion and drive configuration

Converts synchronous-frame voltage commands into modulation index and phase
advance, and validates the drive configuration shared by every commutation
technique.
"""

import logging
import math
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

# Slack for the m_h + d_o <= 1 bound so that e.g. 0.95 + 0.05 is accepted
DUTY_BOUND_TOLERANCE = 1e-12


class VoltageCommand(BaseModel):
    """Synchronous-frame voltage command pair plus estimated DC-link voltage"""
    model_config = ConfigDict(frozen=True)

    v_d_star: float = Field(..., description="d-axis voltage command (V)")
    v_q_star: float = Field(..., description="q-axis voltage command (V)")
    v_dc_hat: float = Field(..., description="Estimated DC-link voltage (V)")


class PolarCommand(BaseModel):
    """Modulation index and phase advance"""
    model_config = ConfigDict(frozen=True)

    m: float = Field(..., ge=0.0, description="Modulation index")
    delta: float = Field(default=0.0, description="Phase advance (rad), in (-pi, pi]")

    @field_validator("delta")
    @classmethod
    def delta_in_principal_range(cls, value: float) -> float:
        if not (-math.pi < value <= math.pi):
            raise ValueError("delta must lie in (-pi, pi]")
        return value

    @property
    def overmodulated(self) -> bool:
        return self.m > 1.0


class DriveConfig(BaseModel):
    """
    Drive configuration shared by the commutation techniques

    Only field types are checked on construction; the cross-field invariants
    are checked by validate_config so that every violation can be reported.
    """
    model_config = ConfigDict(frozen=True)

    n_phases: int = Field(default=3, description="Phase count")
    m_l: float = Field(default=0.4, description="Lower modulation-index threshold")
    m_h: float = Field(default=0.6, description="Upper modulation-index threshold")
    d_o: float = Field(default=0.05, description="Commutation offset magnitude (duty)")
    blend_swap: bool = Field(default=False, description="Swap the APWM blend direction")

    @property
    def beta(self) -> float:
        """Displacement between adjacent phases (rad)"""
        return 2.0 * math.pi / self.n_phases


def to_polar(cmd: VoltageCommand) -> PolarCommand:
    """
    Convert a synchronous-frame voltage command to polar form

    The phase advance is measured from the q-axis (d over q), using a
    four-quadrant arctangent. A zero command maps to (0, 0).

    Args:
        cmd: Voltage command with a positive DC-link estimate

    Returns:
        PolarCommand with m = |V*| / V_dc and delta = atan2(V_d*, V_q*)

    Raises:
        DomainError: If the DC-link voltage is not positive or any input is not finite
    """
    values = (cmd.v_d_star, cmd.v_q_star, cmd.v_dc_hat)
    if not all(math.isfinite(v) for v in values):
        raise DomainError("voltage command components must be finite")
    if cmd.v_dc_hat <= 0.0:
        raise DomainError(f"v_dc_hat must be positive, got {cmd.v_dc_hat}")

    if cmd.v_d_star == 0.0 and cmd.v_q_star == 0.0:
        return PolarCommand(m=0.0, delta=0.0)

    m = math.hypot(cmd.v_d_star, cmd.v_q_star) / cmd.v_dc_hat
    delta = math.atan2(cmd.v_d_star, cmd.v_q_star)
    if delta <= -math.pi:
        # atan2(-0.0, negative) lands on -pi
        delta += 2.0 * math.pi

    if m > 1.0:
        logger.warning("Overmodulation: m=%.6g exceeds 1", m)
    return PolarCommand(m=m, delta=delta)


def config_violations(cfg: DriveConfig) -> List[str]:
    """List every DriveConfig invariant that cfg violates"""
    violations = []
    # NaN fails every comparison below
    for name in ("m_l", "m_h", "d_o"):
        if not math.isfinite(getattr(cfg, name)):
            violations.append(f"{name} not finite")
    if cfg.n_phases < 3:
        violations.append("n_phases < 3")
    if cfg.m_l < 0.0:
        violations.append("m_l < 0")
    if cfg.m_l >= cfg.m_h:
        violations.append("m_l ≥ m_h")
    if cfg.m_h > 1.0:
        violations.append("m_h > 1")
    if cfg.d_o < 0.0:
        violations.append("d_o < 0")
    if cfg.m_h + cfg.d_o > 1.0 + DUTY_BOUND_TOLERANCE:
        violations.append("m_h + d_o > 1")
    return violations


def validate_config(cfg: DriveConfig) -> DriveConfig:
    """
    Check the DriveConfig invariants

    Returns:
        cfg unchanged when valid

    Raises:
        ConfigError: Naming each violated invariant
    """
    violations = config_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg
