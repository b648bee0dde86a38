"""
Position Frames - Line and phase electrical position signals

The estimated position is usually available as a line position while the
duty-cycle formulas are written against the phase position; the two differ by
a polarity-dependent offset of pi/6 on a three-phase machine.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.errors import DomainError, FrameError, UnsupportedError

TWO_PI = 2.0 * math.pi
THETA_0 = math.pi / 6.0


class Frame(str, Enum):
    LINE = "line"
    PHASE = "phase"


def wrap(raw: float) -> float:
    """
    Wrap an angle into [0, 2*pi)

    Raises:
        DomainError: If raw is not finite
    """
    if not math.isfinite(raw):
        raise DomainError(f"angle must be finite, got {raw}")
    value = raw % TWO_PI
    # Tiny negative inputs round up to exactly 2*pi
    if value >= TWO_PI:
        value = 0.0
    return value


def wrap_array(raw: np.ndarray) -> np.ndarray:
    """Vectorised wrap for angle grids"""
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise DomainError("angles must be finite")
    value = np.mod(raw, TWO_PI)
    value[value >= TWO_PI] = 0.0
    return value


@dataclass(frozen=True)
class ElectricalAngle:
    """An electrical angle tagged with its position frame and machine polarity"""
    value: float
    frame: Frame = Frame.PHASE
    polarity: int = 1

    def __post_init__(self):
        if not (0.0 <= self.value < TWO_PI):
            raise DomainError(f"angle {self.value} is not wrapped to [0, 2*pi)")
        if self.polarity not in (1, -1):
            raise DomainError(f"polarity must be +1 or -1, got {self.polarity}")
        object.__setattr__(self, "frame", Frame(self.frame))

    @classmethod
    def phase(cls, raw: float, polarity: int = 1) -> "ElectricalAngle":
        return cls(wrap(raw), Frame.PHASE, polarity)

    @classmethod
    def line(cls, raw: float, polarity: int = 1) -> "ElectricalAngle":
        return cls(wrap(raw), Frame.LINE, polarity)


def _require_three_phase(n_phases: int) -> None:
    if n_phases != 3:
        raise UnsupportedError(
            f"line/phase position offset is only defined for three phases, got {n_phases}"
        )


def phase_to_line(angle: ElectricalAngle, n_phases: int = 3) -> ElectricalAngle:
    """Convert a phase-frame angle to the line frame: theta_l = theta_p + nu*pi/6"""
    _require_three_phase(n_phases)
    if angle.frame is not Frame.PHASE:
        raise FrameError("phase_to_line expects a phase-frame angle")
    return ElectricalAngle(wrap(angle.value + angle.polarity * THETA_0), Frame.LINE, angle.polarity)


def line_to_phase(angle: ElectricalAngle, n_phases: int = 3) -> ElectricalAngle:
    """Convert a line-frame angle to the phase frame: theta_p = theta_l - nu*pi/6"""
    _require_three_phase(n_phases)
    if angle.frame is not Frame.LINE:
        raise FrameError("line_to_phase expects a line-frame angle")
    return ElectricalAngle(wrap(angle.value - angle.polarity * THETA_0), Frame.PHASE, angle.polarity)


def line_grid_to_phase(thetas: np.ndarray, polarity: int = 1, n_phases: int = 3) -> np.ndarray:
    """Convert a grid of line-frame angles to phase-frame angles"""
    _require_three_phase(n_phases)
    if polarity not in (1, -1):
        raise DomainError(f"polarity must be +1 or -1, got {polarity}")
    return wrap_array(np.asarray(thetas, dtype=float) - polarity * THETA_0)
