"""
Spectral - Single-sided amplitude spectra of duty and switched waveforms

Rectangular window only: callers capture an integer number of fundamental
cycles so that harmonics land exactly on bins.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from app.errors import DomainError

logger = logging.getLogger(__name__)

# Relative tolerance for the uniform-spacing check on time stamps
SPACING_RTOL = 1e-6


@dataclass(frozen=True)
class Spectrum:
    """
    Single-sided amplitude spectrum

    A sinusoid A*sin(2*pi*f*t) on a bin reports amplitude A at f; the DC bin
    reports the mean value. `coefficients` holds the complex values with the
    same scaling, before taking magnitudes.
    """
    freqs: np.ndarray
    mags: np.ndarray
    resolution: float
    coefficients: np.ndarray
    n_samples: int

    @property
    def nyquist(self) -> float:
        return float(self.freqs[-1])

    def bin_of(self, frequency: float) -> int:
        return int(round(frequency / self.resolution))

    def mean_square(self) -> float:
        """Mean square of the time series recovered from the amplitudes (Parseval)"""
        power = self.mags ** 2 / 2.0
        power[0] = self.mags[0] ** 2
        if self.n_samples % 2 == 0:
            power[-1] = self.mags[-1] ** 2
        return float(power.sum())


def analyze(samples: Sequence[float], sample_rate: float,
            times: Optional[Sequence[float]] = None) -> Spectrum:
    """
    Amplitude spectrum of a uniformly sampled series

    Args:
        samples: Time series
        sample_rate: Samples per second
        times: Optional sample instants, checked for uniform spacing

    Raises:
        DomainError: For fewer than two samples, a non-positive rate or non-uniform spacing
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DomainError("spectrum needs a one-dimensional series of at least 2 samples")
    if not sample_rate > 0.0:
        raise DomainError(f"sample_rate must be positive, got {sample_rate}")
    if times is not None:
        _check_uniform(np.asarray(times, dtype=float), len(x), sample_rate)

    n = len(x)
    coefficients = np.fft.rfft(x) * (2.0 / n)
    coefficients[0] /= 2.0
    if n % 2 == 0:
        coefficients[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    return Spectrum(
        freqs=freqs,
        mags=np.abs(coefficients),
        resolution=sample_rate / n,
        coefficients=coefficients,
        n_samples=n,
    )


def _check_uniform(times: np.ndarray, n: int, sample_rate: float) -> None:
    if len(times) != n:
        raise DomainError("times and samples differ in length")
    steps = np.diff(times)
    dt = 1.0 / sample_rate
    if not np.allclose(steps, dt, rtol=SPACING_RTOL, atol=0.0):
        raise DomainError("samples are not uniformly spaced at the given sample rate")


def harmonic(spec: Spectrum, fundamental: float, k: int) -> float:
    """
    Amplitude at the bin nearest k * fundamental

    Raises:
        DomainError: For negative k or a frequency beyond Nyquist
    """
    if k < 0:
        raise DomainError(f"harmonic order must be >= 0, got {k}")
    frequency = k * fundamental
    index = spec.bin_of(frequency)
    if index >= len(spec.mags):
        raise DomainError(f"{frequency} Hz lies beyond the Nyquist frequency {spec.nyquist} Hz")
    return float(spec.mags[index])


@dataclass(frozen=True)
class SwitchingComponent:
    """Dominant carrier-multiple group of a switched spectrum"""
    order: int
    frequency: float
    amplitude: float
    peak_frequency: float
    peak_amplitude: float
    groups: Dict[int, float] = field(default_factory=dict)


def dominant_switching_component(spec: Spectrum, f_sw: float, band: Tuple[int, int] = (1, 3),
                                 half_width: Optional[float] = None) -> SwitchingComponent:
    """
    Largest carrier-multiple group within the band

    Each group collects the bins within +/- half_width of k * f_sw
    (default f_sw / 4, i.e. a quarter of the carrier ratio in fundamental
    orders) and is measured as the root-sum-square of their amplitudes.

    Args:
        spec: Spectrum to search
        f_sw: Switching frequency (Hz)
        band: Inclusive range of carrier multiples
        half_width: Sideband neighbourhood (Hz)

    Raises:
        DomainError: For an empty band or a spectrum that stops short of it
    """
    k_low, k_high = band
    if k_low < 1 or k_high < k_low:
        raise DomainError(f"empty switching band {band}")
    if not f_sw > 0.0:
        raise DomainError(f"switching frequency must be positive, got {f_sw}")
    half_width = f_sw / 4.0 if half_width is None else half_width
    if spec.nyquist < k_high * f_sw + half_width:
        raise DomainError("spectrum does not extend past the requested switching band")

    groups = {}
    peaks = {}
    for k in range(k_low, k_high + 1):
        mask = np.abs(spec.freqs - k * f_sw) <= half_width
        mags = spec.mags[mask]
        if mags.size == 0:
            groups[k] = 0.0
            peaks[k] = (k * f_sw, 0.0)
            continue
        groups[k] = float(np.sqrt(np.sum(mags ** 2)))
        index = int(np.argmax(mags))
        peaks[k] = (float(spec.freqs[mask][index]), float(mags[index]))

    order = max(groups, key=lambda k: groups[k])
    logger.debug("Switching-band groups %s, dominant order %d", groups, order)
    return SwitchingComponent(
        order=order,
        frequency=order * f_sw,
        amplitude=groups[order],
        peak_frequency=peaks[order][0],
        peak_amplitude=peaks[order][1],
        groups=groups,
    )
