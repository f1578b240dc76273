"""Frequency-domain and envelope analysis of recorded traces"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.signal import detrend, get_window

from morphosim.core.errors import (
    EmptyBandError,
    HarmonicAboveNyquistError,
    NoOscillationError,
    SeriesTooShortError,
)
from morphosim.core.timeseries import TimeSeries
from morphosim.utils.logging_config import get_logger

logger = get_logger(__name__)

MIN_SPECTRUM_SAMPLES = 16
WINDOWS = ("none", "hann")


@dataclass(frozen=True)
class Spectrum:
    """
    Single-sided amplitude spectrum.

    Args:
        freqs: Uniform grid from 0 Hz up to Nyquist
        mags: Amplitude in the units of the analysed channel
        n_samples: Samples in the analysed signal (before zero padding)
        n_fft: Transform length after zero padding
        window: Window name used
    """
    freqs: np.ndarray = field(repr=False)
    mags: np.ndarray = field(repr=False)
    n_samples: int
    n_fft: int
    window: str = "hann"

    def __post_init__(self):
        if len(self.freqs) != len(self.mags):
            raise ValueError("freqs and mags must have equal length")
        if np.any(self.mags < 0):
            raise ValueError("magnitudes must be non-negative")

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    @property
    def nyquist(self) -> float:
        return float(self.freqs[-1])

    def variance(self) -> float:
        """
        Signal variance recovered from the magnitudes (Parseval).

        Exact only for the rectangular window; the DC bin is empty because the
        mean is removed before the transform.
        """
        interior = np.sum(self.mags[1:-1] ** 2)
        edge = 2.0 * self.mags[-1] ** 2
        return float(self.n_samples / (2.0 * self.n_fft) * (interior + edge))


@dataclass(frozen=True)
class Envelope:
    """Oscillation peak amplitudes, one per half cycle, in time order"""
    times: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.times)


def _next_power_of_two(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def spectrum(ts: TimeSeries, channel: str, window: str = "hann") -> Spectrum:
    """
    Amplitude spectrum of one channel.

    The mean is removed, the window applied, and the result zero-padded to
    the next power of two. A pure tone of amplitude a shows up as a peak of
    height a (up to scalloping).

    Args:
        ts: Uniformly sampled trace
        channel: Channel to analyse
        window: "none" (rectangular) or "hann"

    Returns:
        Spectrum from 0 Hz to Nyquist

    Raises:
        SeriesTooShortError: fewer than 16 samples
    """
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got '{window}'")
    x = np.asarray(ts.column(channel), dtype=float)
    n = x.size
    if n < MIN_SPECTRUM_SAMPLES:
        raise SeriesTooShortError(
            f"spectrum needs at least {MIN_SPECTRUM_SAMPLES} samples, got {n}"
        )

    x = x - x.mean()
    w = np.ones(n) if window == "none" else get_window("hann", n)
    n_fft = _next_power_of_two(n)
    coeffs = np.fft.rfft(x * w, n=n_fft)
    mags = np.abs(coeffs) / np.sum(w)
    mags[1:-1] *= 2.0
    freqs = np.fft.rfftfreq(n_fft, d=ts.dt)
    return Spectrum(freqs=freqs, mags=mags, n_samples=n, n_fft=n_fft, window=window)


def _refine_peak(sp: Spectrum, index: int) -> Tuple[float, float]:
    """Parabolic fit on log-magnitude around ``index``: (frequency, magnitude)."""
    if index <= 0 or index >= len(sp.mags) - 1:
        return float(sp.freqs[index]), float(sp.mags[index])
    tiny = np.finfo(float).tiny
    a, b, c = np.log(np.maximum(sp.mags[index - 1:index + 2], tiny))
    denom = a - 2.0 * b + c
    if denom >= 0:
        return float(sp.freqs[index]), float(sp.mags[index])
    delta = 0.5 * (a - c) / denom
    log_peak = b - 0.25 * (a - c) * delta
    return float(sp.freqs[index] + delta * sp.bin_width), float(np.exp(log_peak))


def dominant_frequency(sp: Spectrum, band: Tuple[float, float]) -> float:
    """
    Frequency of the strongest peak inside ``band``.

    Raises:
        EmptyBandError: no bin falls inside the band
    """
    f_lo, f_hi = band
    in_band = np.flatnonzero((sp.freqs >= f_lo) & (sp.freqs <= f_hi))
    if in_band.size == 0:
        raise EmptyBandError(
            f"band [{f_lo}, {f_hi}] Hz holds no bins (grid 0..{sp.nyquist:.6g} Hz)"
        )
    index = int(in_band[np.argmax(sp.mags[in_band])])
    frequency, _ = _refine_peak(sp, index)
    return frequency


def amplitude_envelope(ts: TimeSeries, channel: str) -> Envelope:
    """
    Peak |value| of the mean-removed channel in every complete half cycle.

    A half cycle runs between consecutive zero crossings; the partial cycles
    before the first and after the last crossing are dropped.

    Raises:
        NoOscillationError: fewer than two zero crossings
    """
    x = detrend(np.asarray(ts.column(channel), dtype=float), type="constant")
    negative = np.signbit(x)
    crossings = np.flatnonzero(negative[1:] != negative[:-1]) + 1
    if crossings.size < 2:
        raise NoOscillationError(
            f"channel '{channel}' crosses zero {crossings.size} time(s), need at least 2"
        )

    t = ts.times
    times: List[float] = []
    amplitudes: List[float] = []
    for start, stop in zip(crossings[:-1], crossings[1:]):
        peak = start + int(np.argmax(np.abs(x[start:stop])))
        times.append(float(t[peak]))
        amplitudes.append(float(abs(x[peak])))
    return Envelope(times=np.array(times), amplitudes=np.array(amplitudes))


def envelope_at(env: Envelope, t: float) -> float:
    """Envelope linearly interpolated at ``t`` (held constant past either end)."""
    return float(np.interp(t, env.times, env.amplitudes))


def harmonic_ratios(sp: Spectrum, f1: float, n: int) -> List[float]:
    """
    Magnitude ratios mag(k*f1) / mag(f1) for k = 2..n.

    Each harmonic magnitude is the refined peak within two bins of k*f1, so a
    slightly mis-estimated f1 still lands on its lines.

    Raises:
        HarmonicAboveNyquistError: n*f1 beyond the Nyquist frequency
    """
    if f1 <= 0:
        raise ValueError(f"fundamental must be positive, got {f1}")
    if n < 2:
        return []
    if n * f1 > sp.nyquist:
        raise HarmonicAboveNyquistError(
            f"harmonic {n} x {f1:.6g} Hz exceeds Nyquist {sp.nyquist:.6g} Hz"
        )

    def magnitude_near(f: float) -> float:
        centre = int(round(f / sp.bin_width))
        lo = max(centre - 2, 0)
        hi = min(centre + 2, len(sp.mags) - 1)
        index = lo + int(np.argmax(sp.mags[lo:hi + 1]))
        return _refine_peak(sp, index)[1]

    fundamental = magnitude_near(f1)
    if fundamental <= 0:
        raise ValueError(f"no energy at the fundamental {f1:.6g} Hz")
    ratios = [magnitude_near(k * f1) / fundamental for k in range(2, n + 1)]
    logger.debug(f"🧮 Harmonic ratios at f1={f1:.4g} Hz: {[f'{r:.3g}' for r in ratios]}")
    return ratios
