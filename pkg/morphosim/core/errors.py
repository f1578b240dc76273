"""Error types raised by the simulation toolkit"""

from typing import Optional, Sequence


class MorphosimError(Exception):
    """Base class for every toolkit error"""


class IntegrationDivergenceError(MorphosimError, ArithmeticError):
    """A step produced NaN or Inf."""

    def __init__(self, t: float, y: Sequence[float], step: Optional[int] = None):
        self.t = float(t)
        self.y = [float(v) for v in y]
        self.step = step
        where = f"t={self.t:.6g}"
        if step is not None:
            where += f", step={step}"
        super().__init__(f"Integration diverged at {where}: y={self.y}")


class DegenerateRadiusError(MorphosimError, ValueError):
    """Oscillator radius too small for the frequency-adaptation term"""


class GapRangeError(MorphosimError, ValueError):
    """Magnetic spring gap outside the model's valid range"""


class SeriesTooShortError(MorphosimError, ValueError):
    """Not enough samples for a spectrum"""


class NonUniformSamplingError(MorphosimError, ValueError):
    """Timestamps of a loaded trace are not evenly spaced"""


class EmptyBandError(MorphosimError, ValueError):
    """No spectrum bin inside the requested band"""


class NoOscillationError(MorphosimError, ValueError):
    """Signal does not cross zero often enough to define an envelope"""


class HarmonicAboveNyquistError(MorphosimError, ValueError):
    """Requested harmonic lies above the Nyquist frequency"""


class AllRestartsDivergedError(MorphosimError, RuntimeError):
    """Every optimizer restart hit a diverging simulation"""


class UnknownChannelError(MorphosimError, KeyError):
    """Requested channel is not recorded in the trace"""
