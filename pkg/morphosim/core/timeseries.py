"""Uniformly sampled multi-channel signal and the integrator configuration"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from morphosim.core.errors import UnknownChannelError


@dataclass(frozen=True)
class TimeSeries:
    """
    Uniformly sampled signal: row k is the sample at ``t0 + k * dt``.

    Args:
        t0: Time of the first row (s)
        dt: Sampling interval (s)
        channels: Unique channel names, one per column
        samples: Matrix of finite reals, rows = time steps, columns = channels
    """
    t0: float
    dt: float
    channels: Tuple[str, ...]
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        channels = tuple(self.channels)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", channels)

        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if len(set(channels)) != len(channels):
            raise ValueError(f"channel names must be unique: {channels}")
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ValueError("a time series needs at least one row")
        if samples.shape[1] != len(channels):
            raise ValueError(
                f"{samples.shape[1]} columns but {len(channels)} channel names"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("time series samples must be finite")
        samples.setflags(write=False)

    @classmethod
    def from_columns(cls, t0: float, dt: float, columns: Dict[str, Sequence[float]]) -> "TimeSeries":
        """Build a series from named, equally long columns (insertion order kept)."""
        names = list(columns)
        matrix = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
        return cls(t0=t0, dt=dt, channels=tuple(names), samples=matrix)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self) - 1)

    def column(self, name: str) -> np.ndarray:
        """Return one channel as a 1-D array."""
        try:
            index = self.channels.index(name)
        except ValueError:
            raise UnknownChannelError(f"unknown channel '{name}', have {list(self.channels)}") from None
        return self.samples[:, index]

    def window(self, t_lo: float, t_hi: float) -> "TimeSeries":
        """
        Rows with ``t_lo <= t < t_hi``.

        Raises:
            ValueError: if the window selects no rows
        """
        t = self.times
        # Slack far below one sample keeps boundary rows stable under rounding
        eps = 0.5 * self.dt * 1e-6
        mask = (t >= t_lo - eps) & (t < t_hi - eps)
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            raise ValueError(f"window [{t_lo}, {t_hi}) selects no samples")
        return TimeSeries(
            t0=float(t[rows[0]]),
            dt=self.dt,
            channels=self.channels,
            samples=self.samples[rows[0]:rows[-1] + 1],
        )

    def with_columns(self, columns: Dict[str, Sequence[float]]) -> "TimeSeries":
        """Copy of this series with extra channels appended."""
        merged: Dict[str, Sequence[float]] = {
            name: self.samples[:, i] for i, name in enumerate(self.channels)
        }
        merged.update(columns)
        return TimeSeries.from_columns(self.t0, self.dt, merged)

    def select(self, names: List[str]) -> "TimeSeries":
        """Copy restricted to (and reordered as) ``names``."""
        return TimeSeries.from_columns(self.t0, self.dt, {n: self.column(n) for n in names})


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Fixed-step integration settings.

    Args:
        dt: Step size (s)
        t_end: Integration horizon measured from t0 (s)
        record_stride: Record every k-th step
    """
    dt: float = 1e-4
    t_end: float = 20.0
    record_stride: int = 10

    def __post_init__(self):
        if not (0 < self.dt <= self.t_end):
            raise ValueError(f"need 0 < dt <= t_end, got dt={self.dt}, t_end={self.t_end}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    @property
    def n_recorded_steps(self) -> int:
        """Steps actually taken: n_steps rounded up to a whole number of strides."""
        stride = int(self.record_stride)
        return -(-self.n_steps // stride) * stride

    @property
    def sample_interval(self) -> float:
        return self.dt * self.record_stride
