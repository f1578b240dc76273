"""Fixed-step classical Runge-Kutta integration"""

from typing import Callable, Optional, Sequence

import numpy as np

from morphosim.core.errors import IntegrationDivergenceError
from morphosim.core.timeseries import IntegratorConfig, TimeSeries

VectorField = Callable[[float, np.ndarray], np.ndarray]


def step_rk4(rhs: VectorField, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    """
    Advance ``y`` from ``t`` to ``t + dt`` with one classical RK4 step.

    Args:
        rhs: Vector field f(t, y)
        y: State vector at t
        t: Current time (s)
        dt: Step size (s)

    Returns:
        State vector at t + dt

    Raises:
        IntegrationDivergenceError: if the new state is not finite
    """
    half = 0.5 * dt
    k1 = rhs(t, y)
    k2 = rhs(t + half, y + half * k1)
    k3 = rhs(t + half, y + half * k2)
    k4 = rhs(t + dt, y + dt * k3)
    y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise IntegrationDivergenceError(t + dt, y_next)
    return y_next


def integrate(
    rhs: VectorField,
    y0: Sequence[float],
    cfg: IntegratorConfig,
    channels: Optional[Sequence[str]] = None,
    t0: float = 0.0,
) -> TimeSeries:
    """
    Integrate ``rhs`` from ``y0`` and record every ``cfg.record_stride``-th step.

    Step k is taken at ``t0 + k * dt`` (never by accumulating dt), so identical
    inputs give byte-identical samples. When the stride does not divide the
    step count the run continues to the next recorded step, so the last row
    lies at or just after t_end.

    Args:
        rhs: Vector field f(t, y)
        y0: Initial state
        cfg: Step size, horizon and recording stride
        channels: Column names (default y0, y1, ...)
        t0: Start time (s)

    Returns:
        TimeSeries whose rows are the recorded states

    Raises:
        IntegrationDivergenceError: with the failing step index
    """
    y = np.array(y0, dtype=float)
    if y.ndim != 1:
        raise ValueError("initial state must be a vector")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"initial state must be finite, got {y.tolist()}")
    names = tuple(channels) if channels is not None else tuple(f"y{i}" for i in range(y.size))
    if len(names) != y.size:
        raise ValueError(f"{len(names)} channel names for a state of size {y.size}")

    n_steps = cfg.n_recorded_steps
    stride = int(cfg.record_stride)
    samples = np.empty((n_steps // stride + 1, y.size))
    samples[0] = y
    row = 1
    dt = cfg.dt
    for k in range(n_steps):
        t = t0 + k * dt
        try:
            y = step_rk4(rhs, y, t, dt)
        except IntegrationDivergenceError as exc:
            raise IntegrationDivergenceError(exc.t, exc.y, step=k + 1) from exc
        if (k + 1) % stride == 0:
            samples[row] = y
            row += 1

    return TimeSeries(t0=t0, dt=dt * stride, channels=names, samples=samples)
