"""Adaptive frequency oscillator driving a Duffing-type plant"""

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from morphosim.core.errors import DegenerateRadiusError, IntegrationDivergenceError
from morphosim.core.integrator import integrate
from morphosim.core.timeseries import IntegratorConfig, TimeSeries
from morphosim.services.analysis import amplitude_envelope, envelope_at
from morphosim.utils.logging_config import get_logger
from morphosim.utils.parallel import ordered_map

logger = get_logger(__name__)

MIN_RADIUS = 1e-12
COUPLED_CHANNELS = ("x", "v", "omega", "phi", "E")


@dataclass(frozen=True)
class AfoState:
    """Adaptive Hopf oscillator coordinates and its learned frequency (rad/s)"""
    x: float
    y: float
    omega: float

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class AfoParams:
    """
    Adaptive Hopf oscillator settings.

    Args:
        mu: Squared limit-cycle radius
        eps: Coupling strength of the input
        omega_init: Initial frequency (rad/s)
        input_gain: Scale (1/m) from plant position to oscillator input; a
            negative gain locks the oscillator in antiphase with the plant
    """
    mu: float = 0.01
    eps: float = 300.0
    omega_init: float = 1.1 * 2.0 * math.pi * 3.0
    input_gain: float = -0.02

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.omega_init <= 0:
            raise ValueError(f"omega_init must be positive, got {self.omega_init}")
        if not math.isfinite(self.input_gain):
            raise ValueError(f"input_gain must be finite, got {self.input_gain}")

    def initial_state(self) -> AfoState:
        return AfoState(x=math.sqrt(self.mu), y=0.0, omega=self.omega_init)


@dataclass(frozen=True)
class DuffingParams:
    """
    Forced oscillator x'' + d*x' + (2*pi*f0)^2*x + a3*x^3 = forcing.

    Args:
        damping: d (1/s)
        f0: Linear resonance (Hz)
        a3: Cubic stiffness per unit mass; 0 gives the linear plant
        A: Forcing amplitude per unit mass (m/s^2)
    """
    damping: float = 0.5
    f0: float = 3.0
    a3: float = 1.2e4
    A: float = 20.0

    def __post_init__(self):
        if self.damping < 0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if self.f0 <= 0:
            raise ValueError(f"f0 must be positive, got {self.f0}")
        if self.a3 < 0:
            raise ValueError(f"a3 must be >= 0, got {self.a3}")
        if self.A < 0:
            raise ValueError(f"forcing amplitude A must be >= 0, got {self.A}")

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.f0

    def linear(self) -> "DuffingParams":
        return replace(self, a3=0.0)


@dataclass(frozen=True)
class PlantState:
    """Initial plant position (m) and velocity (m/s)"""
    x0: float = 0.5
    v0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x0) and math.isfinite(self.v0)):
            raise ValueError("plant initial state must be finite")


def afo_derivatives(s: AfoState, signal: float, p: AfoParams) -> np.ndarray:
    """
    Time derivatives (x', y', omega') of the adaptive Hopf oscillator.

    Raises:
        DegenerateRadiusError: radius below 1e-12
    """
    radius = s.radius
    if radius < MIN_RADIUS:
        raise DegenerateRadiusError(f"AFO radius {radius:.3e} below {MIN_RADIUS:g}")
    growth = p.mu - s.x * s.x - s.y * s.y
    return np.array([
        growth * s.x - s.omega * s.y + p.eps * signal,
        growth * s.y + s.omega * s.x,
        -p.eps * signal * s.y / radius,
    ])


def duffing_derivatives(x: float, v: float, forcing: float, p: DuffingParams) -> np.ndarray:
    """(x', v') of the forced plant."""
    w0 = p.omega0
    return np.array([v, -p.damping * v - w0 * w0 * x - p.a3 * x ** 3 + forcing])


def mechanical_energy(x, v, p: DuffingParams):
    """E = v^2/2 + (2*pi*f0)^2 x^2/2 + a3 x^4/4 per unit mass (J/kg)."""
    w0 = p.omega0
    return 0.5 * np.square(v) + 0.5 * w0 * w0 * np.square(x) + 0.25 * p.a3 * np.power(x, 4)


def _coupled_rhs(ap: AfoParams, dp: DuffingParams):
    amp, gain = dp.A, ap.input_gain

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        x, v, ax, ay, omega = state
        afo = AfoState(ax, ay, omega)
        d_afo = afo_derivatives(afo, gain * x, ap)
        d_plant = duffing_derivatives(x, v, amp * ax / afo.radius, dp)
        return np.concatenate((d_plant, d_afo))

    return rhs


def run_coupled_loop(
    ap: AfoParams,
    dp: DuffingParams,
    icfg: IntegratorConfig,
    plant: PlantState = PlantState(),
) -> TimeSeries:
    """
    Integrate the plant forced by A*cos(phi), phi the AFO phase, while the AFO
    listens to the plant position scaled by ``ap.input_gain``.

    Returns:
        TimeSeries with channels x, v, omega, phi, E

    Raises:
        IntegrationDivergenceError: the joint state stops being finite
        DegenerateRadiusError: the oscillator collapses onto its origin
    """
    afo0 = ap.initial_state()
    logger.info(
        f"🧮 Coupled loop: f0={dp.f0:g} Hz, a3={dp.a3:g}, eps={ap.eps:g}, "
        f"omega_init={ap.omega_init:.4f} rad/s, t_end={icfg.t_end:g} s"
    )
    raw = integrate(
        _coupled_rhs(ap, dp),
        [plant.x0, plant.v0, afo0.x, afo0.y, afo0.omega],
        icfg,
        channels=("x", "v", "ax", "ay", "omega"),
    )
    x = raw.column("x")
    v = raw.column("v")
    trace = TimeSeries.from_columns(raw.t0, raw.dt, {
        "x": x,
        "v": v,
        "omega": raw.column("omega"),
        "phi": np.arctan2(raw.column("ay"), raw.column("ax")),
        "E": mechanical_energy(x, v, dp),
    })
    logger.debug(f"Coupled loop finished: final omega={trace.column('omega')[-1]:.4f} rad/s")
    return trace


def run_forced_reference(
    dp: DuffingParams,
    f_drive: float,
    icfg: IntegratorConfig,
    plant: PlantState = PlantState(),
) -> TimeSeries:
    """Plant driven by A*cos(2*pi*f_drive*t) with no oscillator in the loop."""
    if f_drive <= 0:
        raise ValueError(f"f_drive must be positive, got {f_drive}")
    w_drive = 2.0 * math.pi * f_drive
    w0_sq = dp.omega0 ** 2
    damping, a3, amp = dp.damping, dp.a3, dp.A

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        x, v = state
        return np.array([v, -damping * v - w0_sq * x - a3 * x * x * x + amp * math.cos(w_drive * t)])

    raw = integrate(rhs, [plant.x0, plant.v0], icfg, channels=("x", "v"))
    x = raw.column("x")
    v = raw.column("v")
    phase = np.angle(np.exp(1j * w_drive * raw.times))
    return TimeSeries.from_columns(raw.t0, raw.dt, {
        "x": x,
        "v": v,
        "omega": np.full(len(raw), w_drive),
        "phi": phase,
        "E": mechanical_energy(x, v, dp),
    })


@dataclass(frozen=True)
class BasinCell:
    """Outcome of one initial frequency in the basin sweep"""
    omega_init: float
    converged: bool
    omega_final: float
    diverged: bool = False


def _basin_cell(job: Tuple[float, AfoParams, DuffingParams, IntegratorConfig, PlantState, float]) -> BasinCell:
    omega_init, ap, dp, icfg, plant, tol = job
    target = dp.omega0
    try:
        trace = run_coupled_loop(replace(ap, omega_init=omega_init), dp, icfg, plant)
    except (IntegrationDivergenceError, DegenerateRadiusError) as e:
        logger.warning(f"⚠️ [SWEEP] omega_init={omega_init:.4f} diverged: {e}")
        return BasinCell(omega_init=omega_init, converged=False, omega_final=math.nan, diverged=True)
    omega = trace.column("omega")
    tail = omega[int(0.8 * len(omega)):]
    omega_final = float(np.mean(tail)) if tail.size else float(omega[-1])
    converged = abs(omega_final - target) / target < tol
    logger.info(
        f"🔁 [SWEEP] omega_init={omega_init:.4f} -> omega_final={omega_final:.4f} "
        f"({'converged' if converged else 'not converged'})"
    )
    return BasinCell(omega_init=omega_init, converged=converged, omega_final=omega_final)


def basin_sweep(
    omega_inits: Sequence[float],
    ap: AfoParams,
    dp: DuffingParams,
    icfg: IntegratorConfig,
    tol: float = 0.02,
    plant: PlantState = PlantState(),
    workers: Optional[int] = None,
) -> List[BasinCell]:
    """
    Which initial AFO frequencies end up at the plant resonance.

    The final frequency is the mean of omega over the last 20% of the run.
    Diverging cells are recorded and the sweep continues.

    Args:
        omega_inits: Initial AFO frequencies (rad/s)
        ap: Oscillator settings (omega_init is overridden per cell)
        dp: Plant settings; the sweep normally uses the linear plant
        icfg: Integration settings for every cell
        tol: Relative tolerance on |omega_final - 2*pi*f0|
        plant: Plant initial conditions
        workers: Worker processes (None reads MORPHOSIM_WORKERS)

    Returns:
        One BasinCell per grid point, in grid order
    """
    grid = [float(w) for w in omega_inits]
    if not grid:
        raise ValueError("basin sweep needs a non-empty omega_init grid")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    logger.info(f"🔁 [SWEEP] Basin sweep over {len(grid)} initial frequencies")
    cells = ordered_map(_basin_cell, [(w, ap, dp, icfg, plant, tol) for w in grid], workers)
    converged = sum(cell.converged for cell in cells)
    logger.info(f"✅ [SWEEP] Basin sweep done: {converged}/{len(cells)} converged")
    return cells


@dataclass(frozen=True)
class EnergyTransferRow:
    """Cubic vs linear plant under the same oscillator start"""
    omega_init: float
    envelope_cubic_early: float
    envelope_cubic_end: float
    envelope_linear_early: float
    envelope_linear_end: float
    energy_cubic: float
    energy_linear: float

    @property
    def ratio(self) -> float:
        if self.energy_linear == 0:
            return math.inf
        return self.energy_cubic / self.energy_linear


def _energy_transfer_row(job: Tuple[float, AfoParams, DuffingParams, IntegratorConfig, PlantState, float]) -> EnergyTransferRow:
    omega_init, ap, dp, icfg, plant, t_early = job
    ap_cell = replace(ap, omega_init=omega_init)
    cubic = run_coupled_loop(ap_cell, dp, icfg, plant)
    linear = run_coupled_loop(ap_cell, dp.linear(), icfg, plant)
    env_cubic = amplitude_envelope(cubic, "x")
    env_linear = amplitude_envelope(linear, "x")
    row = EnergyTransferRow(
        omega_init=omega_init,
        envelope_cubic_early=envelope_at(env_cubic, t_early),
        envelope_cubic_end=envelope_at(env_cubic, cubic.t_end),
        envelope_linear_early=envelope_at(env_linear, t_early),
        envelope_linear_end=envelope_at(env_linear, linear.t_end),
        energy_cubic=float(cubic.column("E")[-1]),
        energy_linear=float(linear.column("E")[-1]),
    )
    logger.info(f"🔁 [SWEEP] omega_init={omega_init:.4f}: E_cubic/E_linear={row.ratio:.3g}")
    return row


def energy_transfer_experiment(
    ap: AfoParams,
    dp: DuffingParams,
    omega_inits: Sequence[float],
    icfg: IntegratorConfig,
    plant: PlantState = PlantState(),
    t_early: float = 2.0,
    workers: Optional[int] = None,
) -> List[EnergyTransferRow]:
    """
    Run the cubic plant and its linear counterpart from several initial
    oscillator frequencies and compare the energy they end with.

    ``dp`` describes the cubic plant; the linear one has a3 = 0.
    """
    grid = [float(w) for w in omega_inits]
    if not grid:
        raise ValueError("energy transfer experiment needs at least one omega_init")
    if not (0 <= t_early < icfg.t_end):
        raise ValueError(f"t_early must lie within [0, {icfg.t_end}), got {t_early}")
    rows = ordered_map(_energy_transfer_row, [(w, ap, dp, icfg, plant, t_early) for w in grid], workers)
    wins = sum(row.ratio > 5 for row in rows)
    logger.info(f"✅ Energy transfer: ratio > 5 for {wins}/{len(rows)} initial frequencies")
    return rows
